// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/oracle.hpp"

#include <cstdio>

#include "entryfuzz/bits.hpp"

// The entry-check suite below deliberately re-implements the rules from
// docs/checks.md as straight-line field inspections, independent of the
// validator module. Differential tests compare the two paths; any
// disagreement is a defect in one of them.

namespace efz::oracle {

using namespace efz::bits;
using caps::CapabilityProfile;
using caps::FeatureId;
using harness::TriggerKind;

namespace {

constexpr std::string_view kBugNames[kBugCount] = {
    "B1_MissingIa32ePaeCheck", "B2_NonCanonicalMsrLoad",
    "B3_InvalidEptpTripleFault", "B4_ActivityStateBlindCopy",
    "B5_LmePgInconsistency", "B6_VgifAssumption",
};

uint64_t fnv1a(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr uint64_t kFnvBasis = 0xcbf29ce484222325ull;

// L0's own host context, loaded into vmcs02 host fields on every entry.
struct L0Host {
  uint64_t cr0 = CR0_PE | CR0_NE | CR0_WP | CR0_ET | CR0_PG;
  uint64_t cr3 = 0x2000;
  uint64_t cr4 = CR4_VMXE | CR4_PAE;
  uint64_t rsp = 0xFFFF888000010000ull;
  uint64_t rip = 0xFFFFFFFF81000000ull;
  uint64_t efer = EFER_SCE | EFER_LME | EFER_LMA | EFER_NXE;
  uint64_t pat = 0x0007040600070406ull;
};

bool pat_valid(uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    uint64_t b = (v >> (8 * i)) & 0xFF;
    if (b > 7 || b == 2 || b == 3) return false;
  }
  return true;
}

}  // namespace

std::string_view bug_name(BugId b) {
  return kBugNames[static_cast<int>(b)];
}

int bug_from_name(std::string_view name) {
  for (int i = 0; i < kBugCount; ++i)
    if (kBugNames[i] == name) return i;
  return -1;
}

const std::vector<BugInfo>& seeded_bug_catalog() {
  static const std::vector<BugInfo> t = {
      {BugId::B1_MissingIa32ePaeCheck, kBugNames[0], CK_GUEST_IA32E_PAE,
       BugDetection::Crash,
       "IA-32e entry with guest CR4.PAE clear while nested paging is off: "
       "out-of-bounds write during the shadow page walk"},
      {BugId::B2_NonCanonicalMsrLoad, kBugNames[1], CK_MSRLOAD_CANONICAL,
       BugDetection::Crash,
       "MSR-load slot carrying a non-canonical address: general protection "
       "fault while loading it"},
      {BugId::B3_InvalidEptpTripleFault, kBugNames[2], CK_CTRL_EPTP,
       BugDetection::DiagnosticPattern,
       "invalid EPT pointer accepted at entry: spurious triple-fault exit "
       "before the guest runs"},
      {BugId::B4_ActivityStateBlindCopy, kBugNames[3], CK_GUEST_ACTIVITY,
       BugDetection::Crash,
       "activity state 3 (wait-for-SIPI) copied blindly into vmcs02: host "
       "hang"},
      {BugId::B5_LmePgInconsistency, kBugNames[4], CK_GUEST_EFER,
       BugDetection::DiagnosticPattern,
       "EFER.LME set while CR0.PG clear: virtual interrupt hardware "
       "enabled without support"},
      {BugId::B6_VgifAssumption, kBugNames[5], CK_GUEST_INTERRUPTIBILITY,
       BugDetection::DiagnosticPattern,
       "rejected entry with the virtual-GIF feature on and the virtual "
       "interrupt flag clear: assertion in the exit-injection path"},
  };
  return t;
}

OracleConfig apply_profile(const CapabilityProfile& p) {
  OracleConfig cfg;
  cfg.profile = p;
  cfg.seeded_bugs = 0;
  cfg.silent_round = true;
  return cfg;
}

uint32_t all_bugs() { return (1u << kBugCount) - 1; }

int CoverageMap::distinct() const {
  int n = 0;
  for (uint8_t h : hits_) n += h != 0;
  return n;
}

void CoverageMap::merge(const CoverageMap& other) {
  for (size_t i = 0; i < hits_.size(); ++i)
    if (other.hits_[i] > hits_[i]) hits_[i] = other.hits_[i];
}

uint16_t edge_slot(uint32_t domain, uint32_t a, uint32_t b) {
  uint64_t h = fnv1a(kFnvBasis, (uint64_t(domain) << 48) |
                                    (uint64_t(a) << 16) | b);
  return static_cast<uint16_t>(h ^ (h >> 16));
}

Oracle::Oracle(OracleConfig cfg) : cfg_(std::move(cfg)) {}

void Oracle::edge(uint32_t domain, uint32_t a, uint32_t b) {
  uint16_t slot = edge_slot(domain, a, b);
  if (stamp_[slot] != gen_) {
    stamp_[slot] = gen_;
    hits_[slot] = 1;
    touched_.push_back(slot);
  } else if (hits_[slot] != 0xFF) {
    ++hits_[slot];
  }
}

CoverageMap Oracle::coverage_snapshot() const {
  CoverageMap m;
  for (uint16_t slot : touched_) m.raw()[slot] = hits_[slot];
  return m;
}

void Oracle::reset_coverage() {
  ++gen_;
  touched_.clear();
}

void Oracle::reset_machine() {
  vmx_on_ = region_clear_ = loaded_ = launched_ = false;
  dirty_ = true;
  cached_accept_ = false;
  diags_.clear();
  last_path_hash_ = 0;
}

void Oracle::reconfigure(OracleConfig cfg) {
  cfg_ = std::move(cfg);
  reset_machine();
  reset_coverage();
}

void Oracle::diag(BugId b, std::string_view message) {
  std::string line = "BUG:";
  line += bug_name(b);
  line += ':';
  line += message;
  diags_.push_back(std::move(line));
}

OpStatus Oracle::vmxon() {
  bool launched_phase = launched_;
  if (vmx_on_) {
    edge(ED_OP, 0, 1 + (launched_phase ? 8 : 0));
    return OpStatus::VmFail;
  }
  vmx_on_ = true;
  edge(ED_OP, 0, 0 + (launched_phase ? 8 : 0));
  return OpStatus::Ok;
}

OpStatus Oracle::vmclear() {
  int ph = launched_ ? 8 : 0;
  if (!vmx_on_) {
    edge(ED_OP, 1, 1 + ph);
    return OpStatus::VmFail;
  }
  region_clear_ = true;
  loaded_ = false;
  launched_ = false;
  dirty_ = true;
  cached_accept_ = false;
  edge(ED_OP, 1, 0 + ph);
  return OpStatus::Ok;
}

OpStatus Oracle::vmptrld(const VmState& backing) {
  int ph = launched_ ? 8 : 0;
  if (!vmx_on_ || !region_clear_) {
    edge(ED_OP, 2, 1 + ph);
    return OpStatus::VmFail;
  }
  staged_ = backing;
  loaded_ = true;
  dirty_ = true;
  cached_accept_ = false;
  edge(ED_OP, 2, 0 + ph);
  return OpStatus::Ok;
}

OpStatus Oracle::vmwrite(uint16_t field, uint64_t value) {
  int ph = launched_ ? 8 : 0;
  if (!loaded_ || field >= kFieldCount) {
    edge(ED_OP, 3, 1 + ph);
    return OpStatus::VmFail;
  }
  staged_.write(field, value);
  dirty_ = true;
  edge(ED_OP, 3, 0 + ph);
  return OpStatus::Ok;
}

OpStatus Oracle::vmread(uint16_t field, uint64_t* out) {
  int ph = launched_ ? 8 : 0;
  if (!loaded_ || field >= kFieldCount) {
    edge(ED_OP, 6, 1 + ph);
    return OpStatus::VmFail;
  }
  if (out) *out = staged_.read(field);
  edge(ED_OP, 6, 0 + ph);
  return OpStatus::Ok;
}

// ---- Entry checking ------------------------------------------------------

struct Oracle::CheckOutcome {
  enum class Result : uint8_t { Pass, Reject, Crash } result = Result::Pass;
  CheckId failed = CK_SEQUENCE_ERROR;
  BugId bug = BugId::B1_MissingIa32ePaeCheck;
  std::string crash_diag;
  bool b2_load_pending = false;
  bool b3_triple_fault_pending = false;
  bool b5_avic_pending = false;
};

// Scans every rule in catalog order against the staged VMCS12. Stops at
// the first rejection. `staged` picks up silent corrections in place.
Oracle::CheckOutcome Oracle::check_state(VmState& st,
                                         std::vector<uint16_t>* silent_fixes,
                                         std::vector<uint16_t>* path) {
  CheckOutcome out;
  const CapabilityProfile& p = cfg_.profile;
  bool rejected = false;

  auto visit = [&](CheckId ck, int branch) {
    edge(ED_CHECK, ck, branch);
    if (path) path->push_back(static_cast<uint16_t>(ck * 4 + branch));
  };
  auto reject = [&](CheckId ck) {
    visit(ck, 1);
    out.result = CheckOutcome::Result::Reject;
    out.failed = ck;
    rejected = true;
  };
  auto pass = [&](CheckId ck) { visit(ck, 0); };
  auto skipped_by_bug = [&](CheckId ck) { visit(ck, 3); };
  auto crash = [&](BugId b, std::string d) {
    edge(ED_BUG, static_cast<uint32_t>(b), 0);
    out.result = CheckOutcome::Result::Crash;
    out.bug = b;
    out.crash_diag = std::move(d);
  };

  // Control-field mask handling: stray must-0 bits always reject; missing
  // must-1 bits are silently set when silent rounding is on.
  auto control_mask = [&](CheckId ck, uint16_t field,
                          const caps::ControlMask& m) {
    uint64_t v = st.read(field);
    if (v & ~m.allowed1) {
      reject(ck);
      return false;
    }
    uint64_t missing = m.allowed0 & ~v;
    if (missing) {
      if (!cfg_.silent_round) {
        reject(ck);
        return false;
      }
      st.write(field, v | missing);
      if (silent_fixes) silent_fixes->push_back(field);
      edge(ED_ENTRY, 1, field);
    }
    pass(ck);
    return true;
  };

  const uint64_t paw_mask = (1ull << p.phys_addr_width) - 1;

  // -- VM-execution and entry/exit controls --

  if (control_mask(CK_CTRL_PIN, F_PIN_BASED_CONTROLS, p.pin)) {
    uint64_t pin = st.read(F_PIN_BASED_CONTROLS);
    if ((pin & PIN_VIRTUAL_NMI) && !(pin & PIN_NMI_EXITING))
      reject(CK_CTRL_PIN);
  }
  if (rejected) goto done;

  control_mask(CK_CTRL_PRIMARY, F_PRIMARY_PROC_CONTROLS, p.primary);
  if (rejected) goto done;

  {
    bool sec_active =
        st.read(F_PRIMARY_PROC_CONTROLS) & PRIM_ACTIVATE_SECONDARY;
    uint64_t sec = st.read(F_SECONDARY_PROC_CONTROLS);
    if (sec_active) {
      if (sec & ~p.secondary.allowed1) {
        reject(CK_CTRL_SECONDARY);
        goto done;
      }
      pass(CK_CTRL_SECONDARY);
      if ((sec & SEC_ENABLE_VPID) &&
          st.read(F_VIRTUAL_PROCESSOR_ID) == 0) {
        reject(CK_CTRL_SECONDARY_GATING);
        goto done;
      }
      pass(CK_CTRL_SECONDARY_GATING);
    } else {
      visit(CK_CTRL_SECONDARY, 2);
      if (sec != 0) {
        reject(CK_CTRL_SECONDARY_GATING);
        goto done;
      }
      pass(CK_CTRL_SECONDARY_GATING);
    }
  }

  control_mask(CK_CTRL_ENTRY, F_VM_ENTRY_CONTROLS, p.entry);
  if (rejected) goto done;
  control_mask(CK_CTRL_EXIT, F_VM_EXIT_CONTROLS, p.exit);
  if (rejected) goto done;

  {
    bool ok = st.read(F_POSTED_INT_VECTOR) <= 0xFF &&
              !(st.read(F_POSTED_INT_VECTOR) & ~0xFFull) &&
              !(st.read(F_CR0_GUEST_HOST_MASK) & ~0xFFFFFFFFull) &&
              !(st.read(F_CR4_GUEST_HOST_MASK) & ~0xFFFFFFFFull) &&
              !(st.read(F_CR0_READ_SHADOW) & ~0xFFFFFFFFull) &&
              !(st.read(F_CR4_READ_SHADOW) & ~0xFFFFFFFFull) &&
              !(st.read(F_TPR_THRESHOLD) & ~0xFull) &&
              st.read(F_VMFUNC_CONTROLS) == 0;
    for (uint16_t f = F_RESERVED_CTL_00; ok && f <= F_RESERVED_CTL_19; ++f)
      ok = st.read(f) == 0;
    for (uint16_t f = F_RESERVED_XCTL_00; ok && f <= F_RESERVED_XCTL_22; ++f)
      ok = st.read(f) == 0;
    if (!ok) {
      reject(CK_CTRL_RESERVED_MBZ);
      goto done;
    }
    pass(CK_CTRL_RESERVED_MBZ);
  }

  {
    auto aligned = [&](uint16_t f, uint64_t align_mask) {
      uint64_t v = st.read(f);
      return (v & align_mask) == 0 && (v & ~paw_mask) == 0;
    };
    bool ok = aligned(F_IO_BITMAP_A_ADDR, 0xFFF) &&
              aligned(F_IO_BITMAP_B_ADDR, 0xFFF) &&
              aligned(F_MSR_BITMAP_ADDR, 0xFFF) &&
              aligned(F_EXIT_MSR_STORE_ADDR, 0xF) &&
              aligned(F_EXIT_MSR_LOAD_ADDR, 0xF);
    uint64_t prim = st.read(F_PRIMARY_PROC_CONTROLS);
    uint64_t sec = (prim & PRIM_ACTIVATE_SECONDARY)
                       ? st.read(F_SECONDARY_PROC_CONTROLS)
                       : 0;
    if (ok && (sec & SEC_APIC_ACCESS)) ok = aligned(F_APIC_ACCESS_ADDR, 0xFFF);
    if (ok && (prim & PRIM_TPR_SHADOW)) ok = aligned(F_VIRTUAL_APIC_ADDR, 0xFFF);
    if (ok && (st.read(F_PIN_BASED_CONTROLS) & PIN_POSTED_INTERRUPTS))
      ok = aligned(F_POSTED_INT_DESC_ADDR, 0xF);
    ok = ok && st.read(F_CR3_TARGET_COUNT) <= CR3_TARGET_CAPACITY &&
         !(st.read(F_CR3_TARGET_VALUE0) & ~paw_mask) &&
         !(st.read(F_CR3_TARGET_VALUE1) & ~paw_mask) &&
         st.read(F_EXIT_MSR_STORE_COUNT) <= MSR_LOAD_CAPACITY &&
         st.read(F_EXIT_MSR_LOAD_COUNT) <= MSR_LOAD_CAPACITY;
    if (!ok) {
      reject(CK_CTRL_ADDR_LIMITS);
      goto done;
    }
    pass(CK_CTRL_ADDR_LIMITS);
  }

  {
    bool sec_active =
        st.read(F_PRIMARY_PROC_CONTROLS) & PRIM_ACTIVATE_SECONDARY;
    bool ept_on = p.has(FeatureId::NestedPaging) && sec_active &&
                  (st.read(F_SECONDARY_PROC_CONTROLS) & SEC_ENABLE_EPT);
    if (!ept_on) {
      // Skipped at the gate: the shadow-paging path when the feature is
      // off, the control-off path otherwise.
      visit(CK_CTRL_EPTP, p.has(FeatureId::NestedPaging) ? 2 : 4);
    } else {
      uint64_t eptp = st.read(F_EPT_POINTER);
      uint64_t memtype = eptp & EPTP_MEMTYPE_MASK;
      bool valid = (memtype == EPTP_MEMTYPE_UC ||
                    memtype == EPTP_MEMTYPE_WB) &&
                   (eptp & EPTP_WALK_MASK) == EPTP_WALK_4LEVEL &&
                   !(eptp & 0xF80ull) && !(eptp & ~paw_mask);
      if (cfg_.has_bug(BugId::B3_InvalidEptpTripleFault)) {
        skipped_by_bug(CK_CTRL_EPTP);
        if (!valid) out.b3_triple_fault_pending = true;
      } else if (!valid) {
        reject(CK_CTRL_EPTP);
        goto done;
      } else {
        pass(CK_CTRL_EPTP);
      }
    }
  }

  {
    bool ok = st.read(F_ENTRY_INSTR_LEN) <= 0xF;
    uint64_t info = st.read(F_ENTRY_INTR_INFO);
    if (ok && (info & INTR_INFO_VALID)) {
      uint64_t type = (info & INTR_INFO_TYPE_MASK) >> INTR_INFO_TYPE_SHIFT;
      ok = !(info & INTR_INFO_RESERVED) && type != 1 &&
           (type != 2 || (info & INTR_INFO_VECTOR_MASK) == 2);
    }
    if (!ok) {
      reject(CK_ENTRY_EVENT_INJECT);
      goto done;
    }
    pass(CK_ENTRY_EVENT_INJECT);
  }

  if (st.read(F_ENTRY_MSR_LOAD_COUNT) > MSR_LOAD_CAPACITY) {
    reject(CK_MSRLOAD_COUNT);
    goto done;
  }
  pass(CK_MSRLOAD_COUNT);

  {
    uint64_t n = st.read(F_ENTRY_MSR_LOAD_COUNT);
    if (n > MSR_LOAD_CAPACITY) n = MSR_LOAD_CAPACITY;
    bool ok = true;
    for (uint64_t i = 0; ok && i < n; ++i) {
      uint32_t idx = static_cast<uint32_t>(
          st.read(static_cast<uint16_t>(F_ENTRY_MSR0_INDEX + 2 * i)));
      bool known = false;
      for (uint32_t m : MSR_LOAD_TABLE) known = known || m == idx;
      ok = known;
    }
    if (!ok) {
      reject(CK_MSRLOAD_INDEX);
      goto done;
    }
    pass(CK_MSRLOAD_INDEX);

    bool canon_ok = true;
    bool canon_bad = false;
    for (uint64_t i = 0; i < n; ++i) {
      uint32_t idx = static_cast<uint32_t>(
          st.read(static_cast<uint16_t>(F_ENTRY_MSR0_INDEX + 2 * i)));
      uint64_t val =
          st.read(static_cast<uint16_t>(F_ENTRY_MSR0_VALUE + 2 * i));
      if (msr_value_canonical_required(idx) && !is_canonical(val)) {
        canon_ok = false;
        canon_bad = true;
      }
    }
    if (cfg_.has_bug(BugId::B2_NonCanonicalMsrLoad)) {
      skipped_by_bug(CK_MSRLOAD_CANONICAL);
      if (canon_bad) out.b2_load_pending = true;
    } else if (!canon_ok) {
      reject(CK_MSRLOAD_CANONICAL);
      goto done;
    } else {
      pass(CK_MSRLOAD_CANONICAL);
    }
  }

  // -- Host-state area --

  {
    uint64_t cr0 = st.read(F_HOST_CR0);
    if ((cr0 & ~CR0_DEFINED) ||
        (cr0 & (CR0_PE | CR0_NE | CR0_PG)) != (CR0_PE | CR0_NE | CR0_PG)) {
      reject(CK_HOST_CR0);
      goto done;
    }
    pass(CK_HOST_CR0);

    uint64_t cr4 = st.read(F_HOST_CR4);
    bool long_host = st.read(F_VM_EXIT_CONTROLS) & EXIT_HOST_ADDR_SPACE;
    if ((cr4 & ~CR4_DEFINED) || !(cr4 & CR4_VMXE) ||
        (long_host && !(cr4 & CR4_PAE))) {
      reject(CK_HOST_CR4);
      goto done;
    }
    pass(CK_HOST_CR4);

    if (st.read(F_HOST_CR3) & ~paw_mask) {
      reject(CK_HOST_CR3_WIDTH);
      goto done;
    }
    pass(CK_HOST_CR3_WIDTH);

    bool canon = true;
    for (uint16_t f : {F_HOST_RSP, F_HOST_RIP, F_HOST_FS_BASE,
                       F_HOST_GS_BASE, F_HOST_TR_BASE, F_HOST_GDTR_BASE,
                       F_HOST_IDTR_BASE, F_HOST_SYSENTER_ESP,
                       F_HOST_SYSENTER_EIP})
      canon = canon && is_canonical(st.read(f));
    if (!canon) {
      reject(CK_HOST_CANONICAL);
      goto done;
    }
    pass(CK_HOST_CANONICAL);

    bool sel_ok = true;
    for (uint16_t f = F_HOST_ES_SELECTOR; f <= F_HOST_TR_SELECTOR; ++f)
      sel_ok = sel_ok && !(st.read(f) & 0x7);
    sel_ok = sel_ok && st.read(F_HOST_TR_SELECTOR) != 0;
    if (!sel_ok) {
      reject(CK_HOST_SELECTORS);
      goto done;
    }
    pass(CK_HOST_SELECTORS);

    uint64_t efer = st.read(F_HOST_EFER);
    bool lme = efer & EFER_LME, lma = efer & EFER_LMA;
    if ((efer & ~EFER_DEFINED) || lme != long_host || lma != long_host) {
      reject(CK_HOST_EFER);
      goto done;
    }
    pass(CK_HOST_EFER);

    if (!pat_valid(st.read(F_HOST_PAT))) {
      reject(CK_HOST_PAT);
      goto done;
    }
    pass(CK_HOST_PAT);
  }

  // -- Guest-state area --

  {
    uint64_t cr0 = st.read(F_GUEST_CR0);
    uint64_t cr4 = st.read(F_GUEST_CR4);
    if ((cr0 & ~CR0_DEFINED) || !(cr0 & CR0_ET) || (cr4 & ~CR4_DEFINED) ||
        (st.read(F_GUEST_CR3) & ~paw_mask)) {
      reject(CK_GUEST_CR_RESERVED);
      goto done;
    }
    pass(CK_GUEST_CR_RESERVED);

    if ((cr0 & CR0_PG) && !(cr0 & CR0_PE)) {
      reject(CK_GUEST_CR0_PG_PE);
      goto done;
    }
    pass(CK_GUEST_CR0_PG_PE);

    bool sec_active =
        st.read(F_PRIMARY_PROC_CONTROLS) & PRIM_ACTIVATE_SECONDARY;
    bool ug = p.has(FeatureId::UnrestrictedGuest) && sec_active &&
              (st.read(F_SECONDARY_PROC_CONTROLS) & SEC_UNRESTRICTED_GUEST);
    if (!ug && !(cr0 & CR0_PE)) {
      reject(CK_GUEST_CR0_PE_UG);
      goto done;
    }
    pass(CK_GUEST_CR0_PE_UG);

    if ((st.read(F_GUEST_DR7) & ~0xFFFFFFFFull) ||
        (st.read(F_GUEST_PENDING_DBG) & ~PENDING_DBG_DEFINED)) {
      reject(CK_GUEST_DEBUG_RESERVED);
      goto done;
    }
    pass(CK_GUEST_DEBUG_RESERVED);

    bool ia32e = st.read(F_VM_ENTRY_CONTROLS) & ENTRY_IA32E_GUEST;
    bool ept_on = p.has(FeatureId::NestedPaging) && sec_active &&
                  (st.read(F_SECONDARY_PROC_CONTROLS) & SEC_ENABLE_EPT);
    uint64_t efer = st.read(F_GUEST_EFER);
    if (cfg_.has_bug(BugId::B1_MissingIa32ePaeCheck)) {
      skipped_by_bug(CK_GUEST_IA32E_PAE);
      if (ia32e && !(cr4 & CR4_PAE) && !ept_on) {
        crash(BugId::B1_MissingIa32ePaeCheck,
              "UBSAN: array-index-out-of-bounds in shadow walk level");
        goto done;
      }
    } else if (ia32e && (!(cr4 & CR4_PAE) || !(efer & EFER_LME))) {
      reject(CK_GUEST_IA32E_PAE);
      goto done;
    } else {
      pass(CK_GUEST_IA32E_PAE);
    }

    if (cfg_.has_bug(BugId::B5_LmePgInconsistency)) {
      skipped_by_bug(CK_GUEST_EFER);
      if ((efer & EFER_LME) && !(cr0 & CR0_PG)) out.b5_avic_pending = true;
    } else {
      bool lma_expect = (efer & EFER_LME) && (cr0 & CR0_PG);
      if ((efer & ~EFER_DEFINED) ||
          bool(efer & EFER_LMA) != lma_expect) {
        reject(CK_GUEST_EFER);
        goto done;
      }
      pass(CK_GUEST_EFER);
    }

    if (!pat_valid(st.read(F_GUEST_PAT))) {
      reject(CK_GUEST_PAT);
      goto done;
    }
    pass(CK_GUEST_PAT);

    uint64_t rfl = st.read(F_GUEST_RFLAGS);
    if ((rfl & ~RFLAGS_DEFINED) || !(rfl & RFLAGS_FIXED1)) {
      reject(CK_GUEST_RFLAGS);
      goto done;
    }
    pass(CK_GUEST_RFLAGS);

    uint64_t act = st.read(F_GUEST_ACTIVITY_STATE);
    if (cfg_.has_bug(BugId::B4_ActivityStateBlindCopy)) {
      // Blind copy: no membership check, no silent correction.
      skipped_by_bug(CK_GUEST_ACTIVITY);
      if (act == ACTIVITY_WAIT_SIPI) {
        crash(BugId::B4_ActivityStateBlindCopy,
              "host hang: wait-for-sipi copied into vmcs02");
        goto done;
      }
    } else {
      bool member = act == ACTIVITY_ACTIVE ||
                    (act == ACTIVITY_HLT &&
                     p.has(FeatureId::ActivityStateHlt)) ||
                    (act == ACTIVITY_SHUTDOWN &&
                     p.has(FeatureId::ActivityStateShutdown)) ||
                    (act == ACTIVITY_WAIT_SIPI &&
                     p.has(FeatureId::ActivityStateWaitForSipi));
      if (!member) {
        if (!cfg_.silent_round) {
          reject(CK_GUEST_ACTIVITY);
          goto done;
        }
        st.write(F_GUEST_ACTIVITY_STATE, ACTIVITY_ACTIVE);
        if (silent_fixes) silent_fixes->push_back(F_GUEST_ACTIVITY_STATE);
        edge(ED_ENTRY, 1, F_GUEST_ACTIVITY_STATE);
      }
      pass(CK_GUEST_ACTIVITY);
    }

    uint64_t may = INTR_BLOCK_STI | INTR_BLOCK_MOV_SS | INTR_BLOCK_SMI |
                   INTR_BLOCK_NMI;
    if (p.has(FeatureId::VirtualGif)) may |= INTR_VGIF;
    uint64_t intr = st.read(F_GUEST_INTERRUPTIBILITY);
    bool intr_ok = !(intr & ~may) &&
                   !((intr & INTR_BLOCK_STI) && (intr & INTR_BLOCK_MOV_SS));
    if (st.read(F_GUEST_ACTIVITY_STATE) != ACTIVITY_ACTIVE)
      intr_ok = intr_ok && !(intr & (INTR_BLOCK_STI | INTR_BLOCK_MOV_SS));
    if (!intr_ok) {
      reject(CK_GUEST_INTERRUPTIBILITY);
      goto done;
    }
    pass(CK_GUEST_INTERRUPTIBILITY);

    const uint64_t ar_reserved = AR_RESERVED_11_8 | AR_RESERVED_HIGH;
    auto ar_of = [&](uint16_t sel_field) {
      return st.read(static_cast<uint16_t>(sel_field + 3));
    };
    auto usable = [&](uint16_t sel_field) {
      return !(ar_of(sel_field) & AR_UNUSABLE);
    };

    uint64_t cs_ar = ar_of(F_GUEST_CS_SELECTOR);
    bool ar_ok =
        !(cs_ar & (ar_reserved | AR_UNUSABLE)) &&
        (cs_ar & (AR_TYPE_ACCESSED | AR_TYPE_CODE | AR_S | AR_P)) ==
            (AR_TYPE_ACCESSED | AR_TYPE_CODE | AR_S | AR_P);
    for (uint16_t sf : {F_GUEST_ES_SELECTOR, F_GUEST_SS_SELECTOR,
                        F_GUEST_DS_SELECTOR, F_GUEST_FS_SELECTOR,
                        F_GUEST_GS_SELECTOR}) {
      if (!usable(sf)) continue;
      uint64_t ar = ar_of(sf);
      ar_ok = ar_ok && !(ar & ar_reserved) &&
              (ar & (AR_TYPE_ACCESSED | AR_S | AR_P)) ==
                  (AR_TYPE_ACCESSED | AR_S | AR_P);
    }
    if (usable(F_GUEST_LDTR_SELECTOR)) {
      uint64_t ar = ar_of(F_GUEST_LDTR_SELECTOR);
      ar_ok = ar_ok && !(ar & (ar_reserved | AR_S | 0xD)) &&
              (ar & (0x2 | AR_P)) == (0x2 | AR_P);
    }
    if (!ar_ok) {
      reject(CK_GUEST_SEG_AR);
      goto done;
    }
    pass(CK_GUEST_SEG_AR);

    uint64_t tr_ar = ar_of(F_GUEST_TR_SELECTOR);
    if ((tr_ar & (ar_reserved | AR_UNUSABLE | AR_S | 0x4)) ||
        (tr_ar & (0x3 | AR_P)) != (0x3 | AR_P)) {
      reject(CK_GUEST_TR);
      goto done;
    }
    pass(CK_GUEST_TR);

    bool base_ok = true;
    if (ia32e) {
      for (uint16_t f :
           {F_GUEST_FS_BASE, F_GUEST_GS_BASE, F_GUEST_TR_BASE,
            F_GUEST_GDTR_BASE, F_GUEST_IDTR_BASE, F_GUEST_SYSENTER_ESP,
            F_GUEST_SYSENTER_EIP})
        base_ok = base_ok && is_canonical(st.read(f));
    } else {
      auto low32 = [&](uint16_t f) { return !(st.read(f) & ~0xFFFFFFFFull); };
      base_ok = low32(F_GUEST_CS_BASE) && low32(F_GUEST_TR_BASE) &&
                low32(F_GUEST_GDTR_BASE) && low32(F_GUEST_IDTR_BASE) &&
                low32(F_GUEST_SYSENTER_ESP) && low32(F_GUEST_SYSENTER_EIP);
      for (uint16_t sf : {F_GUEST_ES_SELECTOR, F_GUEST_SS_SELECTOR,
                          F_GUEST_DS_SELECTOR, F_GUEST_FS_SELECTOR,
                          F_GUEST_GS_SELECTOR})
        if (usable(sf))
          base_ok = base_ok && low32(static_cast<uint16_t>(sf + 1));
      if (usable(F_GUEST_LDTR_SELECTOR))
        base_ok = base_ok && low32(F_GUEST_LDTR_BASE);
    }
    base_ok = base_ok && !(st.read(F_GUEST_GDTR_LIMIT) & ~0xFFFFull) &&
              !(st.read(F_GUEST_IDTR_LIMIT) & ~0xFFFFull);
    if (!base_ok) {
      reject(CK_GUEST_SEG_BASE);
      goto done;
    }
    pass(CK_GUEST_SEG_BASE);

    auto limit_ok = [&](uint16_t sel_field) {
      uint64_t limit = st.read(static_cast<uint16_t>(sel_field + 2));
      if (ar_of(sel_field) & AR_G) return (limit & 0xFFF) == 0xFFF;
      return (limit & 0xFFF00000ull) == 0;
    };
    bool lim_ok = limit_ok(F_GUEST_CS_SELECTOR) &&
                  limit_ok(F_GUEST_TR_SELECTOR);
    for (uint16_t sf : {F_GUEST_ES_SELECTOR, F_GUEST_SS_SELECTOR,
                        F_GUEST_DS_SELECTOR, F_GUEST_FS_SELECTOR,
                        F_GUEST_GS_SELECTOR, F_GUEST_LDTR_SELECTOR})
      if (usable(sf)) lim_ok = lim_ok && limit_ok(sf);
    if (!lim_ok) {
      reject(CK_GUEST_SEG_LIMIT);
      goto done;
    }
    pass(CK_GUEST_SEG_LIMIT);

    if (st.read(F_GUEST_VMCS_LINK_PTR) != ~0ull) {
      reject(CK_GUEST_LINK_PTR);
      goto done;
    }
    pass(CK_GUEST_LINK_PTR);

    uint64_t rip = st.read(F_GUEST_RIP);
    bool rip_ok = ia32e ? is_canonical(rip) : !(rip & ~0xFFFFFFFFull);
    if (!rip_ok) {
      reject(CK_GUEST_RIP);
      goto done;
    }
    pass(CK_GUEST_RIP);

    uint64_t ist = st.read(F_GUEST_INTERRUPT_STATUS);
    bool misc_ok =
        (p.has(FeatureId::PostedInterrupts) ? true : ist == 0) &&
        st.read(F_GUEST_PML_INDEX) <= 0x1FF &&
        (p.has(FeatureId::PreemptionTimer) ||
         st.read(F_GUEST_PREEMPTION_TIMER) == 0);
    if (!misc_ok) {
      reject(CK_GUEST_MISC_RESERVED);
      goto done;
    }
    pass(CK_GUEST_MISC_RESERVED);
  }

done:
  return out;
}

VmState Oracle::translate_to_vmcs02(const VmState& vmcs12) const {
  const CapabilityProfile& p = cfg_.profile;
  VmState v02 = vmcs12;
  // Controls merged with the capability masks.
  for (uint16_t f : {F_PIN_BASED_CONTROLS, F_PRIMARY_PROC_CONTROLS,
                     F_SECONDARY_PROC_CONTROLS, F_VM_ENTRY_CONTROLS,
                     F_VM_EXIT_CONTROLS}) {
    const caps::ControlMask* m = p.control_mask(f);
    v02.write(f, (vmcs12.read(f) & m->allowed1) | m->allowed0);
  }
  // Host area belongs to L0.
  L0Host h;
  v02.write(F_HOST_CR0, h.cr0);
  v02.write(F_HOST_CR3, h.cr3);
  v02.write(F_HOST_CR4, h.cr4);
  v02.write(F_HOST_RSP, h.rsp);
  v02.write(F_HOST_RIP, h.rip);
  v02.write(F_HOST_ES_SELECTOR, 0x18);
  v02.write(F_HOST_CS_SELECTOR, 0x10);
  v02.write(F_HOST_SS_SELECTOR, 0x18);
  v02.write(F_HOST_DS_SELECTOR, 0x18);
  v02.write(F_HOST_FS_SELECTOR, 0x18);
  v02.write(F_HOST_GS_SELECTOR, 0x18);
  v02.write(F_HOST_TR_SELECTOR, 0x40);
  v02.write(F_HOST_FS_BASE, 0xFFFF888000003000ull);
  v02.write(F_HOST_GS_BASE, 0xFFFF88800000A000ull);
  v02.write(F_HOST_TR_BASE, 0xFFFF888000004000ull);
  v02.write(F_HOST_GDTR_BASE, 0xFFFF888000001000ull);
  v02.write(F_HOST_IDTR_BASE, 0xFFFF888000002000ull);
  v02.write(F_HOST_SYSENTER_CS, 0x10);
  v02.write(F_HOST_SYSENTER_ESP, 0xFFFF888000008000ull);
  v02.write(F_HOST_SYSENTER_EIP, 0xFFFFFFFF81002000ull);
  v02.write(F_HOST_EFER, h.efer);
  v02.write(F_HOST_PAT, h.pat);
  return v02;
}

EntryResult Oracle::run_entry_checks() {
  EntryResult r;
  edge(ED_ENTRY, 0, 0);
  // Capability dispatch: entry emulation consults every feature flag.
  for (int f = 0; f < caps::kFeatureCount; ++f)
    edge(ED_ENTRY, 6, uint32_t(f) * 2 + (cfg_.profile.feature_bits >> f & 1));

  VmState work = staged_;
  std::vector<uint16_t> silent;
  std::vector<uint16_t> path;
  CheckOutcome out = check_state(work, &silent, &path);

  uint64_t h = kFnvBasis;
  for (uint16_t tok : path) h = fnv1a(h, tok);
  r.path_hash = h;
  last_path_hash_ = h;

  if (out.result == CheckOutcome::Result::Crash) {
    r.status = EntryStatus::Crashed;
    r.bug = out.bug;
    r.diagnostic = out.crash_diag;
    diag(out.bug, out.crash_diag);
    return r;
  }

  if (out.result == CheckOutcome::Result::Reject) {
    r.status = EntryStatus::Rejected;
    r.reject_check = out.failed;
    // Exit-injection path back to L1; a seeded flaw assumes the virtual
    // GIF is set whenever the feature is on.
    bool vgif_assert = false;
    if (cfg_.has_bug(BugId::B6_VgifAssumption) &&
        cfg_.profile.has(FeatureId::VirtualGif) &&
        !(staged_.read(F_GUEST_INTERRUPTIBILITY) & INTR_VGIF)) {
      vgif_assert = true;
      diag(BugId::B6_VgifAssumption, "assertion failed: vgif");
      edge(ED_BUG, static_cast<uint32_t>(BugId::B6_VgifAssumption), 0);
    }
    edge(ED_ENTRY, 3, vgif_assert ? 1 : 0);
    return r;
  }

  // All checks passed; perform the MSR loads.
  if (out.b2_load_pending) {
    uint64_t n = work.read(F_ENTRY_MSR_LOAD_COUNT);
    if (n > MSR_LOAD_CAPACITY) n = MSR_LOAD_CAPACITY;
    uint64_t bad = 0;
    for (uint64_t i = 0; i < n; ++i) {
      uint32_t idx = static_cast<uint32_t>(
          work.read(static_cast<uint16_t>(F_ENTRY_MSR0_INDEX + 2 * i)));
      uint64_t val =
          work.read(static_cast<uint16_t>(F_ENTRY_MSR0_VALUE + 2 * i));
      if (msr_value_canonical_required(idx) && !is_canonical(val)) {
        bad = val;
        break;
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "general protection fault, probably for non-canonical "
                  "address 0x%llx",
                  static_cast<unsigned long long>(bad));
    r.status = EntryStatus::Crashed;
    r.bug = BugId::B2_NonCanonicalMsrLoad;
    r.diagnostic = buf;
    diag(r.bug, buf);
    edge(ED_BUG, static_cast<uint32_t>(r.bug), 0);
    return r;
  }

  r.status = EntryStatus::Accepted;
  r.silently_rounded = std::move(silent);
  r.vmcs02 = translate_to_vmcs02(work);
  // The vmcs02 build takes distinct paths per paging/UG/VPID mode.
  bool ia32e = work.read(F_VM_ENTRY_CONTROLS) & ENTRY_IA32E_GUEST;
  bool sec_on =
      work.read(F_PRIMARY_PROC_CONTROLS) & PRIM_ACTIVATE_SECONDARY;
  uint64_t sec = sec_on ? work.read(F_SECONDARY_PROC_CONTROLS) : 0;
  uint32_t flavor =
      (ia32e ? 1 : 0) |
      (cfg_.profile.has(FeatureId::NestedPaging) && (sec & SEC_ENABLE_EPT)
           ? 2
           : 0) |
      ((sec & SEC_UNRESTRICTED_GUEST) ? 4 : 0) |
      ((sec & SEC_ENABLE_VPID) ? 8 : 0);
  edge(ED_ENTRY, 2, flavor);

  if (out.b3_triple_fault_pending) {
    r.spurious_triple_fault = true;
    diag(BugId::B3_InvalidEptpTripleFault,
         "assertion failed: mmu root check on invalid eptp");
    edge(ED_ENTRY, 5, 0);
  }
  if (out.b5_avic_pending) {
    diag(BugId::B5_LmePgInconsistency,
         "assertion failed: virtual interrupt controller enabled without "
         "support");
    edge(ED_ENTRY, 5, 1);
  }

  staged_ = work;  // silently-corrected values become visible to vmread
  effective_ = r.vmcs02;
  dirty_ = false;
  cached_accept_ = true;
  return r;
}

EntryResult Oracle::vmlaunch() {
  EntryResult r;
  if (!loaded_ || launched_) {
    edge(ED_OP, 4, 1 + (launched_ ? 8 : 0));
    r.status = EntryStatus::Rejected;
    r.reject_check = CK_SEQUENCE_ERROR;
    return r;
  }
  edge(ED_OP, 4, 0);
  r = run_entry_checks();
  if (r.status == EntryStatus::Accepted) {
    launched_ = true;
    region_clear_ = false;
    edge(ED_OP, 4, 2);
  } else {
    edge(ED_OP, 4, r.status == EntryStatus::Rejected ? 3 : 4);
  }
  return r;
}

EntryResult Oracle::vmresume() {
  EntryResult r;
  if (!loaded_ || !launched_) {
    edge(ED_OP, 5, 1 + (launched_ ? 8 : 0));
    r.status = EntryStatus::Rejected;
    r.reject_check = CK_SEQUENCE_ERROR;
    return r;
  }
  if (!dirty_ && cached_accept_) {
    edge(ED_ENTRY, 4, 0);
    r.status = EntryStatus::Accepted;
    r.vmcs02 = effective_;
    return r;
  }
  edge(ED_OP, 5, 0);
  r = run_entry_checks();
  edge(ED_OP, 5, r.status == EntryStatus::Accepted  ? 2
                 : r.status == EntryStatus::Rejected ? 3
                                                     : 4);
  if (r.status != EntryStatus::Accepted) launched_ = false;
  return r;
}

EntryResult Oracle::vm_entry(const VmState& vmcs12, const OracleConfig& cfg) {
  Oracle o(cfg);
  o.vmxon();
  o.vmclear();
  o.vmptrld(vmcs12);
  return o.vmlaunch();
}

ExitEvent Oracle::l2_trigger(TriggerKind kind, uint8_t sub,
                             uint64_t operand) {
  ExitEvent ev;
  ev.kind = ExitEvent::Kind::NoExit;
  if (!launched_) return ev;

  uint64_t pin = effective_.read(F_PIN_BASED_CONTROLS);
  uint64_t prim = effective_.read(F_PRIMARY_PROC_CONTROLS);
  uint64_t sec = (prim & PRIM_ACTIVATE_SECONDARY)
                     ? effective_.read(F_SECONDARY_PROC_CONTROLS)
                     : 0;
  (void)pin;

  auto mark = [&](uint32_t subclass, bool exits) {
    edge(ED_TRIGGER, static_cast<uint32_t>(kind) * 16 + subclass,
         exits ? 1 : 0);
    ev.kind = exits ? ExitEvent::Kind::ExitToL1 : ExitEvent::Kind::NoExit;
  };

  switch (kind) {
    case TriggerKind::ControlRegisterAccess: {
      uint32_t cr = sub % 5;  // cr0, cr2, cr3, cr4, cr8
      bool exits = false;
      switch (cr) {
        case 0:
          exits = ((operand ^ effective_.read(F_CR0_READ_SHADOW)) &
                   effective_.read(F_CR0_GUEST_HOST_MASK)) != 0;
          break;
        case 1:
          exits = false;  // cr2 never intercepted
          break;
        case 2: {
          bool match = operand == effective_.read(F_CR3_TARGET_VALUE0) ||
                       operand == effective_.read(F_CR3_TARGET_VALUE1);
          uint64_t ntargets = effective_.read(F_CR3_TARGET_COUNT);
          exits = (prim & PRIM_CR3_LOAD_EXITING) &&
                  !(match && ntargets != 0);
          break;
        }
        case 3:
          exits = ((operand ^ effective_.read(F_CR4_READ_SHADOW)) &
                   effective_.read(F_CR4_GUEST_HOST_MASK)) != 0;
          break;
        case 4:
          exits = prim & PRIM_CR8_LOAD_EXITING;
          break;
      }
      mark(cr, exits);
      break;
    }
    case TriggerKind::DebugRegisterAccess:
      mark(sub & 0x7, prim & PRIM_MOV_DR_EXITING);
      break;
    case TriggerKind::IoPort: {
      uint16_t port = static_cast<uint16_t>(operand);
      bool exits;
      if (prim & PRIM_UNCOND_IO_EXITING)
        exits = true;
      else if (prim & PRIM_USE_IO_BITMAPS)
        exits = ((port ^ (port >> 8)) & 1) != 0;  // modeled bitmap content
      else
        exits = false;
      mark(port & 0x3, exits);
      break;
    }
    case TriggerKind::MsrRead:
    case TriggerKind::MsrWrite: {
      uint32_t msr = MSR_LOAD_TABLE[sub % 8];
      bool exits;
      if (prim & PRIM_USE_MSR_BITMAPS)
        exits = ((msr >> 1) ^ msr) & 1;  // modeled bitmap content
      else
        exits = true;
      if (kind == TriggerKind::MsrWrite &&
          msr_value_canonical_required(msr) && !is_canonical(operand)) {
        if (cfg_.has_bug(BugId::B2_NonCanonicalMsrLoad)) {
          char buf[96];
          std::snprintf(buf, sizeof buf,
                        "general protection fault, probably for "
                        "non-canonical address 0x%llx",
                        static_cast<unsigned long long>(operand));
          diag(BugId::B2_NonCanonicalMsrLoad, buf);
          edge(ED_BUG,
               static_cast<uint32_t>(BugId::B2_NonCanonicalMsrLoad), 0);
          last_path_hash_ =
              fnv1a(last_path_hash_, 0x5000 + static_cast<int>(kind) * 16 +
                                         (sub % 8));
          ev.kind = ExitEvent::Kind::Crashed;
          ev.bug = BugId::B2_NonCanonicalMsrLoad;
          ev.diagnostic = buf;
          return ev;
        }
        // Without the bug the write is refused with a guest fault.
        mark((sub % 8) + 8, true);
        break;
      }
      mark(sub % 8, exits);
      break;
    }
    case TriggerKind::CpuId:
      mark(0, true);  // cpuid exits unconditionally
      break;
    case TriggerKind::Halt:
      mark(0, prim & PRIM_HLT_EXITING);
      break;
    case TriggerKind::ReadTsc:
      mark(0, prim & PRIM_RDTSC_EXITING);
      break;
    case TriggerKind::Pause:
      mark(0, prim & PRIM_PAUSE_EXITING);
      break;
    case TriggerKind::RdRand:
      mark(0, sec & SEC_RDRAND_EXITING);
      break;
    case TriggerKind::VmxInstruction:
      mark(sub & 0x3, true);  // nested VMX instructions always reach L1
      break;
  }
  return ev;
}

}  // namespace efz::oracle
