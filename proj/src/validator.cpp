// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/validator.hpp"

#include <cstdio>

#include "entryfuzz/bits.hpp"

namespace efz::vmcheck {

using namespace efz::bits;
using caps::CapabilityProfile;
using caps::FeatureId;

namespace {

struct Ctx {
  const CapabilityProfile& p;
  VmState& st;
  bool fix;
  ValidationReport* report;
  RoundingTrace* trace;
};

void note_violation(Ctx& c, CheckId check, std::initializer_list<uint16_t> fs,
                    uint64_t observed) {
  if (!c.report) return;
  Violation v;
  v.check = check;
  v.fields.assign(fs.begin(), fs.end());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=0x%llx",
                fs.size() ? catalog()[*fs.begin()].name.c_str() : "?",
                static_cast<unsigned long long>(observed));
  v.detail = buf;
  c.report->violations.push_back(std::move(v));
}

// Reports a violation and, in rounding mode, replaces the field value.
void correct(Ctx& c, CheckId check, uint16_t field, uint64_t fixed) {
  note_violation(c, check, {field}, c.st.read(field));
  if (!c.fix) return;
  c.st.write(field, fixed);
  if (c.trace) c.trace->corrections.emplace_back(check, field);
}

void mask_rule(Ctx& c, CheckId check, uint16_t field, uint64_t must1,
               uint64_t may1) {
  uint64_t v = c.st.read(field);
  if (core::mask_ok(v, must1, may1)) return;
  correct(c, check, field, core::apply_mask(v, must1, may1));
}

void canonical_rule(Ctx& c, CheckId check, uint16_t field) {
  uint64_t v = c.st.read(field);
  if (is_canonical(v)) return;
  correct(c, check, field, make_canonical(v));
}

void clamp_rule(Ctx& c, CheckId check, uint16_t field, uint64_t max) {
  uint64_t v = c.st.read(field);
  if (v <= max) return;
  correct(c, check, field, max);
}

uint64_t addr_limit_mask(const Ctx& c, uint64_t align_mask) {
  return ((1ull << c.p.phys_addr_width) - 1) & ~align_mask;
}

// ---- Control phase -------------------------------------------------------

void check_ctrl_pin(Ctx& c) {
  mask_rule(c, CK_CTRL_PIN, F_PIN_BASED_CONTROLS, c.p.pin.allowed0,
            c.p.pin.allowed1);
  uint64_t v = c.st.read(F_PIN_BASED_CONTROLS);
  if ((v & PIN_VIRTUAL_NMI) && !(v & PIN_NMI_EXITING))
    correct(c, CK_CTRL_PIN, F_PIN_BASED_CONTROLS, v | PIN_NMI_EXITING);
}

void check_ctrl_primary(Ctx& c) {
  mask_rule(c, CK_CTRL_PRIMARY, F_PRIMARY_PROC_CONTROLS, c.p.primary.allowed0,
            c.p.primary.allowed1);
}

bool secondary_active(const Ctx& c) {
  return c.st.read(F_PRIMARY_PROC_CONTROLS) & PRIM_ACTIVATE_SECONDARY;
}

void check_ctrl_secondary(Ctx& c) {
  if (!secondary_active(c)) return;  // gating check owns the inactive case
  mask_rule(c, CK_CTRL_SECONDARY, F_SECONDARY_PROC_CONTROLS,
            c.p.secondary.allowed0, c.p.secondary.allowed1);
}

void check_ctrl_secondary_gating(Ctx& c) {
  uint64_t sec = c.st.read(F_SECONDARY_PROC_CONTROLS);
  if (!secondary_active(c)) {
    if (sec != 0) correct(c, CK_CTRL_SECONDARY_GATING,
                          F_SECONDARY_PROC_CONTROLS, 0);
    return;
  }
  if ((sec & SEC_ENABLE_VPID) && c.st.read(F_VIRTUAL_PROCESSOR_ID) == 0)
    correct(c, CK_CTRL_SECONDARY_GATING, F_VIRTUAL_PROCESSOR_ID, 1);
}

void check_ctrl_entry(Ctx& c) {
  mask_rule(c, CK_CTRL_ENTRY, F_VM_ENTRY_CONTROLS, c.p.entry.allowed0,
            c.p.entry.allowed1);
}

void check_ctrl_exit(Ctx& c) {
  mask_rule(c, CK_CTRL_EXIT, F_VM_EXIT_CONTROLS, c.p.exit.allowed0,
            c.p.exit.allowed1);
}

void check_ctrl_reserved_mbz(Ctx& c) {
  auto mbz = [&](uint16_t f, uint64_t may1) {
    mask_rule(c, CK_CTRL_RESERVED_MBZ, f, 0, may1);
  };
  mbz(F_POSTED_INT_VECTOR, 0xFF);
  mbz(F_CR0_GUEST_HOST_MASK, 0xFFFFFFFF);
  mbz(F_CR4_GUEST_HOST_MASK, 0xFFFFFFFF);
  mbz(F_CR0_READ_SHADOW, 0xFFFFFFFF);
  mbz(F_CR4_READ_SHADOW, 0xFFFFFFFF);
  mbz(F_TPR_THRESHOLD, 0xF);
  mbz(F_VMFUNC_CONTROLS, 0);
  for (uint16_t f = F_RESERVED_CTL_00; f <= F_RESERVED_CTL_19; ++f)
    mbz(f, 0);
  for (uint16_t f = F_RESERVED_XCTL_00; f <= F_RESERVED_XCTL_22; ++f)
    mbz(f, 0);
}

void check_ctrl_addr_limits(Ctx& c) {
  const uint64_t page = addr_limit_mask(c, 0xFFF);
  const uint64_t para = addr_limit_mask(c, 0xF);
  auto addr = [&](uint16_t f, uint64_t may1) {
    mask_rule(c, CK_CTRL_ADDR_LIMITS, f, 0, may1);
  };
  addr(F_IO_BITMAP_A_ADDR, page);
  addr(F_IO_BITMAP_B_ADDR, page);
  addr(F_MSR_BITMAP_ADDR, page);
  addr(F_EXIT_MSR_STORE_ADDR, para);
  addr(F_EXIT_MSR_LOAD_ADDR, para);
  // Structure addresses checked only while the consuming control is on.
  uint64_t prim = c.st.read(F_PRIMARY_PROC_CONTROLS);
  uint64_t sec =
      secondary_active(c) ? c.st.read(F_SECONDARY_PROC_CONTROLS) : 0;
  if (sec & SEC_APIC_ACCESS) addr(F_APIC_ACCESS_ADDR, page);
  if (prim & PRIM_TPR_SHADOW) addr(F_VIRTUAL_APIC_ADDR, page);
  if (c.st.read(F_PIN_BASED_CONTROLS) & PIN_POSTED_INTERRUPTS)
    addr(F_POSTED_INT_DESC_ADDR, para);
  clamp_rule(c, CK_CTRL_ADDR_LIMITS, F_CR3_TARGET_COUNT, CR3_TARGET_CAPACITY);
  addr(F_CR3_TARGET_VALUE0, (1ull << c.p.phys_addr_width) - 1);
  addr(F_CR3_TARGET_VALUE1, (1ull << c.p.phys_addr_width) - 1);
  clamp_rule(c, CK_CTRL_ADDR_LIMITS, F_EXIT_MSR_STORE_COUNT,
             MSR_LOAD_CAPACITY);
  clamp_rule(c, CK_CTRL_ADDR_LIMITS, F_EXIT_MSR_LOAD_COUNT,
             MSR_LOAD_CAPACITY);
}

void check_ctrl_eptp(Ctx& c) {
  if (!c.p.has(FeatureId::NestedPaging)) return;
  if (!secondary_active(c)) return;
  if (!(c.st.read(F_SECONDARY_PROC_CONTROLS) & SEC_ENABLE_EPT)) return;
  uint64_t v = c.st.read(F_EPT_POINTER);
  uint64_t fixed = v;
  uint64_t memtype = fixed & EPTP_MEMTYPE_MASK;
  if (memtype != EPTP_MEMTYPE_UC && memtype != EPTP_MEMTYPE_WB)
    fixed = (fixed & ~EPTP_MEMTYPE_MASK) | EPTP_MEMTYPE_WB;
  if ((fixed & EPTP_WALK_MASK) != EPTP_WALK_4LEVEL)
    fixed = (fixed & ~EPTP_WALK_MASK) | EPTP_WALK_4LEVEL;
  uint64_t keep = EPTP_MEMTYPE_MASK | EPTP_WALK_MASK | EPTP_AD_FLAG |
                  (((1ull << c.p.phys_addr_width) - 1) & ~0xFFFull);
  fixed &= keep;
  if (fixed != v) correct(c, CK_CTRL_EPTP, F_EPT_POINTER, fixed);
}

void check_entry_event_inject(Ctx& c) {
  mask_rule(c, CK_ENTRY_EVENT_INJECT, F_ENTRY_INSTR_LEN, 0, 0xF);
  uint64_t v = c.st.read(F_ENTRY_INTR_INFO);
  if (!(v & INTR_INFO_VALID)) return;
  uint64_t fixed = v & ~INTR_INFO_RESERVED;
  uint64_t type = (fixed & INTR_INFO_TYPE_MASK) >> INTR_INFO_TYPE_SHIFT;
  if (type == 1) fixed &= ~(1ull << INTR_INFO_TYPE_SHIFT);  // type 1 reserved
  type = (fixed & INTR_INFO_TYPE_MASK) >> INTR_INFO_TYPE_SHIFT;
  if (type == 2 && (fixed & INTR_INFO_VECTOR_MASK) != 2)
    fixed = (fixed & ~INTR_INFO_VECTOR_MASK) | 2;  // NMI injects vector 2
  if (fixed != v) correct(c, CK_ENTRY_EVENT_INJECT, F_ENTRY_INTR_INFO, fixed);
}

void check_msrload_count(Ctx& c) {
  clamp_rule(c, CK_MSRLOAD_COUNT, F_ENTRY_MSR_LOAD_COUNT, MSR_LOAD_CAPACITY);
}

uint64_t active_msr_slots(const Ctx& c) {
  uint64_t n = c.st.read(F_ENTRY_MSR_LOAD_COUNT);
  return n > MSR_LOAD_CAPACITY ? MSR_LOAD_CAPACITY : n;
}

void check_msrload_index(Ctx& c) {
  uint64_t n = active_msr_slots(c);
  for (uint64_t i = 0; i < n; ++i) {
    uint16_t f = static_cast<uint16_t>(F_ENTRY_MSR0_INDEX + 2 * i);
    uint32_t idx = static_cast<uint32_t>(c.st.read(f));
    bool ok = false;
    for (uint32_t m : MSR_LOAD_TABLE) ok = ok || m == idx;
    if (!ok) correct(c, CK_MSRLOAD_INDEX, f, MSR_LOAD_TABLE[idx % 8]);
  }
}

void check_msrload_canonical(Ctx& c) {
  uint64_t n = active_msr_slots(c);
  for (uint64_t i = 0; i < n; ++i) {
    uint32_t idx = static_cast<uint32_t>(
        c.st.read(static_cast<uint16_t>(F_ENTRY_MSR0_INDEX + 2 * i)));
    if (!msr_value_canonical_required(idx)) continue;
    canonical_rule(c, CK_MSRLOAD_CANONICAL,
                   static_cast<uint16_t>(F_ENTRY_MSR0_VALUE + 2 * i));
  }
}

// ---- Host phase ----------------------------------------------------------

void check_host_cr0(Ctx& c) {
  mask_rule(c, CK_HOST_CR0, F_HOST_CR0, CR0_PE | CR0_NE | CR0_PG,
            CR0_DEFINED);
}

void check_host_cr4(Ctx& c) {
  mask_rule(c, CK_HOST_CR4, F_HOST_CR4, CR4_VMXE, CR4_DEFINED);
  if (c.st.read(F_VM_EXIT_CONTROLS) & EXIT_HOST_ADDR_SPACE) {
    uint64_t v = c.st.read(F_HOST_CR4);
    if (!(v & CR4_PAE)) correct(c, CK_HOST_CR4, F_HOST_CR4, v | CR4_PAE);
  }
}

void check_host_cr3_width(Ctx& c) {
  mask_rule(c, CK_HOST_CR3_WIDTH, F_HOST_CR3, 0,
            (1ull << c.p.phys_addr_width) - 1);
}

void check_host_canonical(Ctx& c) {
  for (uint16_t f : {F_HOST_RSP, F_HOST_RIP, F_HOST_FS_BASE, F_HOST_GS_BASE,
                     F_HOST_TR_BASE, F_HOST_GDTR_BASE, F_HOST_IDTR_BASE,
                     F_HOST_SYSENTER_ESP, F_HOST_SYSENTER_EIP})
    canonical_rule(c, CK_HOST_CANONICAL, f);
}

void check_host_selectors(Ctx& c) {
  for (uint16_t f = F_HOST_ES_SELECTOR; f <= F_HOST_TR_SELECTOR; ++f)
    mask_rule(c, CK_HOST_SELECTORS, f, 0, 0xFFF8);  // RPL = 0, TI = 0
  if (c.st.read(F_HOST_TR_SELECTOR) == 0)
    correct(c, CK_HOST_SELECTORS, F_HOST_TR_SELECTOR, 0x0008);
}

void check_host_efer(Ctx& c) {
  mask_rule(c, CK_HOST_EFER, F_HOST_EFER, 0, EFER_DEFINED);
  uint64_t v = c.st.read(F_HOST_EFER);
  bool long_host = c.st.read(F_VM_EXIT_CONTROLS) & EXIT_HOST_ADDR_SPACE;
  uint64_t fixed = v & ~(EFER_LME | EFER_LMA);
  if (long_host) fixed |= EFER_LME | EFER_LMA;
  if (fixed != v) correct(c, CK_HOST_EFER, F_HOST_EFER, fixed);
}

uint64_t fix_pat(uint64_t v) {
  uint64_t fixed = 0;
  for (int i = 0; i < 8; ++i) {
    uint64_t b = (v >> (8 * i)) & 0xFF;
    b &= 0x7;
    if ((b & ~1ull) == 2) b &= ~2ull;  // 2 -> 0, 3 -> 1
    fixed |= b << (8 * i);
  }
  return fixed;
}

void check_host_pat(Ctx& c) {
  uint64_t v = c.st.read(F_HOST_PAT);
  uint64_t fixed = fix_pat(v);
  if (fixed != v) correct(c, CK_HOST_PAT, F_HOST_PAT, fixed);
}

// ---- Guest phase ---------------------------------------------------------

void check_guest_cr_reserved(Ctx& c) {
  mask_rule(c, CK_GUEST_CR_RESERVED, F_GUEST_CR0, CR0_ET, CR0_DEFINED);
  mask_rule(c, CK_GUEST_CR_RESERVED, F_GUEST_CR4, 0, CR4_DEFINED);
  mask_rule(c, CK_GUEST_CR_RESERVED, F_GUEST_CR3, 0,
            (1ull << c.p.phys_addr_width) - 1);
}

void check_guest_cr0_pg_pe(Ctx& c) {
  uint64_t v = c.st.read(F_GUEST_CR0);
  if (!core::implies_ok(v, CR0_PG, CR0_PE))
    correct(c, CK_GUEST_CR0_PG_PE, F_GUEST_CR0,
            core::apply_implies(v, CR0_PG, CR0_PE));
}

bool unrestricted_guest_on(const Ctx& c) {
  return c.p.has(FeatureId::UnrestrictedGuest) && secondary_active(c) &&
         (c.st.read(F_SECONDARY_PROC_CONTROLS) & SEC_UNRESTRICTED_GUEST);
}

void check_guest_cr0_pe_ug(Ctx& c) {
  if (unrestricted_guest_on(c)) return;
  uint64_t v = c.st.read(F_GUEST_CR0);
  if (!(v & CR0_PE)) correct(c, CK_GUEST_CR0_PE_UG, F_GUEST_CR0, v | CR0_PE);
}

void check_guest_debug_reserved(Ctx& c) {
  mask_rule(c, CK_GUEST_DEBUG_RESERVED, F_GUEST_DR7, 0, 0xFFFFFFFF);
  mask_rule(c, CK_GUEST_DEBUG_RESERVED, F_GUEST_PENDING_DBG, 0,
            PENDING_DBG_DEFINED);
}

bool ia32e_entry(const Ctx& c) {
  return c.st.read(F_VM_ENTRY_CONTROLS) & ENTRY_IA32E_GUEST;
}

void check_guest_ia32e_pae(Ctx& c) {
  if (!ia32e_entry(c)) return;
  uint64_t cr4 = c.st.read(F_GUEST_CR4);
  if (!(cr4 & CR4_PAE))
    correct(c, CK_GUEST_IA32E_PAE, F_GUEST_CR4, cr4 | CR4_PAE);
  uint64_t efer = c.st.read(F_GUEST_EFER);
  if (!(efer & EFER_LME))
    correct(c, CK_GUEST_IA32E_PAE, F_GUEST_EFER, efer | EFER_LME);
}

void check_guest_efer(Ctx& c) {
  mask_rule(c, CK_GUEST_EFER, F_GUEST_EFER, 0, EFER_DEFINED);
  uint64_t v = c.st.read(F_GUEST_EFER);
  bool lma = (v & EFER_LME) && (c.st.read(F_GUEST_CR0) & CR0_PG);
  uint64_t fixed = lma ? (v | EFER_LMA) : (v & ~EFER_LMA);
  if (fixed != v) correct(c, CK_GUEST_EFER, F_GUEST_EFER, fixed);
}

void check_guest_pat(Ctx& c) {
  uint64_t v = c.st.read(F_GUEST_PAT);
  uint64_t fixed = fix_pat(v);
  if (fixed != v) correct(c, CK_GUEST_PAT, F_GUEST_PAT, fixed);
}

void check_guest_rflags(Ctx& c) {
  mask_rule(c, CK_GUEST_RFLAGS, F_GUEST_RFLAGS, RFLAGS_FIXED1,
            RFLAGS_DEFINED);
}

uint64_t allowed_activity(const CapabilityProfile& p) {
  uint64_t set = 1;  // Active is always allowed
  if (p.has(FeatureId::ActivityStateHlt)) set |= 1 << ACTIVITY_HLT;
  if (p.has(FeatureId::ActivityStateShutdown)) set |= 1 << ACTIVITY_SHUTDOWN;
  if (p.has(FeatureId::ActivityStateWaitForSipi))
    set |= 1 << ACTIVITY_WAIT_SIPI;
  return set;
}

void check_guest_activity(Ctx& c) {
  uint64_t v = c.st.read(F_GUEST_ACTIVITY_STATE);
  uint64_t set = allowed_activity(c.p);
  bool ok = v <= ACTIVITY_WAIT_SIPI && (set >> v & 1);
  // Disallowed activity values fall back to Active.
  if (!ok) correct(c, CK_GUEST_ACTIVITY, F_GUEST_ACTIVITY_STATE,
                   ACTIVITY_ACTIVE);
}

void check_guest_interruptibility(Ctx& c) {
  uint64_t may1 = INTR_BLOCK_STI | INTR_BLOCK_MOV_SS | INTR_BLOCK_SMI |
                  INTR_BLOCK_NMI;
  if (c.p.has(FeatureId::VirtualGif)) may1 |= INTR_VGIF;
  mask_rule(c, CK_GUEST_INTERRUPTIBILITY, F_GUEST_INTERRUPTIBILITY, 0, may1);
  uint64_t v = c.st.read(F_GUEST_INTERRUPTIBILITY);
  uint64_t fixed = v;
  if ((fixed & INTR_BLOCK_STI) && (fixed & INTR_BLOCK_MOV_SS))
    fixed &= ~INTR_BLOCK_MOV_SS;
  if (c.st.read(F_GUEST_ACTIVITY_STATE) != ACTIVITY_ACTIVE)
    fixed &= ~(INTR_BLOCK_STI | INTR_BLOCK_MOV_SS);
  if (fixed != v)
    correct(c, CK_GUEST_INTERRUPTIBILITY, F_GUEST_INTERRUPTIBILITY, fixed);
}

struct SegFields {
  uint16_t sel, base, limit, ar;
};

constexpr SegFields seg(uint16_t sel_field) {
  return {sel_field, static_cast<uint16_t>(sel_field + 1),
          static_cast<uint16_t>(sel_field + 2),
          static_cast<uint16_t>(sel_field + 3)};
}

constexpr SegFields kSegES = seg(F_GUEST_ES_SELECTOR);
constexpr SegFields kSegCS = seg(F_GUEST_CS_SELECTOR);
constexpr SegFields kSegSS = seg(F_GUEST_SS_SELECTOR);
constexpr SegFields kSegDS = seg(F_GUEST_DS_SELECTOR);
constexpr SegFields kSegFS = seg(F_GUEST_FS_SELECTOR);
constexpr SegFields kSegGS = seg(F_GUEST_GS_SELECTOR);
constexpr SegFields kSegLDTR = seg(F_GUEST_LDTR_SELECTOR);
constexpr SegFields kSegTR = seg(F_GUEST_TR_SELECTOR);

constexpr SegFields kDataSegs[] = {kSegES, kSegSS, kSegDS, kSegFS, kSegGS};

bool seg_usable(const Ctx& c, const SegFields& s) {
  return !(c.st.read(s.ar) & AR_UNUSABLE);
}

void check_guest_seg_ar(Ctx& c) {
  const uint64_t reserved = AR_RESERVED_11_8 | AR_RESERVED_HIGH;
  // CS is always usable: accessed code type, S and P set.
  mask_rule(c, CK_GUEST_SEG_AR, kSegCS.ar,
            AR_TYPE_ACCESSED | AR_TYPE_CODE | AR_S | AR_P,
            0xFFFFFFFFull & ~(reserved | AR_UNUSABLE));
  for (const auto& s : kDataSegs) {
    if (!seg_usable(c, s)) continue;
    mask_rule(c, CK_GUEST_SEG_AR, s.ar, AR_TYPE_ACCESSED | AR_S | AR_P,
              0xFFFFFFFFull & ~reserved);
  }
  if (seg_usable(c, kSegLDTR)) {
    // LDT descriptor: type 2, system, present.
    mask_rule(c, CK_GUEST_SEG_AR, kSegLDTR.ar, 0x2 | AR_P,
              0xFFFFFFFFull & ~(reserved | AR_S | 0xD));
  }
}

void check_guest_tr(Ctx& c) {
  // Busy TSS, system descriptor, present, always usable: type 3 or 11.
  mask_rule(c, CK_GUEST_TR, kSegTR.ar, 0x3 | AR_P,
            0xFFFFFFFFull &
                ~(AR_RESERVED_11_8 | AR_RESERVED_HIGH | AR_UNUSABLE | AR_S |
                  0x4));
}

void check_guest_seg_base(Ctx& c) {
  bool longmode = ia32e_entry(c);
  if (longmode) {
    for (uint16_t f : {kSegFS.base, kSegGS.base, kSegTR.base,
                       static_cast<uint16_t>(F_GUEST_GDTR_BASE),
                       static_cast<uint16_t>(F_GUEST_IDTR_BASE),
                       static_cast<uint16_t>(F_GUEST_SYSENTER_ESP),
                       static_cast<uint16_t>(F_GUEST_SYSENTER_EIP)})
      canonical_rule(c, CK_GUEST_SEG_BASE, f);
  } else {
    auto low32 = [&](uint16_t f) {
      mask_rule(c, CK_GUEST_SEG_BASE, f, 0, 0xFFFFFFFF);
    };
    low32(kSegCS.base);
    low32(kSegTR.base);
    for (const auto& s : kDataSegs)
      if (seg_usable(c, s)) low32(s.base);
    if (seg_usable(c, kSegLDTR)) low32(kSegLDTR.base);
    low32(F_GUEST_GDTR_BASE);
    low32(F_GUEST_IDTR_BASE);
    low32(F_GUEST_SYSENTER_ESP);
    low32(F_GUEST_SYSENTER_EIP);
  }
  mask_rule(c, CK_GUEST_SEG_BASE, F_GUEST_GDTR_LIMIT, 0, 0xFFFF);
  mask_rule(c, CK_GUEST_SEG_BASE, F_GUEST_IDTR_LIMIT, 0, 0xFFFF);
}

void check_guest_seg_limit(Ctx& c) {
  auto granularity = [&](const SegFields& s) {
    uint64_t limit = c.st.read(s.limit);
    uint64_t fixed = (c.st.read(s.ar) & AR_G) ? (limit | 0xFFF)
                                              : (limit & 0xFFFFF);
    if (fixed != limit) correct(c, CK_GUEST_SEG_LIMIT, s.limit, fixed);
  };
  granularity(kSegCS);
  granularity(kSegTR);
  for (const auto& s : kDataSegs)
    if (seg_usable(c, s)) granularity(s);
  if (seg_usable(c, kSegLDTR)) granularity(kSegLDTR);
}

void check_guest_link_ptr(Ctx& c) {
  uint64_t v = c.st.read(F_GUEST_VMCS_LINK_PTR);
  if (v != ~0ull) correct(c, CK_GUEST_LINK_PTR, F_GUEST_VMCS_LINK_PTR, ~0ull);
}

void check_guest_rip(Ctx& c) {
  if (ia32e_entry(c))
    canonical_rule(c, CK_GUEST_RIP, F_GUEST_RIP);
  else
    mask_rule(c, CK_GUEST_RIP, F_GUEST_RIP, 0, 0xFFFFFFFF);
}

void check_guest_misc_reserved(Ctx& c) {
  mask_rule(c, CK_GUEST_MISC_RESERVED, F_GUEST_INTERRUPT_STATUS, 0,
            c.p.has(FeatureId::PostedInterrupts) ? 0xFFFF : 0);
  mask_rule(c, CK_GUEST_MISC_RESERVED, F_GUEST_PML_INDEX, 0, 0x1FF);
  mask_rule(c, CK_GUEST_MISC_RESERVED, F_GUEST_PREEMPTION_TIMER, 0,
            c.p.has(FeatureId::PreemptionTimer) ? 0xFFFFFFFF : 0);
}

// Evaluation order within each phase is check-id order.
void run_control_phase(Ctx& c) {
  check_ctrl_pin(c);
  check_ctrl_primary(c);
  check_ctrl_secondary(c);
  check_ctrl_secondary_gating(c);
  check_ctrl_entry(c);
  check_ctrl_exit(c);
  check_ctrl_reserved_mbz(c);
  check_ctrl_addr_limits(c);
  check_ctrl_eptp(c);
  check_entry_event_inject(c);
  check_msrload_count(c);
  check_msrload_index(c);
  check_msrload_canonical(c);
}

void run_host_phase(Ctx& c) {
  check_host_cr0(c);
  check_host_cr4(c);
  check_host_cr3_width(c);
  check_host_canonical(c);
  check_host_selectors(c);
  check_host_efer(c);
  check_host_pat(c);
}

void run_guest_phase(Ctx& c) {
  check_guest_cr_reserved(c);
  check_guest_cr0_pg_pe(c);
  check_guest_cr0_pe_ug(c);
  check_guest_debug_reserved(c);
  check_guest_ia32e_pae(c);
  check_guest_efer(c);
  check_guest_pat(c);
  check_guest_rflags(c);
  check_guest_activity(c);
  check_guest_interruptibility(c);
  check_guest_seg_ar(c);
  check_guest_tr(c);
  check_guest_seg_base(c);
  check_guest_seg_limit(c);
  check_guest_link_ptr(c);
  check_guest_rip(c);
  check_guest_misc_reserved(c);
}

}  // namespace

ValidationReport validate(const VmState& s, const CapabilityProfile& p) {
  VmState copy = s;
  ValidationReport report;
  Ctx c{p, copy, /*fix=*/false, &report, nullptr};
  run_control_phase(c);
  run_host_phase(c);
  run_guest_phase(c);
  return report;
}

VmState round_controls(VmState s, const CapabilityProfile& p) {
  Ctx c{p, s, /*fix=*/true, nullptr, nullptr};
  run_control_phase(c);
  return s;
}

VmState round_host_state(VmState s, const CapabilityProfile& p) {
  Ctx c{p, s, /*fix=*/true, nullptr, nullptr};
  run_host_phase(c);
  return s;
}

VmState round_guest_state(VmState s, const CapabilityProfile& p) {
  Ctx c{p, s, /*fix=*/true, nullptr, nullptr};
  run_guest_phase(c);
  return s;
}

VmState round(VmState s, const CapabilityProfile& p) {
  return round_traced(std::move(s), p, nullptr);
}

VmState round_traced(VmState s, const CapabilityProfile& p,
                     RoundingTrace* trace) {
  Ctx c{p, s, /*fix=*/true, nullptr, trace};
  run_control_phase(c);
  run_host_phase(c);
  run_guest_phase(c);
  return s;
}

std::vector<CheckId> enabled_checks(const CapabilityProfile& p) {
  std::vector<CheckId> out;
  for (const auto& info : check_catalog()) {
    if (info.kind != CheckKind::State) continue;
    if (info.id == CK_CTRL_EPTP && !p.has(FeatureId::NestedPaging)) continue;
    out.push_back(info.id);
  }
  return out;
}

}  // namespace efz::vmcheck
