// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <set>

#include "entryfuzz/bits.hpp"
#include "entryfuzz/caps.hpp"
#include "entryfuzz/state.hpp"
#include "entryfuzz/validator.hpp"

using namespace efz;
using namespace efz::bits;
using namespace efz::vmcheck;
using caps::CapabilityProfile;
using caps::FeatureId;

namespace {

VmState random_state(std::mt19937_64& rng) {
  VmState s;
  for (uint16_t f = 0; f < kFieldCount; ++f) s.write(f, rng());
  return s;
}

CapabilityProfile random_profile(std::mt19937_64& rng) {
  return caps::profile_from_bits(uint32_t(rng()));
}

bool report_has(const ValidationReport& r, CheckId id) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.check == id; });
}

}  // namespace

TEST_CASE("rounding yields validate-clean states") {
  std::mt19937_64 rng(100);
  for (int i = 0; i < 2000; ++i) {
    CapabilityProfile p = random_profile(rng);
    VmState r = round(random_state(rng), p);
    ValidationReport rep = validate(r, p);
    if (!rep.ok()) {
      CAPTURE(report_json(rep));
      REQUIRE(rep.ok());
    }
  }
}

TEST_CASE("rounding is idempotent") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 2000; ++i) {
    CapabilityProfile p = random_profile(rng);
    VmState once = round(random_state(rng), p);
    CHECK(round(once, p) == once);
  }
}

TEST_CASE("group rounders never touch earlier groups") {
  std::mt19937_64 rng(102);
  for (int i = 0; i < 500; ++i) {
    CapabilityProfile p = random_profile(rng);
    VmState s = random_state(rng);
    VmState after_host = round_host_state(s, p);
    VmState after_guest = round_guest_state(s, p);
    for (const auto& f : catalog()) {
      if (f.group == FieldGroup::ExecutionControl ||
          f.group == FieldGroup::EntryExitControl) {
        CHECK(after_host.read(f.id) == s.read(f.id));
        CHECK(after_guest.read(f.id) == s.read(f.id));
      }
      if (f.group == FieldGroup::HostState)
        CHECK(after_guest.read(f.id) == s.read(f.id));
    }
  }
}

TEST_CASE("corrections only touch fields of the firing check") {
  std::mt19937_64 rng(103);
  for (int i = 0; i < 500; ++i) {
    CapabilityProfile p = random_profile(rng);
    VmState s = random_state(rng);
    RoundingTrace trace;
    VmState r = round_traced(s, p, &trace);
    CHECK(!trace.corrections.empty());  // random states are never clean
    for (auto [check, field] : trace.corrections) {
      const auto& ids = catalog()[field].constraint_ids;
      bool mapped = std::find(ids.begin(), ids.end(), uint16_t(check)) !=
                    ids.end();
      if (!mapped) {
        CAPTURE(int(check));
        CAPTURE(catalog()[field].name);
        REQUIRE(mapped);
      }
    }
    // Untouched fields keep their raw values.
    std::set<uint16_t> touched;
    for (auto [check, field] : trace.corrections) touched.insert(field);
    for (uint16_t f = 0; f < kFieldCount; ++f)
      if (!touched.count(f)) CHECK(r.read(f) == s.read(f));
  }
}

TEST_CASE("already valid states are fixpoints of each group rounder") {
  std::mt19937_64 rng(104);
  for (int i = 0; i < 300; ++i) {
    CapabilityProfile p = random_profile(rng);
    VmState r = round(random_state(rng), p);
    CHECK(round_controls(r, p) == r);
    CHECK(round_host_state(r, p) == r);
    CHECK(round_guest_state(r, p) == r);
  }
}

TEST_CASE("named corrections behave as documented") {
  const CapabilityProfile& p = caps::full_profile();
  VmState base = round(VmState{}, p);

  SUBCASE("control must-be-1 bit is set after rounding") {
    VmState s = base;
    s.write(F_PIN_BASED_CONTROLS,
            base.read(F_PIN_BASED_CONTROLS) & ~p.pin.allowed0);
    CHECK(report_has(validate(s, p), CK_CTRL_PIN));
    VmState r = round_controls(s, p);
    CHECK((r.read(F_PIN_BASED_CONTROLS) & p.pin.allowed0) ==
          p.pin.allowed0);
  }

  SUBCASE("bitmap address 0x1001 rounds to 0x1000") {
    VmState s = write_field(base, F_IO_BITMAP_A_ADDR, 0x1001);
    CHECK(!validate(s, p).ok());
    CHECK(round_controls(s, p).read(F_IO_BITMAP_A_ADDR) == 0x1000);
    CHECK(validate(round(s, p), p).ok());
  }

  SUBCASE("host CR0 paging without protection forces PE") {
    VmState s = write_field(base, F_HOST_CR0,
                            (base.read(F_HOST_CR0) | CR0_PG) & ~CR0_PE);
    VmState r = round_host_state(s, p);
    CHECK((r.read(F_HOST_CR0) & CR0_PE) != 0);
  }

  SUBCASE("host RIP is sign-extended to canonical form") {
    uint64_t bad = 0x0000900000000000ull;  // bit 47 set, upper bits clear
    REQUIRE(!is_canonical(bad));
    VmState s = write_field(base, F_HOST_RIP, bad);
    VmState r = round_host_state(s, p);
    // Independent oracle: sign extension from bit 47.
    uint64_t expect =
        uint64_t(int64_t(bad << 16) >> 16);
    CHECK(r.read(F_HOST_RIP) == expect);
    CHECK(is_canonical(r.read(F_HOST_RIP)));
  }

  SUBCASE("guest RFLAGS bit 1 is forced on") {
    VmState s = write_field(base, F_GUEST_RFLAGS, 0);
    VmState r = round_guest_state(s, p);
    CHECK((r.read(F_GUEST_RFLAGS) & RFLAGS_FIXED1) != 0);
  }

  SUBCASE("long-mode entry forces guest CR4.PAE") {
    VmState s = base;
    s.write(F_VM_ENTRY_CONTROLS,
            s.read(F_VM_ENTRY_CONTROLS) | ENTRY_IA32E_GUEST);
    s.write(F_GUEST_CR4, s.read(F_GUEST_CR4) & ~CR4_PAE);
    s.write(F_GUEST_EFER, 0);
    CHECK(report_has(validate(s, p), CK_GUEST_IA32E_PAE));
    VmState r = round_guest_state(round_controls(s, p), p);
    CHECK((r.read(F_GUEST_CR4) & CR4_PAE) != 0);
    CHECK((r.read(F_GUEST_EFER) & EFER_LME) != 0);
  }

  SUBCASE("disallowed activity value rounds to active") {
    CapabilityProfile hlt_only = caps::profile_from_bits(
        1u << int(FeatureId::ActivityStateHlt));
    VmState s = round(VmState{}, hlt_only);
    s.write(F_GUEST_ACTIVITY_STATE, 7);
    CHECK(report_has(validate(s, hlt_only), CK_GUEST_ACTIVITY));
    VmState r = round_guest_state(s, hlt_only);
    CHECK(r.read(F_GUEST_ACTIVITY_STATE) == ACTIVITY_ACTIVE);
    // An allowed member is left alone.
    s.write(F_GUEST_ACTIVITY_STATE, ACTIVITY_HLT);
    CHECK(round_guest_state(s, hlt_only).read(F_GUEST_ACTIVITY_STATE) ==
          ACTIVITY_HLT);
  }

  SUBCASE("non-canonical MSR-load value is reported") {
    VmState s = base;
    s.write(F_ENTRY_MSR_LOAD_COUNT, 1);
    s.write(F_ENTRY_MSR0_INDEX, MSR_KERNEL_GS_BASE);
    s.write(F_ENTRY_MSR0_VALUE, 0x8000000000000000ull);
    CHECK(report_has(validate(s, p), CK_MSRLOAD_CANONICAL));
    VmState r = round_controls(s, p);
    CHECK(is_canonical(r.read(F_ENTRY_MSR0_VALUE)));
  }
}

TEST_CASE("check gating follows the profile") {
  CapabilityProfile with_np =
      caps::profile_from_bits(1u << int(FeatureId::NestedPaging));
  CapabilityProfile without = caps::profile_from_bits(0);
  auto a = enabled_checks(with_np);
  auto b = enabled_checks(without);
  CHECK(std::count(a.begin(), a.end(), CK_CTRL_EPTP) == 1);
  CHECK(std::count(b.begin(), b.end(), CK_CTRL_EPTP) == 0);
  // Removing the feature removes exactly that check.
  std::vector<CheckId> a_minus = a;
  a_minus.erase(std::find(a_minus.begin(), a_minus.end(), CK_CTRL_EPTP));
  CHECK(a_minus == b);
  // Protocol entries never appear in the enabled state-check set.
  CHECK(std::count(a.begin(), a.end(), CK_SEQUENCE_ERROR) == 0);
}

TEST_CASE("validate reports in catalog order and serializes") {
  std::mt19937_64 rng(105);
  const CapabilityProfile& p = caps::full_profile();
  for (int i = 0; i < 200; ++i) {
    ValidationReport rep = validate(random_state(rng), p);
    for (size_t k = 1; k < rep.violations.size(); ++k)
      CHECK(rep.violations[k - 1].check <= rep.violations[k].check);
  }
  VmState bad = write_field(round(VmState{}, p), F_GUEST_VMCS_LINK_PTR, 0);
  std::string j = report_json(validate(bad, p));
  CHECK(j.find("GUEST_LINK_PTR") != std::string::npos);
}

// ---- reduced-system differential vs brute force ---------------------------

namespace {

// A tiny rule system built from the same correction primitives the
// production checks use: per-field masks and single implications.
struct MiniSystem {
  std::vector<int> widths;  // <= 4 fields, <= 6 bits each
  struct Mask {
    int field;
    uint64_t must1, may1;
  };
  struct Implies {
    int fa, ba, fb, bb;  // bit ba of fa set requires bit bb of fb set
  };
  std::vector<Mask> masks;
  std::vector<Implies> imps;

  bool valid(const std::vector<uint64_t>& v) const {
    for (const auto& m : masks)
      if (!core::mask_ok(v[m.field], m.must1, m.may1)) return false;
    for (const auto& im : imps)
      if ((v[im.fa] >> im.ba & 1) && !(v[im.fb] >> im.bb & 1)) return false;
    return true;
  }

  std::vector<uint64_t> round(std::vector<uint64_t> v) const {
    for (const auto& m : masks)
      v[m.field] = core::apply_mask(v[m.field], m.must1, m.may1);
    for (const auto& im : imps)
      if (v[im.fa] >> im.ba & 1) v[im.fb] |= 1ull << im.bb;
    return v;
  }
};

int mini_distance(const std::vector<uint64_t>& a,
                  const std::vector<uint64_t>& b) {
  int d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

}  // namespace

TEST_CASE("reduced systems round to the brute-force nearest valid state") {
  std::mt19937_64 rng(106);
  int compared = 0;
  for (int sys = 0; sys < 60; ++sys) {
    MiniSystem m;
    int nfields = 2 + int(rng() % 3);
    int total_bits = 0;
    for (int f = 0; f < nfields; ++f) {
      int w = 2 + int(rng() % 5);  // 2..6 bits
      m.widths.push_back(w);
      total_bits += w;
    }
    if (total_bits > 16) continue;

    if (rng() % 2) {
      // One implication; its consequent must stay allowed by the masks.
      MiniSystem::Implies im;
      im.fa = int(rng() % nfields);
      im.ba = int(rng() % m.widths[im.fa]);
      im.fb = int(rng() % nfields);
      im.bb = int(rng() % m.widths[im.fb]);
      if (im.fa != im.fb || im.ba != im.bb) m.imps.push_back(im);
    }
    for (int f = 0; f < nfields; ++f) {
      uint64_t wmask = (1ull << m.widths[f]) - 1;
      uint64_t may1 = rng() & wmask;
      uint64_t must1 = rng() & may1;
      for (const auto& im : m.imps) {
        if (im.fb == f) may1 |= 1ull << im.bb;   // consequent settable
        if (im.fa == f) must1 &= ~(1ull << im.ba);  // antecedent free
      }
      m.masks.push_back({f, must1, may1});
    }

    // Enumerate the whole space once to find valid states.
    std::vector<std::vector<uint64_t>> all;
    std::vector<uint64_t> cur(m.widths.size(), 0);
    size_t space = 1;
    for (int w : m.widths) space <<= w;
    for (size_t code = 0; code < space; ++code) {
      size_t c = code;
      for (size_t f = 0; f < m.widths.size(); ++f) {
        cur[f] = c & ((1ull << m.widths[f]) - 1);
        c >>= m.widths[f];
      }
      all.push_back(cur);
    }

    for (int trial = 0; trial < 40; ++trial) {
      std::vector<uint64_t> s(m.widths.size());
      for (size_t f = 0; f < s.size(); ++f)
        s[f] = rng() & ((1ull << m.widths[f]) - 1);

      int best = 1 << 30, best_count = 0;
      std::vector<uint64_t> nearest;
      for (const auto& cand : all) {
        if (!m.valid(cand)) continue;
        int d = mini_distance(s, cand);
        if (d < best) {
          best = d;
          best_count = 1;
          nearest = cand;
        } else if (d == best) {
          ++best_count;
        }
      }
      if (best_count != 1) continue;  // tie: documented tie-break applies

      auto rounded = m.round(s);
      CHECK(m.valid(rounded));
      CHECK(rounded == nearest);
      ++compared;
    }
  }
  CHECK(compared > 200);
}

TEST_CASE("correction primitives implement the documented tie-break") {
  // Violated implication: prefer setting the must-be-1 consequent.
  CHECK(core::apply_implies(0b01, 0b01, 0b10) == 0b11);
  CHECK(core::apply_implies(0b00, 0b01, 0b10) == 0b00);
  // Mask corrections set missing must-1 bits and clear stray must-0 bits.
  CHECK(core::apply_mask(0b1010, 0b0001, 0b0111) == 0b0011);
  // Clamp corrections pick the nearest in-range numeric value.
  CHECK(core::apply_clamp(700, 4) == 4);
  CHECK(core::apply_clamp(3, 4) == 3);
}
