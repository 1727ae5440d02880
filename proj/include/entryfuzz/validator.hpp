// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <string>
#include <vector>

#include "entryfuzz/caps.hpp"
#include "entryfuzz/checks.hpp"
#include "entryfuzz/state.hpp"

namespace efz::vmcheck {

struct Violation {
  CheckId check;
  std::vector<uint16_t> fields;
  std::string detail;  // observed value summary
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Which corrections a rounding pass applied: the checks that fired and the
// fields each of them touched, in application order.
struct RoundingTrace {
  std::vector<std::pair<CheckId, uint16_t>> corrections;
};

// Evaluates every enabled state check in catalog order (controls, host,
// guest). Invalid states yield a populated report, never an error.
ValidationReport validate(const VmState& s, const caps::CapabilityProfile& p);

// Group rounders. The sequential contract is controls first, then host,
// then guest; each pass only writes fields of its own phase and may read
// groups rounded before it.
VmState round_controls(VmState s, const caps::CapabilityProfile& p);
VmState round_host_state(VmState s, const caps::CapabilityProfile& p);
VmState round_guest_state(VmState s, const caps::CapabilityProfile& p);

// Full rounding: the three group passes in order. One pass suffices; the
// cross-field dependencies form a unidirectional graph.
VmState round(VmState s, const caps::CapabilityProfile& p);
VmState round_traced(VmState s, const caps::CapabilityProfile& p,
                     RoundingTrace* trace);

// State checks enabled under a profile. The EPT-pointer check is the only
// check gated out entirely by a feature (NestedPaging); everything else
// stays enabled with feature-dependent parameters.
std::vector<CheckId> enabled_checks(const caps::CapabilityProfile& p);

// Value-level correction primitives shared by the concrete checks; the
// brute-force differential tests compose reduced rule systems from these.
namespace core {

inline bool mask_ok(uint64_t v, uint64_t must1, uint64_t may1) {
  return (v & must1) == must1 && (v & ~may1) == 0;
}

// Minimal bit-edit: set missing must-1 bits, clear stray must-0 bits.
inline uint64_t apply_mask(uint64_t v, uint64_t must1, uint64_t may1) {
  return (v | must1) & may1;
}

// a ⇒ b over single bits; the documented correction sets the consequent.
inline bool implies_ok(uint64_t v, uint64_t antecedent, uint64_t consequent) {
  return !(v & antecedent) || (v & consequent) == consequent;
}
inline uint64_t apply_implies(uint64_t v, uint64_t antecedent,
                              uint64_t consequent) {
  return (v & antecedent) ? (v | consequent) : v;
}

// Numeric clamp to an upper bound.
inline uint64_t apply_clamp(uint64_t v, uint64_t max) {
  return v > max ? max : v;
}

}  // namespace core

std::string report_json(const ValidationReport& r);

}  // namespace efz::vmcheck
