// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace efz::caps {

// The 24 configurable vCPU features. Ordinals are stable; the profile is
// derived from a 24-bit array in the fuzz input, one bit per feature.
enum class FeatureId : uint8_t {
  NestedPaging = 0,
  UnrestrictedGuest,
  VirtualProcessorId,
  SecondaryControls,
  VirtualNmi,
  LongModeSupport,
  ActivityStateHlt,
  ActivityStateShutdown,
  ActivityStateWaitForSipi,
  MsrBitmaps,
  IoBitmaps,
  PostedInterrupts,
  PreemptionTimer,
  VirtualGif,
  Reserved0,
  Reserved1,
  Reserved2,
  Reserved3,
  Reserved4,
  Reserved5,
  Reserved6,
  Reserved7,
  Reserved8,
  Reserved9,
};

inline constexpr int kFeatureCount = 24;

std::string_view feature_name(FeatureId f);

// allowed0: bits that must be 1. allowed1: bits that may be 1 (a superset
// of allowed0 by construction).
struct ControlMask {
  uint64_t allowed0 = 0;
  uint64_t allowed1 = 0;

  bool operator==(const ControlMask&) const = default;
};

// Derived vCPU capabilities: the surviving feature bits after dependency
// closure plus the per-control-field allowed masks the validator and the
// oracle both consult.
struct CapabilityProfile {
  uint32_t feature_bits = 0;  // low 24 bits, post closure
  uint8_t phys_addr_width = 40;

  ControlMask pin;
  ControlMask primary;
  ControlMask secondary;
  ControlMask entry;
  ControlMask exit;

  bool has(FeatureId f) const {
    return feature_bits >> static_cast<int>(f) & 1;
  }

  // Mask for one of the five control fields; nullptr for any other field.
  const ControlMask* control_mask(uint16_t field_id) const;

  bool operator==(const CapabilityProfile&) const = default;
};

// Dependency closure over raw feature bits: a feature whose prerequisite is
// disabled is disabled as well. Idempotent.
uint32_t close_features(uint32_t feature_bits);

// Derives a profile from at least 3 bytes of fuzz input (24 bits, one per
// feature). Throws std::invalid_argument on short input.
CapabilityProfile generate_profile(std::span<const uint8_t> input_slice);

CapabilityProfile profile_from_bits(uint32_t feature_bits);

// Fixed profiles: everything enabled, and the static configuration used
// when the configurator stage is disabled.
const CapabilityProfile& full_profile();
const CapabilityProfile& default_profile();

// Human-readable feature list for reproducer bundles.
std::string describe(const CapabilityProfile& p);
std::string profile_json(const CapabilityProfile& p);

}  // namespace efz::caps
