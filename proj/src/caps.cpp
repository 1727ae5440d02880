// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/caps.hpp"

#include <stdexcept>

#include "entryfuzz/bits.hpp"
#include "entryfuzz/state.hpp"

namespace efz::caps {

namespace {

constexpr uint32_t fbit(FeatureId f) { return 1u << static_cast<int>(f); }

struct Dependency {
  FeatureId dependent;
  FeatureId prerequisite;
};

// Disabling a prerequisite disables its dependents.
constexpr Dependency kDependencies[] = {
    {FeatureId::UnrestrictedGuest, FeatureId::NestedPaging},
    {FeatureId::VirtualProcessorId, FeatureId::SecondaryControls},
    {FeatureId::PostedInterrupts, FeatureId::SecondaryControls},
};

constexpr std::string_view kFeatureNames[kFeatureCount] = {
    "nested-paging",
    "unrestricted-guest",
    "virtual-processor-id",
    "secondary-controls",
    "virtual-nmi",
    "long-mode",
    "activity-hlt",
    "activity-shutdown",
    "activity-wait-for-sipi",
    "msr-bitmaps",
    "io-bitmaps",
    "posted-interrupts",
    "preemption-timer",
    "virtual-gif",
    "reserved-0",
    "reserved-1",
    "reserved-2",
    "reserved-3",
    "reserved-4",
    "reserved-5",
    "reserved-6",
    "reserved-7",
    "reserved-8",
    "reserved-9",
};

void derive_masks(CapabilityProfile& p) {
  using namespace bits;
  auto has = [&](FeatureId f) { return p.has(f); };

  p.pin.allowed0 = bit(1) | bit(2) | bit(4);
  p.pin.allowed1 = p.pin.allowed0 | PIN_EXT_INT_EXITING | PIN_NMI_EXITING;
  if (has(FeatureId::VirtualNmi)) p.pin.allowed1 |= PIN_VIRTUAL_NMI;
  if (has(FeatureId::PreemptionTimer)) p.pin.allowed1 |= PIN_PREEMPTION_TIMER;
  if (has(FeatureId::PostedInterrupts))
    p.pin.allowed1 |= PIN_POSTED_INTERRUPTS;

  p.primary.allowed0 = bit(1) | bit(4) | bit(5) | bit(6) | bit(8) | bit(13) |
                       bit(14) | bit(26);
  p.primary.allowed1 =
      p.primary.allowed0 | PRIM_INTERRUPT_WINDOW | PRIM_TSC_OFFSETTING |
      PRIM_HLT_EXITING | PRIM_INVLPG_EXITING | PRIM_MWAIT_EXITING |
      PRIM_RDPMC_EXITING | PRIM_RDTSC_EXITING | PRIM_CR3_LOAD_EXITING |
      PRIM_CR3_STORE_EXITING | PRIM_CR8_LOAD_EXITING | PRIM_CR8_STORE_EXITING |
      PRIM_TPR_SHADOW | PRIM_MOV_DR_EXITING | PRIM_UNCOND_IO_EXITING |
      PRIM_MONITOR_EXITING | PRIM_PAUSE_EXITING;
  if (has(FeatureId::VirtualNmi)) p.primary.allowed1 |= PRIM_NMI_WINDOW;
  if (has(FeatureId::IoBitmaps)) p.primary.allowed1 |= PRIM_USE_IO_BITMAPS;
  if (has(FeatureId::MsrBitmaps)) p.primary.allowed1 |= PRIM_USE_MSR_BITMAPS;
  if (has(FeatureId::SecondaryControls))
    p.primary.allowed1 |= PRIM_ACTIVATE_SECONDARY;

  p.secondary.allowed0 = 0;
  p.secondary.allowed1 =
      SEC_APIC_ACCESS | SEC_RDTSCP | SEC_VIRT_X2APIC | SEC_RDRAND_EXITING;
  if (has(FeatureId::NestedPaging)) p.secondary.allowed1 |= SEC_ENABLE_EPT;
  if (has(FeatureId::VirtualProcessorId))
    p.secondary.allowed1 |= SEC_ENABLE_VPID;
  if (has(FeatureId::UnrestrictedGuest))
    p.secondary.allowed1 |= SEC_UNRESTRICTED_GUEST;
  // Optional feature slots advertise themselves in the upper bits so that
  // any two distinct closed profiles disagree on at least one mask bit.
  for (int f = static_cast<int>(FeatureId::VirtualGif);
       f < kFeatureCount; ++f) {
    if (p.feature_bits >> f & 1) {
      int advert = SEC_FEATURE_ADVERT_BASE + f -
                   static_cast<int>(FeatureId::VirtualGif);
      p.secondary.allowed1 |= bit(advert);
    }
  }

  p.entry.allowed0 = bit(0) | bit(1) | bit(3);
  p.entry.allowed1 =
      p.entry.allowed0 | ENTRY_LOAD_DEBUG | ENTRY_LOAD_EFER | ENTRY_LOAD_PAT;
  if (has(FeatureId::LongModeSupport)) p.entry.allowed1 |= ENTRY_IA32E_GUEST;
  if (has(FeatureId::ActivityStateHlt)) p.entry.allowed1 |= ENTRY_ACT_HLT;
  if (has(FeatureId::ActivityStateShutdown))
    p.entry.allowed1 |= ENTRY_ACT_SHUTDOWN;
  if (has(FeatureId::ActivityStateWaitForSipi))
    p.entry.allowed1 |= ENTRY_ACT_WAIT_SIPI;

  p.exit.allowed0 = bit(0) | bit(1) | bit(3);
  p.exit.allowed1 = p.exit.allowed0 | EXIT_SAVE_DEBUG | EXIT_ACK_INTERRUPT |
                    EXIT_SAVE_PAT | EXIT_LOAD_PAT | EXIT_SAVE_EFER |
                    EXIT_LOAD_EFER;
  if (has(FeatureId::LongModeSupport)) p.exit.allowed1 |= EXIT_HOST_ADDR_SPACE;
  if (has(FeatureId::PreemptionTimer)) p.exit.allowed1 |= EXIT_SAVE_PREEMPT;
}

}  // namespace

std::string_view feature_name(FeatureId f) {
  return kFeatureNames[static_cast<int>(f)];
}

const ControlMask* CapabilityProfile::control_mask(uint16_t field_id) const {
  switch (field_id) {
    case F_PIN_BASED_CONTROLS: return &pin;
    case F_PRIMARY_PROC_CONTROLS: return &primary;
    case F_SECONDARY_PROC_CONTROLS: return &secondary;
    case F_VM_ENTRY_CONTROLS: return &entry;
    case F_VM_EXIT_CONTROLS: return &exit;
    default: return nullptr;
  }
}

uint32_t close_features(uint32_t feature_bits) {
  feature_bits &= (1u << kFeatureCount) - 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& d : kDependencies) {
      if ((feature_bits & fbit(d.dependent)) &&
          !(feature_bits & fbit(d.prerequisite))) {
        feature_bits &= ~fbit(d.dependent);
        changed = true;
      }
    }
  }
  return feature_bits;
}

CapabilityProfile profile_from_bits(uint32_t feature_bits) {
  CapabilityProfile p;
  p.feature_bits = close_features(feature_bits);
  derive_masks(p);
  return p;
}

CapabilityProfile generate_profile(std::span<const uint8_t> input_slice) {
  if (input_slice.size() < 3)
    throw std::invalid_argument("short-input: profile needs 3 bytes");
  uint32_t raw = uint32_t(input_slice[0]) | uint32_t(input_slice[1]) << 8 |
                 uint32_t(input_slice[2]) << 16;
  return profile_from_bits(raw);
}

const CapabilityProfile& full_profile() {
  static const CapabilityProfile p =
      profile_from_bits((1u << kFeatureCount) - 1);
  return p;
}

const CapabilityProfile& default_profile() {
  static const CapabilityProfile p = profile_from_bits(
      fbit(FeatureId::NestedPaging) | fbit(FeatureId::SecondaryControls) |
      fbit(FeatureId::VirtualNmi) | fbit(FeatureId::LongModeSupport) |
      fbit(FeatureId::ActivityStateHlt) | fbit(FeatureId::MsrBitmaps) |
      fbit(FeatureId::IoBitmaps));
  return p;
}

std::string describe(const CapabilityProfile& p) {
  std::string out = "features:";
  bool any = false;
  for (int f = 0; f < kFeatureCount; ++f) {
    if (p.feature_bits >> f & 1) {
      out += ' ';
      out += kFeatureNames[f];
      any = true;
    }
  }
  if (!any) out += " (none)";
  return out;
}

}  // namespace efz::caps
