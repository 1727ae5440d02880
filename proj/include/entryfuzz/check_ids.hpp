// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>

namespace efz {

// Stable identifiers for every consistency rule in the check catalog.
// The validator and the target oracle carry independent implementations of
// these rules; docs/checks.md is the normative description both follow.
//
// CK_SEQUENCE_ERROR is a protocol rejection (VMX instruction ordering), not
// a state predicate; it never appears in a ValidationReport.
enum CheckId : uint16_t {
  CK_SEQUENCE_ERROR = 0,

  // Control phase (execution controls + entry/exit controls).
  CK_CTRL_PIN,
  CK_CTRL_PRIMARY,
  CK_CTRL_SECONDARY,
  CK_CTRL_SECONDARY_GATING,
  CK_CTRL_ENTRY,
  CK_CTRL_EXIT,
  CK_CTRL_RESERVED_MBZ,
  CK_CTRL_ADDR_LIMITS,
  CK_CTRL_EPTP,
  CK_ENTRY_EVENT_INJECT,
  CK_MSRLOAD_COUNT,
  CK_MSRLOAD_INDEX,
  CK_MSRLOAD_CANONICAL,

  // Host-state phase.
  CK_HOST_CR0,
  CK_HOST_CR4,
  CK_HOST_CR3_WIDTH,
  CK_HOST_CANONICAL,
  CK_HOST_SELECTORS,
  CK_HOST_EFER,
  CK_HOST_PAT,

  // Guest-state phase.
  CK_GUEST_CR_RESERVED,
  CK_GUEST_CR0_PG_PE,
  CK_GUEST_CR0_PE_UG,
  CK_GUEST_DEBUG_RESERVED,
  CK_GUEST_IA32E_PAE,
  CK_GUEST_EFER,
  CK_GUEST_PAT,
  CK_GUEST_RFLAGS,
  CK_GUEST_ACTIVITY,
  CK_GUEST_INTERRUPTIBILITY,
  CK_GUEST_SEG_AR,
  CK_GUEST_TR,
  CK_GUEST_SEG_BASE,
  CK_GUEST_SEG_LIMIT,
  CK_GUEST_LINK_PTR,
  CK_GUEST_RIP,
  CK_GUEST_MISC_RESERVED,

  CK_COUNT_,
};

inline constexpr int kCheckCount = CK_COUNT_;

}  // namespace efz
