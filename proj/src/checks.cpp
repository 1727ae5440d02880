// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/checks.hpp"

#include <stdexcept>

namespace efz::vmcheck {

namespace {

using G = FieldGroup;
using K = CheckKind;

const std::vector<CheckInfo>& table() {
  static const std::vector<CheckInfo> t = {
      {CK_SEQUENCE_ERROR, "SEQUENCE_ERROR", G::ExecutionControl, K::Protocol,
       "VMX instruction issued out of the required init sequence"},

      {CK_CTRL_PIN, "CTRL_PIN", G::ExecutionControl, K::State,
       "pin-based controls obey allowed-0/allowed-1; virtual NMIs require "
       "NMI exiting"},
      {CK_CTRL_PRIMARY, "CTRL_PRIMARY", G::ExecutionControl, K::State,
       "primary processor-based controls obey allowed-0/allowed-1"},
      {CK_CTRL_SECONDARY, "CTRL_SECONDARY", G::ExecutionControl, K::State,
       "secondary controls obey allowed-1 while activated"},
      {CK_CTRL_SECONDARY_GATING, "CTRL_SECONDARY_GATING",
       G::ExecutionControl, K::State,
       "secondary controls are zero when not activated; enabled VPID is "
       "nonzero"},
      {CK_CTRL_ENTRY, "CTRL_ENTRY", G::EntryExitControl, K::State,
       "VM-entry controls obey allowed-0/allowed-1"},
      {CK_CTRL_EXIT, "CTRL_EXIT", G::EntryExitControl, K::State,
       "VM-exit controls obey allowed-0/allowed-1"},
      {CK_CTRL_RESERVED_MBZ, "CTRL_RESERVED_MBZ", G::ExecutionControl,
       K::State,
       "reserved control fields and reserved bits of shadow/threshold "
       "fields are zero"},
      {CK_CTRL_ADDR_LIMITS, "CTRL_ADDR_LIMITS", G::ExecutionControl,
       K::State,
       "bitmap and store areas aligned and below the physical address "
       "width; target counts within capacity"},
      {CK_CTRL_EPTP, "CTRL_EPTP", G::ExecutionControl, K::State,
       "EPT pointer memory type, walk length and reserved bits valid while "
       "EPT is enabled"},
      {CK_ENTRY_EVENT_INJECT, "ENTRY_EVENT_INJECT", G::EntryExitControl,
       K::State,
       "event injection info well formed; instruction length within range"},
      {CK_MSRLOAD_COUNT, "MSRLOAD_COUNT", G::EntryExitControl, K::State,
       "MSR-load count within area capacity"},
      {CK_MSRLOAD_INDEX, "MSRLOAD_INDEX", G::EntryExitControl, K::State,
       "active MSR-load slots name a loadable MSR"},
      {CK_MSRLOAD_CANONICAL, "MSRLOAD_CANONICAL", G::EntryExitControl,
       K::State,
       "values loaded into address-bearing MSRs are canonical"},

      {CK_HOST_CR0, "HOST_CR0", G::HostState, K::State,
       "host CR0 fixed bits set (PE, NE, PG) and reserved bits zero"},
      {CK_HOST_CR4, "HOST_CR4", G::HostState, K::State,
       "host CR4 VMXE set, reserved bits zero, PAE set for a 64-bit host"},
      {CK_HOST_CR3_WIDTH, "HOST_CR3_WIDTH", G::HostState, K::State,
       "host CR3 below the physical address width"},
      {CK_HOST_CANONICAL, "HOST_CANONICAL", G::HostState, K::State,
       "host RIP/RSP, descriptor-table and segment bases, SYSENTER ESP/EIP "
       "canonical"},
      {CK_HOST_SELECTORS, "HOST_SELECTORS", G::HostState, K::State,
       "host selectors have RPL 0 and TI 0; TR selector nonzero"},
      {CK_HOST_EFER, "HOST_EFER", G::HostState, K::State,
       "host EFER reserved bits zero; LME/LMA match the host address-space "
       "control"},
      {CK_HOST_PAT, "HOST_PAT", G::HostState, K::State,
       "host PAT entries are valid memory types"},

      {CK_GUEST_CR_RESERVED, "GUEST_CR_RESERVED", G::GuestState, K::State,
       "guest CR0/CR4 reserved bits zero (CR0.ET set); CR3 below the "
       "physical address width"},
      {CK_GUEST_CR0_PG_PE, "GUEST_CR0_PG_PE", G::GuestState, K::State,
       "guest CR0 paging requires protection (PG implies PE)"},
      {CK_GUEST_CR0_PE_UG, "GUEST_CR0_PE_UG", G::GuestState, K::State,
       "guest CR0.PE set unless unrestricted guest is enabled"},
      {CK_GUEST_DEBUG_RESERVED, "GUEST_DEBUG_RESERVED", G::GuestState,
       K::State,
       "guest DR7 and pending debug exceptions reserved bits zero"},
      {CK_GUEST_IA32E_PAE, "GUEST_IA32E_REQUIRES_PAE", G::GuestState,
       K::State,
       "IA-32e mode entry requires guest CR4.PAE and EFER.LME"},
      {CK_GUEST_EFER, "GUEST_EFER", G::GuestState, K::State,
       "guest EFER reserved bits zero; LMA equals LME and CR0.PG"},
      {CK_GUEST_PAT, "GUEST_PAT", G::GuestState, K::State,
       "guest PAT entries are valid memory types"},
      {CK_GUEST_RFLAGS, "GUEST_RFLAGS", G::GuestState, K::State,
       "guest RFLAGS fixed bits (bit 1 set, reserved bits zero)"},
      {CK_GUEST_ACTIVITY, "GUEST_ACTIVITY", G::GuestState, K::State,
       "guest activity state is a member of the profile-allowed set"},
      {CK_GUEST_INTERRUPTIBILITY, "GUEST_INTERRUPTIBILITY", G::GuestState,
       K::State,
       "interruptibility reserved bits zero, STI/MOV-SS blocking "
       "exclusive and compatible with the activity state"},
      {CK_GUEST_SEG_AR, "GUEST_SEG_AR", G::GuestState, K::State,
       "usable segment access rights well formed; CS always usable"},
      {CK_GUEST_TR, "GUEST_TR", G::GuestState, K::State,
       "TR usable with a busy TSS type"},
      {CK_GUEST_SEG_BASE, "GUEST_SEG_BASE", G::GuestState, K::State,
       "segment and descriptor-table bases canonical in long mode, 32-bit "
       "otherwise; table limits within 16 bits"},
      {CK_GUEST_SEG_LIMIT, "GUEST_SEG_LIMIT", G::GuestState, K::State,
       "segment limits consistent with access-rights granularity"},
      {CK_GUEST_LINK_PTR, "GUEST_LINK_PTR", G::GuestState, K::State,
       "VMCS link pointer is all ones"},
      {CK_GUEST_RIP, "GUEST_RIP", G::GuestState, K::State,
       "guest RIP canonical in long mode, 32-bit otherwise"},
      {CK_GUEST_MISC_RESERVED, "GUEST_MISC_RESERVED", G::GuestState,
       K::State,
       "interrupt status, PML index and preemption timer obey feature "
       "gating and reserved bits"},
  };
  return t;
}

}  // namespace

const std::vector<CheckInfo>& check_catalog() {
  const auto& t = table();
  if (t.size() != kCheckCount) throw std::logic_error("check catalog size");
  return t;
}

const CheckInfo& check_info(CheckId id) {
  const auto& t = check_catalog();
  for (const auto& info : t)
    if (info.id == id) return info;
  throw std::out_of_range("unknown check id");
}

std::string_view check_name(CheckId id) { return check_info(id).name; }

}  // namespace efz::vmcheck
