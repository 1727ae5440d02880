// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/state.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include "entryfuzz/check_ids.hpp"

namespace efz {

std::string_view to_string(FieldGroup g) {
  switch (g) {
    case FieldGroup::ExecutionControl: return "execution-control";
    case FieldGroup::EntryExitControl: return "entry-exit-control";
    case FieldGroup::HostState: return "host-state";
    case FieldGroup::GuestState: return "guest-state";
  }
  return "?";
}

FieldCatalog::FieldCatalog(std::vector<FieldSpec> fields)
    : fields_(std::move(fields)) {
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].id != i) throw std::logic_error("catalog ids not dense");
    total_bits_ += fields_[i].width;
  }
}

int FieldCatalog::find(std::string_view name) const {
  for (const auto& f : fields_)
    if (f.name == name) return f.id;
  return -1;
}

namespace {

using G = FieldGroup;
using Checks = std::vector<uint16_t>;

std::vector<FieldSpec> build_fields() {
  std::vector<FieldSpec> v;
  v.reserve(kFieldCount);
  auto add = [&](std::string name, uint8_t width, G group, Checks checks) {
    v.push_back(FieldSpec{static_cast<uint16_t>(v.size()), std::move(name),
                          width, group, std::move(checks)});
  };

  // Execution controls.
  add("PIN_BASED_CONTROLS", 32, G::ExecutionControl, {CK_CTRL_PIN});
  add("PRIMARY_PROC_CONTROLS", 32, G::ExecutionControl,
      {CK_CTRL_PRIMARY, CK_CTRL_SECONDARY_GATING, CK_CTRL_ADDR_LIMITS,
       CK_CTRL_EPTP});
  add("SECONDARY_PROC_CONTROLS", 32, G::ExecutionControl,
      {CK_CTRL_SECONDARY, CK_CTRL_SECONDARY_GATING, CK_CTRL_EPTP});
  add("EXCEPTION_BITMAP", 32, G::ExecutionControl, {});
  add("PF_ERRCODE_MASK", 32, G::ExecutionControl, {});
  add("PF_ERRCODE_MATCH", 32, G::ExecutionControl, {});
  add("IO_BITMAP_A_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("IO_BITMAP_B_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("MSR_BITMAP_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("APIC_ACCESS_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("VIRTUAL_APIC_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("POSTED_INT_DESC_ADDR", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("POSTED_INT_VECTOR", 16, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("TSC_OFFSET", 64, G::ExecutionControl, {});
  add("CR0_GUEST_HOST_MASK", 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("CR4_GUEST_HOST_MASK", 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("CR0_READ_SHADOW", 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("CR4_READ_SHADOW", 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("CR3_TARGET_COUNT", 32, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("CR3_TARGET_VALUE0", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("CR3_TARGET_VALUE1", 64, G::ExecutionControl, {CK_CTRL_ADDR_LIMITS});
  add("VIRTUAL_PROCESSOR_ID", 16, G::ExecutionControl,
      {CK_CTRL_SECONDARY_GATING});
  add("EPT_POINTER", 64, G::ExecutionControl, {CK_CTRL_EPTP});
  add("TPR_THRESHOLD", 32, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  add("PLE_GAP", 32, G::ExecutionControl, {});
  add("PLE_WINDOW", 32, G::ExecutionControl, {});
  add("VMFUNC_CONTROLS", 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  for (int i = 0; i < 20; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "RESERVED_CTL_%02d", i);
    add(name, 64, G::ExecutionControl, {CK_CTRL_RESERVED_MBZ});
  }

  // Entry/exit controls.
  add("VM_ENTRY_CONTROLS", 32, G::EntryExitControl,
      {CK_CTRL_ENTRY, CK_GUEST_IA32E_PAE, CK_GUEST_SEG_BASE, CK_GUEST_RIP});
  add("VM_EXIT_CONTROLS", 32, G::EntryExitControl,
      {CK_CTRL_EXIT, CK_HOST_CR4, CK_HOST_EFER});
  add("ENTRY_INTR_INFO", 32, G::EntryExitControl, {CK_ENTRY_EVENT_INJECT});
  add("ENTRY_EXCEPTION_ERRCODE", 32, G::EntryExitControl, {});
  add("ENTRY_INSTR_LEN", 32, G::EntryExitControl, {CK_ENTRY_EVENT_INJECT});
  add("ENTRY_MSR_LOAD_COUNT", 32, G::EntryExitControl,
      {CK_MSRLOAD_COUNT, CK_MSRLOAD_INDEX, CK_MSRLOAD_CANONICAL});
  for (int i = 0; i < 4; ++i) {
    char idx[32], val[32];
    std::snprintf(idx, sizeof idx, "ENTRY_MSR%d_INDEX", i);
    std::snprintf(val, sizeof val, "ENTRY_MSR%d_VALUE", i);
    add(idx, 32, G::EntryExitControl, {CK_MSRLOAD_INDEX, CK_MSRLOAD_CANONICAL});
    add(val, 64, G::EntryExitControl, {CK_MSRLOAD_CANONICAL});
  }
  add("EXIT_MSR_STORE_COUNT", 32, G::EntryExitControl, {CK_CTRL_ADDR_LIMITS});
  add("EXIT_MSR_STORE_ADDR", 64, G::EntryExitControl, {CK_CTRL_ADDR_LIMITS});
  add("EXIT_MSR_LOAD_COUNT", 32, G::EntryExitControl, {CK_CTRL_ADDR_LIMITS});
  add("EXIT_MSR_LOAD_ADDR", 64, G::EntryExitControl, {CK_CTRL_ADDR_LIMITS});
  for (int i = 0; i < 23; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "RESERVED_XCTL_%02d", i);
    uint8_t width = i < 18 ? 64 : (i < 20 ? 32 : 16);
    add(name, width, G::EntryExitControl, {CK_CTRL_RESERVED_MBZ});
  }

  // Host state.
  add("HOST_CR0", 64, G::HostState, {CK_HOST_CR0});
  add("HOST_CR3", 64, G::HostState, {CK_HOST_CR3_WIDTH});
  add("HOST_CR4", 64, G::HostState, {CK_HOST_CR4});
  add("HOST_RSP", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_RIP", 64, G::HostState, {CK_HOST_CANONICAL});
  for (const char* seg : {"ES", "CS", "SS", "DS", "FS", "GS", "TR"})
    add(std::string("HOST_") + seg + "_SELECTOR", 16, G::HostState,
        {CK_HOST_SELECTORS});
  add("HOST_FS_BASE", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_GS_BASE", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_TR_BASE", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_GDTR_BASE", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_IDTR_BASE", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_SYSENTER_CS", 32, G::HostState, {});
  add("HOST_SYSENTER_ESP", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_SYSENTER_EIP", 64, G::HostState, {CK_HOST_CANONICAL});
  add("HOST_EFER", 64, G::HostState, {CK_HOST_EFER});
  add("HOST_PAT", 64, G::HostState, {CK_HOST_PAT});

  // Guest state.
  add("GUEST_CR0", 64, G::GuestState,
      {CK_GUEST_CR_RESERVED, CK_GUEST_CR0_PG_PE, CK_GUEST_CR0_PE_UG,
       CK_GUEST_EFER});
  add("GUEST_CR3", 64, G::GuestState, {CK_GUEST_CR_RESERVED});
  add("GUEST_CR4", 64, G::GuestState,
      {CK_GUEST_CR_RESERVED, CK_GUEST_IA32E_PAE});
  add("GUEST_DR7", 64, G::GuestState, {CK_GUEST_DEBUG_RESERVED});
  add("GUEST_RSP", 64, G::GuestState, {});
  add("GUEST_RIP", 64, G::GuestState, {CK_GUEST_RIP});
  add("GUEST_RFLAGS", 64, G::GuestState, {CK_GUEST_RFLAGS});
  for (const char* seg : {"ES", "CS", "SS", "DS", "FS", "GS", "LDTR", "TR"}) {
    std::string p = std::string("GUEST_") + seg + "_";
    bool is_tr = std::string_view(seg) == "TR";
    add(p + "SELECTOR", 16, G::GuestState, {});
    add(p + "BASE", 64, G::GuestState, {CK_GUEST_SEG_BASE});
    add(p + "LIMIT", 32, G::GuestState, {CK_GUEST_SEG_LIMIT});
    add(p + "AR", 32, G::GuestState,
        is_tr ? Checks{CK_GUEST_TR, CK_GUEST_SEG_BASE, CK_GUEST_SEG_LIMIT}
              : Checks{CK_GUEST_SEG_AR, CK_GUEST_SEG_BASE,
                       CK_GUEST_SEG_LIMIT});
  }
  add("GUEST_GDTR_BASE", 64, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_GDTR_LIMIT", 32, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_IDTR_BASE", 64, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_IDTR_LIMIT", 32, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_SYSENTER_CS", 32, G::GuestState, {});
  add("GUEST_SYSENTER_ESP", 64, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_SYSENTER_EIP", 64, G::GuestState, {CK_GUEST_SEG_BASE});
  add("GUEST_EFER", 64, G::GuestState, {CK_GUEST_EFER, CK_GUEST_IA32E_PAE});
  add("GUEST_PAT", 64, G::GuestState, {CK_GUEST_PAT});
  add("GUEST_ACTIVITY_STATE", 32, G::GuestState,
      {CK_GUEST_ACTIVITY, CK_GUEST_INTERRUPTIBILITY});
  add("GUEST_INTERRUPTIBILITY", 32, G::GuestState,
      {CK_GUEST_INTERRUPTIBILITY});
  add("GUEST_PENDING_DBG", 64, G::GuestState, {CK_GUEST_DEBUG_RESERVED});
  add("GUEST_VMCS_LINK_PTR", 64, G::GuestState, {CK_GUEST_LINK_PTR});
  add("GUEST_INTERRUPT_STATUS", 16, G::GuestState, {CK_GUEST_MISC_RESERVED});
  add("GUEST_PML_INDEX", 16, G::GuestState, {CK_GUEST_MISC_RESERVED});
  add("GUEST_PREEMPTION_TIMER", 32, G::GuestState, {CK_GUEST_MISC_RESERVED});

  if (v.size() != kFieldCount) throw std::logic_error("catalog size");
  return v;
}

}  // namespace

FieldCatalog make_catalog() { return FieldCatalog(build_fields()); }

const FieldCatalog& catalog() {
  static const FieldCatalog instance(build_fields());
  if (instance.total_bits() != kStateBits)
    throw std::logic_error("catalog bit total");
  return instance;
}

uint64_t VmState::read(uint16_t id) const {
  if (id >= kFieldCount) throw std::out_of_range("unknown field id");
  return values_[id];
}

void VmState::write(uint16_t id, uint64_t value) {
  if (id >= kFieldCount) throw std::out_of_range("unknown field id");
  values_[id] = value & catalog()[id].value_mask();
}

uint64_t read_field(const VmState& s, uint16_t id) { return s.read(id); }

VmState write_field(VmState s, uint16_t id, uint64_t value) {
  s.write(id, value);
  return s;
}

StateBlob encode(const VmState& s) {
  StateBlob blob{};
  size_t off = 0;
  for (const auto& f : catalog()) {
    uint64_t v = s.read(f.id);
    int nbytes = f.width / 8;
    for (int i = 0; i < nbytes; ++i) blob[off + i] = uint8_t(v >> (8 * i));
    off += nbytes;
  }
  return blob;
}

VmState decode(std::span<const uint8_t> blob) {
  if (blob.size() != kBlobBytes)
    throw std::invalid_argument("state blob must be exactly 1000 bytes");
  VmState s;
  size_t off = 0;
  for (const auto& f : catalog()) {
    uint64_t v = 0;
    int nbytes = f.width / 8;
    for (int i = 0; i < nbytes; ++i) v |= uint64_t(blob[off + i]) << (8 * i);
    s.write(f.id, v);
    off += nbytes;
  }
  return s;
}

int hamming_distance(const VmState& a, const VmState& b) {
  int bits = 0;
  auto ra = a.raw(), rb = b.raw();
  for (int i = 0; i < kFieldCount; ++i)
    bits += std::popcount(ra[i] ^ rb[i]);
  return bits;
}

}  // namespace efz
