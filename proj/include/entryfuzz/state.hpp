// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efz {

inline constexpr int kFieldCount = 165;
inline constexpr int kStateBits = 8000;
inline constexpr int kBlobBytes = kStateBits / 8;

enum class FieldGroup : uint8_t {
  ExecutionControl,
  EntryExitControl,
  HostState,
  GuestState,
};

std::string_view to_string(FieldGroup g);

// One VMCS-style field: dense id, symbolic name, width in bits, group.
struct FieldSpec {
  uint16_t id;
  std::string name;
  uint8_t width;  // 16, 32 or 64
  FieldGroup group;
  // Checks that read or constrain this field (ids into the check catalog).
  std::vector<uint16_t> constraint_ids;

  uint64_t value_mask() const {
    return width == 64 ? ~0ull : ((1ull << width) - 1);
  }

  bool operator==(const FieldSpec&) const = default;
};

// Field ids. The catalog is ordered by group: execution controls,
// entry/exit controls, host state, guest state. Reserved fields pad the
// layout to exactly 8,000 bits.
enum FieldId : uint16_t {
  F_PIN_BASED_CONTROLS = 0,
  F_PRIMARY_PROC_CONTROLS,
  F_SECONDARY_PROC_CONTROLS,
  F_EXCEPTION_BITMAP,
  F_PF_ERRCODE_MASK,
  F_PF_ERRCODE_MATCH,
  F_IO_BITMAP_A_ADDR,
  F_IO_BITMAP_B_ADDR,
  F_MSR_BITMAP_ADDR,
  F_APIC_ACCESS_ADDR,
  F_VIRTUAL_APIC_ADDR,
  F_POSTED_INT_DESC_ADDR,
  F_POSTED_INT_VECTOR,
  F_TSC_OFFSET,
  F_CR0_GUEST_HOST_MASK,
  F_CR4_GUEST_HOST_MASK,
  F_CR0_READ_SHADOW,
  F_CR4_READ_SHADOW,
  F_CR3_TARGET_COUNT,
  F_CR3_TARGET_VALUE0,
  F_CR3_TARGET_VALUE1,
  F_VIRTUAL_PROCESSOR_ID,
  F_EPT_POINTER,
  F_TPR_THRESHOLD,
  F_PLE_GAP,
  F_PLE_WINDOW,
  F_VMFUNC_CONTROLS,
  F_RESERVED_CTL_00,  // 27..46: twenty reserved 64-bit control fields
  F_RESERVED_CTL_19 = 46,
  F_VM_ENTRY_CONTROLS = 47,
  F_VM_EXIT_CONTROLS,
  F_ENTRY_INTR_INFO,
  F_ENTRY_EXCEPTION_ERRCODE,
  F_ENTRY_INSTR_LEN,
  F_ENTRY_MSR_LOAD_COUNT,
  F_ENTRY_MSR0_INDEX,
  F_ENTRY_MSR0_VALUE,
  F_ENTRY_MSR1_INDEX,
  F_ENTRY_MSR1_VALUE,
  F_ENTRY_MSR2_INDEX,
  F_ENTRY_MSR2_VALUE,
  F_ENTRY_MSR3_INDEX,
  F_ENTRY_MSR3_VALUE,
  F_EXIT_MSR_STORE_COUNT,
  F_EXIT_MSR_STORE_ADDR,
  F_EXIT_MSR_LOAD_COUNT,
  F_EXIT_MSR_LOAD_ADDR,
  F_RESERVED_XCTL_00,  // 65..87: reserved entry/exit control fields
  F_RESERVED_XCTL_22 = 87,
  F_HOST_CR0 = 88,
  F_HOST_CR3,
  F_HOST_CR4,
  F_HOST_RSP,
  F_HOST_RIP,
  F_HOST_ES_SELECTOR,
  F_HOST_CS_SELECTOR,
  F_HOST_SS_SELECTOR,
  F_HOST_DS_SELECTOR,
  F_HOST_FS_SELECTOR,
  F_HOST_GS_SELECTOR,
  F_HOST_TR_SELECTOR,
  F_HOST_FS_BASE,
  F_HOST_GS_BASE,
  F_HOST_TR_BASE,
  F_HOST_GDTR_BASE,
  F_HOST_IDTR_BASE,
  F_HOST_SYSENTER_CS,
  F_HOST_SYSENTER_ESP,
  F_HOST_SYSENTER_EIP,
  F_HOST_EFER,
  F_HOST_PAT,
  F_GUEST_CR0 = 110,
  F_GUEST_CR3,
  F_GUEST_CR4,
  F_GUEST_DR7,
  F_GUEST_RSP,
  F_GUEST_RIP,
  F_GUEST_RFLAGS,
  F_GUEST_ES_SELECTOR,
  F_GUEST_ES_BASE,
  F_GUEST_ES_LIMIT,
  F_GUEST_ES_AR,
  F_GUEST_CS_SELECTOR,
  F_GUEST_CS_BASE,
  F_GUEST_CS_LIMIT,
  F_GUEST_CS_AR,
  F_GUEST_SS_SELECTOR,
  F_GUEST_SS_BASE,
  F_GUEST_SS_LIMIT,
  F_GUEST_SS_AR,
  F_GUEST_DS_SELECTOR,
  F_GUEST_DS_BASE,
  F_GUEST_DS_LIMIT,
  F_GUEST_DS_AR,
  F_GUEST_FS_SELECTOR,
  F_GUEST_FS_BASE,
  F_GUEST_FS_LIMIT,
  F_GUEST_FS_AR,
  F_GUEST_GS_SELECTOR,
  F_GUEST_GS_BASE,
  F_GUEST_GS_LIMIT,
  F_GUEST_GS_AR,
  F_GUEST_LDTR_SELECTOR,
  F_GUEST_LDTR_BASE,
  F_GUEST_LDTR_LIMIT,
  F_GUEST_LDTR_AR,
  F_GUEST_TR_SELECTOR,
  F_GUEST_TR_BASE,
  F_GUEST_TR_LIMIT,
  F_GUEST_TR_AR,
  F_GUEST_GDTR_BASE,
  F_GUEST_GDTR_LIMIT,
  F_GUEST_IDTR_BASE,
  F_GUEST_IDTR_LIMIT,
  F_GUEST_SYSENTER_CS,
  F_GUEST_SYSENTER_ESP,
  F_GUEST_SYSENTER_EIP,
  F_GUEST_EFER,
  F_GUEST_PAT,
  F_GUEST_ACTIVITY_STATE,
  F_GUEST_INTERRUPTIBILITY,
  F_GUEST_PENDING_DBG,
  F_GUEST_VMCS_LINK_PTR,
  F_GUEST_INTERRUPT_STATUS,
  F_GUEST_PML_INDEX,
  F_GUEST_PREEMPTION_TIMER,
};
static_assert(F_GUEST_PREEMPTION_TIMER == kFieldCount - 1);

// Immutable catalog of all fields. The production catalog is a process-wide
// singleton; tests may build reduced catalogs for brute-force comparison.
class FieldCatalog {
 public:
  explicit FieldCatalog(std::vector<FieldSpec> fields);

  const FieldSpec& operator[](uint16_t id) const { return fields_[id]; }
  size_t size() const { return fields_.size(); }
  int total_bits() const { return total_bits_; }
  auto begin() const { return fields_.begin(); }
  auto end() const { return fields_.end(); }

  // Returns -1 when the name is unknown.
  int find(std::string_view name) const;

 private:
  std::vector<FieldSpec> fields_;
  int total_bits_ = 0;
};

// The production catalog: 165 fields, 8,000 bits.
const FieldCatalog& catalog();

// Builds a fresh, independent copy of the production catalog.
FieldCatalog make_catalog();

// Catalog dump (id, name, width, group, constraint ids) as a JSON string.
std::string catalog_json();

// A full VM state: one unsigned value per catalog field, always masked to
// the field width.
class VmState {
 public:
  VmState() : values_{} {}

  uint64_t read(uint16_t id) const;
  void write(uint16_t id, uint64_t value);

  bool operator==(const VmState&) const = default;

  std::span<const uint64_t, kFieldCount> raw() const { return values_; }

 private:
  std::array<uint64_t, kFieldCount> values_;
};

uint64_t read_field(const VmState& s, uint16_t id);
VmState write_field(VmState s, uint16_t id, uint64_t value);

// 1,000-byte blob codec: field-major, little-endian, catalog order.
using StateBlob = std::array<uint8_t, kBlobBytes>;
StateBlob encode(const VmState& s);
VmState decode(std::span<const uint8_t> blob);

// Number of differing bits across the whole 8,000-bit state.
int hamming_distance(const VmState& a, const VmState& b);

}  // namespace efz
