// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>

// Bit layout of the modeled control and register fields. These are data
// definitions shared by every component; the checking logic that interprets
// them is implemented separately in the validator and in the target oracle.
namespace efz::bits {

constexpr uint64_t bit(int n) { return 1ull << n; }

// Pin-based execution controls.
inline constexpr uint64_t PIN_EXT_INT_EXITING = bit(0);
inline constexpr uint64_t PIN_NMI_EXITING = bit(3);
inline constexpr uint64_t PIN_VIRTUAL_NMI = bit(5);
inline constexpr uint64_t PIN_PREEMPTION_TIMER = bit(6);
inline constexpr uint64_t PIN_POSTED_INTERRUPTS = bit(7);

// Primary processor-based execution controls.
inline constexpr uint64_t PRIM_INTERRUPT_WINDOW = bit(2);
inline constexpr uint64_t PRIM_TSC_OFFSETTING = bit(3);
inline constexpr uint64_t PRIM_HLT_EXITING = bit(7);
inline constexpr uint64_t PRIM_INVLPG_EXITING = bit(9);
inline constexpr uint64_t PRIM_MWAIT_EXITING = bit(10);
inline constexpr uint64_t PRIM_RDPMC_EXITING = bit(11);
inline constexpr uint64_t PRIM_RDTSC_EXITING = bit(12);
inline constexpr uint64_t PRIM_CR3_LOAD_EXITING = bit(15);
inline constexpr uint64_t PRIM_CR3_STORE_EXITING = bit(16);
inline constexpr uint64_t PRIM_CR8_LOAD_EXITING = bit(19);
inline constexpr uint64_t PRIM_CR8_STORE_EXITING = bit(20);
inline constexpr uint64_t PRIM_TPR_SHADOW = bit(21);
inline constexpr uint64_t PRIM_NMI_WINDOW = bit(22);
inline constexpr uint64_t PRIM_MOV_DR_EXITING = bit(23);
inline constexpr uint64_t PRIM_UNCOND_IO_EXITING = bit(24);
inline constexpr uint64_t PRIM_USE_IO_BITMAPS = bit(25);
inline constexpr uint64_t PRIM_USE_MSR_BITMAPS = bit(28);
inline constexpr uint64_t PRIM_MONITOR_EXITING = bit(29);
inline constexpr uint64_t PRIM_PAUSE_EXITING = bit(30);
inline constexpr uint64_t PRIM_ACTIVATE_SECONDARY = bit(31);

// Secondary processor-based execution controls. Bits 16..26 advertise the
// optional feature slots of the capability profile and have no modeled
// behavior of their own.
inline constexpr uint64_t SEC_APIC_ACCESS = bit(0);
inline constexpr uint64_t SEC_ENABLE_EPT = bit(1);
inline constexpr uint64_t SEC_RDTSCP = bit(3);
inline constexpr uint64_t SEC_VIRT_X2APIC = bit(4);
inline constexpr uint64_t SEC_ENABLE_VPID = bit(5);
inline constexpr uint64_t SEC_UNRESTRICTED_GUEST = bit(7);
inline constexpr uint64_t SEC_RDRAND_EXITING = bit(12);
inline constexpr int SEC_FEATURE_ADVERT_BASE = 16;

// VM-entry controls.
inline constexpr uint64_t ENTRY_LOAD_DEBUG = bit(2);
inline constexpr uint64_t ENTRY_IA32E_GUEST = bit(9);
inline constexpr uint64_t ENTRY_LOAD_EFER = bit(13);
inline constexpr uint64_t ENTRY_LOAD_PAT = bit(14);
inline constexpr uint64_t ENTRY_ACT_HLT = bit(16);
inline constexpr uint64_t ENTRY_ACT_SHUTDOWN = bit(17);
inline constexpr uint64_t ENTRY_ACT_WAIT_SIPI = bit(18);

// VM-exit controls.
inline constexpr uint64_t EXIT_SAVE_DEBUG = bit(2);
inline constexpr uint64_t EXIT_HOST_ADDR_SPACE = bit(9);
inline constexpr uint64_t EXIT_ACK_INTERRUPT = bit(15);
inline constexpr uint64_t EXIT_SAVE_PAT = bit(18);
inline constexpr uint64_t EXIT_LOAD_PAT = bit(19);
inline constexpr uint64_t EXIT_SAVE_EFER = bit(20);
inline constexpr uint64_t EXIT_LOAD_EFER = bit(21);
inline constexpr uint64_t EXIT_SAVE_PREEMPT = bit(22);

// Control registers.
inline constexpr uint64_t CR0_PE = bit(0);
inline constexpr uint64_t CR0_MP = bit(1);
inline constexpr uint64_t CR0_EM = bit(2);
inline constexpr uint64_t CR0_TS = bit(3);
inline constexpr uint64_t CR0_ET = bit(4);
inline constexpr uint64_t CR0_NE = bit(5);
inline constexpr uint64_t CR0_WP = bit(16);
inline constexpr uint64_t CR0_AM = bit(18);
inline constexpr uint64_t CR0_NW = bit(29);
inline constexpr uint64_t CR0_CD = bit(30);
inline constexpr uint64_t CR0_PG = bit(31);
inline constexpr uint64_t CR0_DEFINED =
    CR0_PE | CR0_MP | CR0_EM | CR0_TS | CR0_ET | CR0_NE | CR0_WP | CR0_AM |
    CR0_NW | CR0_CD | CR0_PG;

inline constexpr uint64_t CR4_PAE = bit(5);
inline constexpr uint64_t CR4_VMXE = bit(13);
inline constexpr uint64_t CR4_DEFINED =
    bit(0) | bit(1) | bit(2) | bit(3) | bit(4) | CR4_PAE | bit(6) | bit(7) |
    bit(8) | bit(9) | bit(10) | bit(11) | CR4_VMXE | bit(16) | bit(17) |
    bit(18) | bit(20) | bit(21) | bit(22);

inline constexpr uint64_t EFER_SCE = bit(0);
inline constexpr uint64_t EFER_LME = bit(8);
inline constexpr uint64_t EFER_LMA = bit(10);
inline constexpr uint64_t EFER_NXE = bit(11);
inline constexpr uint64_t EFER_DEFINED = EFER_SCE | EFER_LME | EFER_LMA |
                                         EFER_NXE;

// RFLAGS: bit 1 is fixed to 1; 3, 5, 15 and everything above 21 are fixed
// to 0. VM (bit 17) is modeled as reserved.
inline constexpr uint64_t RFLAGS_FIXED1 = bit(1);
inline constexpr uint64_t RFLAGS_DEFINED =
    bit(0) | bit(1) | bit(2) | bit(4) | bit(6) | bit(7) | bit(8) | bit(9) |
    bit(10) | bit(11) | bit(12) | bit(13) | bit(14) | bit(16) | bit(18) |
    bit(19) | bit(20) | bit(21);

// Segment access rights.
inline constexpr uint64_t AR_TYPE_MASK = 0xF;
inline constexpr uint64_t AR_TYPE_ACCESSED = bit(0);
inline constexpr uint64_t AR_TYPE_CODE = bit(3);
inline constexpr uint64_t AR_S = bit(4);
inline constexpr uint64_t AR_P = bit(7);
inline constexpr uint64_t AR_RESERVED_11_8 = 0xF00;
inline constexpr uint64_t AR_AVL = bit(12);
inline constexpr uint64_t AR_L = bit(13);
inline constexpr uint64_t AR_DB = bit(14);
inline constexpr uint64_t AR_G = bit(15);
inline constexpr uint64_t AR_UNUSABLE = bit(16);
inline constexpr uint64_t AR_RESERVED_HIGH = ~((bit(17)) - 1) &
                                             0xFFFFFFFFull;

// Guest activity states.
inline constexpr uint64_t ACTIVITY_ACTIVE = 0;
inline constexpr uint64_t ACTIVITY_HLT = 1;
inline constexpr uint64_t ACTIVITY_SHUTDOWN = 2;
inline constexpr uint64_t ACTIVITY_WAIT_SIPI = 3;

// Interruptibility state.
inline constexpr uint64_t INTR_BLOCK_STI = bit(0);
inline constexpr uint64_t INTR_BLOCK_MOV_SS = bit(1);
inline constexpr uint64_t INTR_BLOCK_SMI = bit(2);
inline constexpr uint64_t INTR_BLOCK_NMI = bit(3);
inline constexpr uint64_t INTR_VGIF = bit(4);

// Pending debug exceptions: B3:0, bit 12 (enabled breakpoint) and BS.
inline constexpr uint64_t PENDING_DBG_DEFINED = 0xF | bit(12) | bit(14);

// EPT pointer layout: memory type 2:0, walk length 5:3, AD flag 6,
// physical page number from bit 12.
inline constexpr uint64_t EPTP_MEMTYPE_MASK = 0x7;
inline constexpr uint64_t EPTP_MEMTYPE_UC = 0;
inline constexpr uint64_t EPTP_MEMTYPE_WB = 6;
inline constexpr uint64_t EPTP_WALK_MASK = 0x38;
inline constexpr uint64_t EPTP_WALK_4LEVEL = 3ull << 3;
inline constexpr uint64_t EPTP_AD_FLAG = bit(6);

// Event injection (ENTRY_INTR_INFO): vector 7:0, type 10:8, error-code
// flag 11, reserved 30:12, valid 31.
inline constexpr uint64_t INTR_INFO_VALID = bit(31);
inline constexpr uint64_t INTR_INFO_TYPE_MASK = 0x700;
inline constexpr int INTR_INFO_TYPE_SHIFT = 8;
inline constexpr uint64_t INTR_INFO_VECTOR_MASK = 0xFF;
inline constexpr uint64_t INTR_INFO_RESERVED = 0x7FFFF000;

// MSR indexes accepted in the VM-entry MSR-load area.
inline constexpr uint32_t MSR_SYSENTER_ESP = 0x175;
inline constexpr uint32_t MSR_SYSENTER_EIP = 0x176;
inline constexpr uint32_t MSR_EFER = 0xC0000080;
inline constexpr uint32_t MSR_STAR = 0xC0000081;
inline constexpr uint32_t MSR_LSTAR = 0xC0000082;
inline constexpr uint32_t MSR_FS_BASE = 0xC0000100;
inline constexpr uint32_t MSR_GS_BASE = 0xC0000101;
inline constexpr uint32_t MSR_KERNEL_GS_BASE = 0xC0000102;

inline constexpr uint32_t MSR_LOAD_TABLE[8] = {
    MSR_KERNEL_GS_BASE, MSR_FS_BASE, MSR_GS_BASE,      MSR_EFER,
    MSR_STAR,           MSR_LSTAR,   MSR_SYSENTER_ESP, MSR_SYSENTER_EIP,
};
inline constexpr int MSR_LOAD_CAPACITY = 4;

// MSRs whose loaded value must be a canonical address.
constexpr bool msr_value_canonical_required(uint32_t msr) {
  return msr == MSR_KERNEL_GS_BASE || msr == MSR_FS_BASE ||
         msr == MSR_GS_BASE || msr == MSR_LSTAR || msr == MSR_SYSENTER_ESP ||
         msr == MSR_SYSENTER_EIP;
}

constexpr bool is_canonical(uint64_t addr) {
  int64_t s = static_cast<int64_t>(addr << 16) >> 16;
  return static_cast<uint64_t>(s) == addr;
}

constexpr uint64_t make_canonical(uint64_t addr) {
  int64_t s = static_cast<int64_t>(addr << 16) >> 16;
  return static_cast<uint64_t>(s);
}

inline constexpr int CR3_TARGET_CAPACITY = 2;

}  // namespace efz::bits
