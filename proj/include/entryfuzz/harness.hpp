// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entryfuzz/caps.hpp"
#include "entryfuzz/state.hpp"

namespace efz::oracle {
class Oracle;
}

namespace efz::harness {

// Instruction classes the L2 guest can execute to provoke a VM exit.
enum class TriggerKind : uint8_t {
  ControlRegisterAccess = 0,
  DebugRegisterAccess,
  IoPort,
  MsrRead,
  MsrWrite,
  CpuId,
  Halt,
  ReadTsc,
  Pause,
  RdRand,
  VmxInstruction,
};
inline constexpr int kTriggerKinds = 11;
std::string_view trigger_name(TriggerKind k);

enum class OpCode : uint8_t {
  VmxOn = 0,
  VmClear,
  VmPtrLd,
  VmWrite,
  VmLaunch,
  VmResume,
  VmRead,
  ExitTrigger,
};
std::string_view op_name(OpCode op);

enum class Context : uint8_t { L1 = 0, L2 };

// One init-phase instruction. VmWrite sources its value from the prepared
// VM state, optionally xor-perturbed by the fuzz input.
struct HarnessOp {
  OpCode op;
  uint16_t field = 0;     // VmWrite / VmRead
  uint64_t xor_mask = 0;  // VmWrite argument perturbation
};

// One runtime-phase iteration: an L2 trigger, the L1 response once the
// exit arrives, and the re-entry.
struct RuntimeStep {
  TriggerKind trigger;
  uint8_t sub = 0;       // register/MSR/port selector
  uint64_t operand = 0;  // value written / port data / MSR value
  OpCode l1_op = OpCode::VmRead;  // VmRead, VmWrite, VmResume or VmClear
  uint16_t l1_field = 0;
  uint64_t l1_value = 0;
};

struct HarnessProgram {
  std::vector<HarnessOp> init_ops;
  std::vector<RuntimeStep> runtime_steps;
  int iteration_cap = 256;
};

inline constexpr int kInitSliceBytes = 32;
inline constexpr int kStepSliceBytes = 8;
inline constexpr int kTemplateWriteSlots = 12;

// Fields the base template writes; one slot per state group of interest.
std::span<const uint16_t, kTemplateWriteSlots> template_write_fields();

// The unmodified base init sequence: vmxon, vmclear, vmptrld, twelve
// vmwrites, vmlaunch.
std::vector<HarnessOp> base_init_sequence();

// Decodes at least 32 bytes of fuzz input into an init sequence derived
// from the base template by up to three adjacent swaps, per-op repetition
// (at most four) and vmwrite argument perturbation. An all-zero slice
// yields the unmodified template. Throws std::invalid_argument on short
// input.
std::vector<HarnessOp> build_init_sequence(std::span<const uint8_t> slice);

// Decodes 8 bytes into one runtime step. An all-zero slice selects a CR0
// access with operand 0 answered by a VmRead of field 0.
RuntimeStep build_runtime_step(std::span<const uint8_t> slice);

// Builds a full program: init sequence from the first slice, one runtime
// step per 8 bytes of the second.
HarnessProgram build_program(std::span<const uint8_t> init_slice,
                             std::span<const uint8_t> steps_slice);

// The fixed program used when the harness stage is disabled: base init
// template plus a short fixed trigger rotation.
HarnessProgram fixed_base_program();

enum class TerminalStatus : uint8_t {
  Completed = 0,
  OracleRejected,
  OracleCrashed,
};
std::string_view to_string(TerminalStatus s);

enum class OpResponse : uint8_t {
  Ok = 0,
  VmFail,          // instruction refused (sequence / launched state)
  EntryAccepted,
  EntryRejected,
  EntryCrashed,
  Exited,          // trigger caused a VM exit to L1
  NoExit,          // trigger handled without leaving L2
};

struct TraceEvent {
  uint8_t phase;  // 1 = init, 2 = runtime
  Context ctx;
  OpCode op;                   // ExitTrigger for L2 trigger events
  TriggerKind trigger;         // valid when op == ExitTrigger
  OpResponse response;
  uint16_t detail = 0;         // check id / bug id / new-edge count
};

struct ExecutionTrace {
  std::vector<TraceEvent> events;
  TerminalStatus terminal = TerminalStatus::Completed;
  int runtime_steps_run = 0;
  std::vector<std::string> diagnostics;  // oracle log lines for this run
};

// Runs the program against an oracle that was constructed with the same
// profile. Oracle crashes terminate the trace; they are never propagated
// as exceptions.
ExecutionTrace execute(const HarnessProgram& program, const VmState& state,
                       const caps::CapabilityProfile& profile,
                       oracle::Oracle& target);

// Trace dump as JSON lines (one op per line) for reproducer bundles.
std::string trace_jsonl(const ExecutionTrace& t);

}  // namespace efz::harness
