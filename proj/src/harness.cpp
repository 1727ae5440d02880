// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/harness.hpp"

#include <algorithm>
#include <stdexcept>

#include "entryfuzz/oracle.hpp"

namespace efz::harness {

namespace {

constexpr uint16_t kTemplateFields[kTemplateWriteSlots] = {
    F_PIN_BASED_CONTROLS, F_PRIMARY_PROC_CONTROLS, F_VM_ENTRY_CONTROLS,
    F_VM_EXIT_CONTROLS,   F_HOST_CR0,              F_HOST_RIP,
    F_GUEST_CR0,          F_GUEST_CR4,             F_GUEST_RIP,
    F_GUEST_RFLAGS,       F_GUEST_CS_AR,           F_GUEST_ACTIVITY_STATE,
};

constexpr int kBaseOps = 3 + kTemplateWriteSlots + 1;  // 16 total

constexpr uint64_t rotl64(uint64_t v, int r) {
  r &= 63;
  return r == 0 ? v : (v << r) | (v >> (64 - r));
}

uint16_t le16(std::span<const uint8_t> s, size_t off) {
  return uint16_t(s[off]) | uint16_t(s[off + 1]) << 8;
}

uint32_t le32(std::span<const uint8_t> s, size_t off) {
  return uint32_t(s[off]) | uint32_t(s[off + 1]) << 8 |
         uint32_t(s[off + 2]) << 16 | uint32_t(s[off + 3]) << 24;
}

}  // namespace

std::string_view trigger_name(TriggerKind k) {
  static constexpr std::string_view names[kTriggerKinds] = {
      "cr-access", "dr-access", "io-port", "msr-read",
      "msr-write", "cpuid",     "hlt",     "rdtsc",
      "pause",     "rdrand",    "vmx-insn",
  };
  return names[static_cast<int>(k)];
}

std::string_view op_name(OpCode op) {
  static constexpr std::string_view names[] = {
      "vmxon",    "vmclear", "vmptrld", "vmwrite",
      "vmlaunch", "vmresume", "vmread",  "trigger",
  };
  return names[static_cast<int>(op)];
}

std::string_view to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::Completed: return "completed";
    case TerminalStatus::OracleRejected: return "oracle-rejected";
    case TerminalStatus::OracleCrashed: return "oracle-crashed";
  }
  return "?";
}

std::span<const uint16_t, kTemplateWriteSlots> template_write_fields() {
  return std::span<const uint16_t, kTemplateWriteSlots>(kTemplateFields);
}

std::vector<HarnessOp> base_init_sequence() {
  std::vector<HarnessOp> ops;
  ops.reserve(kBaseOps);
  ops.push_back({OpCode::VmxOn});
  ops.push_back({OpCode::VmClear});
  ops.push_back({OpCode::VmPtrLd});
  for (uint16_t f : kTemplateFields) ops.push_back({OpCode::VmWrite, f, 0});
  ops.push_back({OpCode::VmLaunch});
  return ops;
}

// Slice layout:
//   byte 0        swap count (mod 4)
//   bytes 1..3    adjacent-swap positions (mod len-1)
//   bytes 4..19   per-position repetition counts (1 + b mod 4)
//   bytes 20..31  vmwrite xor perturbations (0 keeps the template value)
std::vector<HarnessOp> build_init_sequence(std::span<const uint8_t> slice) {
  if (slice.size() < kInitSliceBytes)
    throw std::invalid_argument("short-input: init sequence needs 32 bytes");

  std::vector<HarnessOp> base = base_init_sequence();
  int swaps = slice[0] % 4;
  for (int i = 0; i < swaps; ++i) {
    size_t pos = slice[1 + i] % (base.size() - 1);
    std::swap(base[pos], base[pos + 1]);
  }

  // A slot byte with a low nibble of 0xF perturbs its vmwrite argument;
  // the high nibble picks a short xor pattern and its position. Most
  // sequences keep every template value intact so entries stay reachable.
  int write_slot = 0;
  for (auto& op : base) {
    if (op.op != OpCode::VmWrite) continue;
    uint8_t b = slice[20 + write_slot];
    if ((b & 0xF) == 0xF) {
      int h = b >> 4;
      op.xor_mask = rotl64(uint64_t(h % 4 + 1), (h / 4) * 16);
    }
    ++write_slot;
  }

  std::vector<HarnessOp> out;
  out.reserve(base.size() * 4);
  for (size_t i = 0; i < base.size(); ++i) {
    int reps = 1 + slice[4 + i] % 4;
    for (int r = 0; r < reps; ++r) out.push_back(base[i]);
  }
  return out;
}

RuntimeStep build_runtime_step(std::span<const uint8_t> slice) {
  if (slice.size() < kStepSliceBytes)
    throw std::invalid_argument("short-input: runtime step needs 8 bytes");
  RuntimeStep step;
  step.trigger = static_cast<TriggerKind>(slice[0] % kTriggerKinds);
  step.sub = slice[1] & 0xF;
  step.operand = (uint64_t(le32(slice, 4)) << 32) | le16(slice, 2);
  switch ((slice[1] >> 4) % 4) {
    case 0: step.l1_op = OpCode::VmRead; break;
    case 1: step.l1_op = OpCode::VmWrite; break;
    case 2: step.l1_op = OpCode::VmResume; break;
    case 3: step.l1_op = OpCode::VmClear; break;
  }
  step.l1_field = le16(slice, 2) % kFieldCount;
  step.l1_value = step.operand;
  return step;
}

HarnessProgram build_program(std::span<const uint8_t> init_slice,
                             std::span<const uint8_t> steps_slice) {
  HarnessProgram prog;
  prog.init_ops = build_init_sequence(init_slice);
  size_t nsteps = steps_slice.size() / kStepSliceBytes;
  prog.runtime_steps.reserve(nsteps);
  for (size_t i = 0; i < nsteps; ++i)
    prog.runtime_steps.push_back(
        build_runtime_step(steps_slice.subspan(i * kStepSliceBytes,
                                               kStepSliceBytes)));
  return prog;
}

HarnessProgram fixed_base_program() {
  HarnessProgram prog;
  prog.init_ops = base_init_sequence();
  const TriggerKind rotation[] = {
      TriggerKind::CpuId,   TriggerKind::ControlRegisterAccess,
      TriggerKind::MsrRead, TriggerKind::IoPort,
      TriggerKind::Halt,    TriggerKind::ReadTsc,
      TriggerKind::Pause,   TriggerKind::VmxInstruction,
  };
  for (TriggerKind k : rotation) {
    RuntimeStep s;
    s.trigger = k;
    s.l1_op = OpCode::VmRead;
    prog.runtime_steps.push_back(s);
  }
  return prog;
}

namespace {

TraceEvent make_event(uint8_t phase, Context ctx, OpCode op, OpResponse r,
                      uint16_t detail = 0) {
  TraceEvent e;
  e.phase = phase;
  e.ctx = ctx;
  e.op = op;
  e.trigger = TriggerKind::ControlRegisterAccess;
  e.response = r;
  e.detail = detail;
  return e;
}

OpResponse entry_response(const oracle::EntryResult& er) {
  switch (er.status) {
    case oracle::EntryStatus::Accepted: return OpResponse::EntryAccepted;
    case oracle::EntryStatus::Rejected: return OpResponse::EntryRejected;
    case oracle::EntryStatus::Crashed: return OpResponse::EntryCrashed;
  }
  return OpResponse::VmFail;
}

uint16_t entry_detail(const oracle::EntryResult& er) {
  if (er.status == oracle::EntryStatus::Rejected) return er.reject_check;
  if (er.status == oracle::EntryStatus::Crashed)
    return static_cast<uint16_t>(er.bug);
  return 0;
}

}  // namespace

ExecutionTrace execute(const HarnessProgram& program, const VmState& state,
                       const caps::CapabilityProfile& profile,
                       oracle::Oracle& target) {
  (void)profile;  // the oracle was constructed with it
  ExecutionTrace trace;
  trace.events.reserve(program.init_ops.size() +
                       program.runtime_steps.size() * 2 + 4);

  bool launched = false;

  // Phase 1: init sequence in L1 context.
  for (const auto& op : program.init_ops) {
    switch (op.op) {
      case OpCode::VmxOn: {
        auto st = target.vmxon();
        trace.events.push_back(make_event(
            1, Context::L1, op.op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail));
        break;
      }
      case OpCode::VmClear: {
        auto st = target.vmclear();
        trace.events.push_back(make_event(
            1, Context::L1, op.op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail));
        launched = false;
        break;
      }
      case OpCode::VmPtrLd: {
        auto st = target.vmptrld(state);
        trace.events.push_back(make_event(
            1, Context::L1, op.op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail));
        break;
      }
      case OpCode::VmWrite: {
        uint64_t value = state.read(op.field) ^ op.xor_mask;
        auto st = target.vmwrite(op.field, value);
        trace.events.push_back(make_event(
            1, Context::L1, op.op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail,
            op.field));
        break;
      }
      case OpCode::VmLaunch: {
        if (launched) {
          // vmlaunch on a launched VMCS fails without an entry attempt
          auto er = target.vmlaunch();
          trace.events.push_back(make_event(1, Context::L1, op.op,
                                            OpResponse::VmFail,
                                            entry_detail(er)));
          break;
        }
        auto er = target.vmlaunch();
        trace.events.push_back(make_event(1, Context::L1, op.op,
                                          entry_response(er),
                                          entry_detail(er)));
        if (er.status == oracle::EntryStatus::Accepted) {
          launched = true;
          if (er.spurious_triple_fault)
            trace.events.push_back(make_event(2, Context::L1, OpCode::VmRead,
                                              OpResponse::Exited, 0));
        } else if (er.status == oracle::EntryStatus::Crashed) {
          trace.terminal = TerminalStatus::OracleCrashed;
          trace.diagnostics = target.diagnostics();
          return trace;
        } else {
          trace.terminal = TerminalStatus::OracleRejected;
          trace.diagnostics = target.diagnostics();
          return trace;
        }
        break;
      }
      default:
        break;  // builders never emit other ops in phase 1
    }
  }

  if (!launched) {
    // Template mutation dropped the launch; nothing to run.
    trace.terminal = TerminalStatus::OracleRejected;
    trace.diagnostics = target.diagnostics();
    return trace;
  }

  // Phase 2: runtime loop, L2 trigger then L1 response then re-entry.
  int cap = program.iteration_cap;
  for (const auto& step : program.runtime_steps) {
    if (trace.runtime_steps_run >= cap) break;
    ++trace.runtime_steps_run;

    auto ev = target.l2_trigger(step.trigger, step.sub, step.operand);
    if (ev.kind == oracle::ExitEvent::Kind::Crashed) {
      trace.events.push_back(make_event(2, Context::L2, OpCode::ExitTrigger,
                                        OpResponse::EntryCrashed,
                                        static_cast<uint16_t>(ev.bug)));
      trace.events.back().trigger = step.trigger;
      trace.terminal = TerminalStatus::OracleCrashed;
      trace.diagnostics = target.diagnostics();
      return trace;
    }
    bool exited = ev.kind == oracle::ExitEvent::Kind::ExitToL1;
    trace.events.push_back(make_event(2, Context::L2, OpCode::ExitTrigger,
                                      exited ? OpResponse::Exited
                                             : OpResponse::NoExit));
    trace.events.back().trigger = step.trigger;
    if (!exited) continue;

    // L1 handles the exit.
    bool resumed = false;
    switch (step.l1_op) {
      case OpCode::VmRead: {
        uint64_t out = 0;
        auto st = target.vmread(step.l1_field, &out);
        trace.events.push_back(make_event(
            2, Context::L1, step.l1_op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail,
            step.l1_field));
        break;
      }
      case OpCode::VmWrite: {
        auto st = target.vmwrite(step.l1_field, step.l1_value);
        trace.events.push_back(make_event(
            2, Context::L1, step.l1_op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail,
            step.l1_field));
        break;
      }
      case OpCode::VmClear: {
        auto st = target.vmclear();
        trace.events.push_back(make_event(
            2, Context::L1, step.l1_op,
            st == oracle::OpStatus::Ok ? OpResponse::Ok : OpResponse::VmFail));
        break;
      }
      case OpCode::VmResume:
        resumed = true;
        break;
      default:
        break;
    }

    auto er = target.vmresume();
    trace.events.push_back(make_event(2, Context::L1, OpCode::VmResume,
                                      entry_response(er), entry_detail(er)));
    (void)resumed;
    if (er.status == oracle::EntryStatus::Crashed) {
      trace.terminal = TerminalStatus::OracleCrashed;
      trace.diagnostics = target.diagnostics();
      return trace;
    }
    if (er.status == oracle::EntryStatus::Rejected) {
      trace.terminal = TerminalStatus::OracleRejected;
      trace.diagnostics = target.diagnostics();
      return trace;
    }
  }

  trace.terminal = TerminalStatus::Completed;
  trace.diagnostics = target.diagnostics();
  return trace;
}

std::string trace_jsonl(const ExecutionTrace& t) {
  std::string out;
  out.reserve(t.events.size() * 64);
  for (const auto& e : t.events) {
    out += "{\"phase\":";
    out += std::to_string(e.phase);
    out += ",\"ctx\":\"";
    out += e.ctx == Context::L1 ? "L1" : "L2";
    out += "\",\"op\":\"";
    out += op_name(e.op);
    if (e.op == OpCode::ExitTrigger) {
      out += "\",\"trigger\":\"";
      out += trigger_name(e.trigger);
    }
    out += "\",\"response\":";
    out += std::to_string(static_cast<int>(e.response));
    out += ",\"detail\":";
    out += std::to_string(e.detail);
    out += "}\n";
  }
  out += "{\"terminal\":\"";
  out += to_string(t.terminal);
  out += "\",\"steps\":";
  out += std::to_string(t.runtime_steps_run);
  out += "}\n";
  return out;
}

}  // namespace efz::harness
