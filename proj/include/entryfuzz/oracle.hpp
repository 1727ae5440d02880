// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "entryfuzz/caps.hpp"
#include "entryfuzz/check_ids.hpp"
#include "entryfuzz/harness.hpp"
#include "entryfuzz/state.hpp"

namespace efz::oracle {

enum class BugId : uint8_t {
  B1_MissingIa32ePaeCheck = 0,
  B2_NonCanonicalMsrLoad,
  B3_InvalidEptpTripleFault,
  B4_ActivityStateBlindCopy,
  B5_LmePgInconsistency,
  B6_VgifAssumption,
};
inline constexpr int kBugCount = 6;

std::string_view bug_name(BugId b);
int bug_from_name(std::string_view name);  // -1 when unknown

// How a seeded bug announces itself: a hard crash of the target, or a
// sanitizer/assertion-style line in the diagnostic log.
enum class BugDetection : uint8_t { Crash = 0, DiagnosticPattern };

struct BugInfo {
  BugId id;
  std::string_view name;
  CheckId mapped_check;  // the check path the bug disables or distorts
  BugDetection detection;
  std::string_view trigger;
};

// The fixed six-entry bug catalog.
const std::vector<BugInfo>& seeded_bug_catalog();

struct OracleConfig {
  caps::CapabilityProfile profile;
  uint32_t seeded_bugs = 0;  // bit per BugId ordinal
  bool silent_round = true;

  bool has_bug(BugId b) const {
    return seeded_bugs >> static_cast<int>(b) & 1;
  }
};

// Capability hand-off: oracle construction parameters derived from a
// profile (no bugs seeded, silent rounding on).
OracleConfig apply_profile(const caps::CapabilityProfile& p);

uint32_t all_bugs();

// 65,536-slot saturating hit-count map keyed by hashed (site, branch)
// pairs. Slot ids are stable across runs of one build.
class CoverageMap {
 public:
  CoverageMap() : hits_{} {}

  void hit(uint16_t slot) {
    if (hits_[slot] != 0xFF) ++hits_[slot];
  }
  uint8_t operator[](uint16_t slot) const { return hits_[slot]; }
  int distinct() const;
  bool all_zero() const { return distinct() == 0; }

  // Saturating per-slot maximum.
  void merge(const CoverageMap& other);

  std::array<uint8_t, 65536> const& raw() const { return hits_; }
  std::array<uint8_t, 65536>& raw() { return hits_; }

 private:
  std::array<uint8_t, 65536> hits_;
};

// Edge slot construction: FNV-1a over (domain, a, b).
uint16_t edge_slot(uint32_t domain, uint32_t a, uint32_t b);

// Edge domains (site classes).
enum EdgeDomain : uint32_t {
  ED_CHECK = 1,    // a = CheckId, b = 0 pass / 1 fail / 2 skipped-by-bug
  ED_OP = 2,       // a = OpCode, b = response class
  ED_ENTRY = 3,    // a = pipeline site, b = variant
  ED_TRIGGER = 4,  // a = kind * 16 + subclass, b = 0 no-exit / 1 exit
  ED_BUG = 5,      // a = BugId, b = 0
  ED_L1 = 6,       // a = OpCode of the L1 response, b = status
};

// Human-readable names for every registerable edge slot, as JSON.
std::string edge_table_json();

// The six seeded bugs (id, trigger, mapped check, detection) as JSON.
std::string bug_catalog_json();

enum class EntryStatus : uint8_t { Accepted = 0, Rejected, Crashed };

struct EntryResult {
  EntryStatus status = EntryStatus::Rejected;
  CheckId reject_check = CK_SEQUENCE_ERROR;  // valid when Rejected
  BugId bug = BugId::B1_MissingIa32ePaeCheck;  // valid when Crashed
  std::string diagnostic;                      // valid when Crashed
  VmState vmcs02;                              // valid when Accepted
  std::vector<uint16_t> silently_rounded;      // fields fixed at entry
  bool spurious_triple_fault = false;  // bogus exit injected after accept
  uint64_t path_hash = 0;  // FNV over the ordered check-site path
};

enum class OpStatus : uint8_t { Ok = 0, VmFail };

struct ExitEvent {
  enum class Kind : uint8_t { NoExit = 0, ExitToL1, Crashed } kind;
  BugId bug = BugId::B1_MissingIa32ePaeCheck;
  std::string diagnostic;
};

// Desk-scale model of the L0 hypervisor plus physical CPU: sequenced VMX
// instruction surface, an entry-check suite implemented independently of
// the validator module, VMCS12-to-VMCS02 translation, silent rounding,
// instrumented edge coverage and the six seeded bugs. Single-threaded;
// run one instance per worker.
class Oracle {
 public:
  explicit Oracle(OracleConfig cfg);

  const OracleConfig& config() const { return cfg_; }

  // VMX instruction surface (L1 context).
  OpStatus vmxon();
  OpStatus vmclear();
  OpStatus vmptrld(const VmState& backing);
  OpStatus vmwrite(uint16_t field, uint64_t value);
  OpStatus vmread(uint16_t field, uint64_t* out);
  EntryResult vmlaunch();
  EntryResult vmresume();

  // Runs the full entry pipeline on a fresh sequence (vmxon, vmclear,
  // vmptrld, vmlaunch). The instrument of the differential tests.
  static EntryResult vm_entry(const VmState& vmcs12,
                              const OracleConfig& cfg);

  // L2 executes one exit-triggering instruction.
  ExitEvent l2_trigger(harness::TriggerKind kind, uint8_t sub,
                       uint64_t operand);

  bool launched() const { return launched_; }

  // Coverage accounting. Edges observed since construction or the last
  // reset, in first-hit order.
  CoverageMap coverage_snapshot() const;
  void reset_coverage();
  const std::vector<uint16_t>& edges_touched() const { return touched_; }
  uint8_t edge_hits(uint16_t slot) const {
    return stamp_[slot] == gen_ ? hits_[slot] : 0;
  }

  // Sanitizer/assertion-style lines emitted by seeded bugs.
  const std::vector<std::string>& diagnostics() const { return diags_; }

  // Clears sequence state, staged VMCS and diagnostics; coverage stays.
  void reset_machine();

  // Swaps in a new configuration and fully resets machine and coverage.
  // Fuzz workers reuse one instance across executions this way.
  void reconfigure(OracleConfig cfg);

  // Hash of the check-site path of the most recent entry evaluation,
  // mixed with the trigger site on a runtime crash. Anomaly dedup key.
  uint64_t last_path_hash() const { return last_path_hash_; }

 private:
  struct CheckOutcome;

  void edge(uint32_t domain, uint32_t a, uint32_t b);
  EntryResult run_entry_checks();
  CheckOutcome check_state(VmState& staged,
                           std::vector<uint16_t>* silent_fixes,
                           std::vector<uint16_t>* path);
  VmState translate_to_vmcs02(const VmState& vmcs12) const;
  void diag(BugId b, std::string_view message);

  OracleConfig cfg_;
  bool vmx_on_ = false;
  bool region_clear_ = false;
  bool loaded_ = false;
  bool launched_ = false;
  VmState staged_;
  bool dirty_ = true;
  bool cached_accept_ = false;
  VmState effective_;  // vmcs02 of the last accepted entry

  std::vector<std::string> diags_;

  uint64_t last_path_hash_ = 0;

  // Generation-stamped coverage accumulator.
  std::array<uint8_t, 65536> hits_{};
  std::array<uint32_t, 65536> stamp_{};
  uint32_t gen_ = 1;
  std::vector<uint16_t> touched_;
};

}  // namespace efz::oracle
