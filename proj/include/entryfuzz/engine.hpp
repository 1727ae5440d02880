// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "entryfuzz/harness.hpp"
#include "entryfuzz/mutator.hpp"
#include "entryfuzz/oracle.hpp"
#include "entryfuzz/state.hpp"
#include "entryfuzz/validator.hpp"

namespace efz::engine {

inline constexpr size_t kInputSize = 2048;
using FuzzInput = std::array<uint8_t, kInputSize>;

// Fixed partition map of the 2,048-byte input.
struct Partition {
  size_t off;
  size_t len;
};
inline constexpr Partition kPartVcpuConfig{0, 256};
inline constexpr Partition kPartInitSequence{256, 256};
inline constexpr Partition kPartRuntimeSteps{512, 512};
inline constexpr Partition kPartVmcsSeed{1024, 768};
inline constexpr Partition kPartMutation{1792, 256};
inline constexpr Partition kPartitions[] = {
    kPartVcpuConfig, kPartInitSequence, kPartRuntimeSteps, kPartVmcsSeed,
    kPartMutation};

std::span<const uint8_t> part(const FuzzInput& in, const Partition& p);

// Per-execution configuration: seeded bugs, silent rounding and the
// ablation switches. A disabled stage is replaced by its passthrough.
struct RunConfig {
  uint32_t seeded_bugs = 0;
  bool silent_round = true;
  bool harness_on = true;
  bool validator_on = true;
  bool configurator_on = true;

  bool operator==(const RunConfig&) const = default;
};

enum class AnomalyKind : uint8_t { Crash = 0, DiagnosticPattern };
std::string_view to_string(AnomalyKind k);

struct AnomalyRecord {
  AnomalyKind kind;
  int bug;  // BugId ordinal
  uint64_t path_hash;
  FuzzInput input;
  RunConfig config;
  std::vector<std::string> diagnostics;
  std::string trace_excerpt;  // trailing trace lines, JSONL
};

struct RunOutcome {
  harness::ExecutionTrace trace;
  std::vector<std::pair<uint16_t, uint8_t>> edges;  // (slot, hits)
  std::optional<AnomalyRecord> anomaly;
  uint64_t path_hash = 0;

  oracle::CoverageMap coverage_delta() const;
};

// Decodes the vmcs seed partition into a full state blob (zero padded to
// 1,000 bytes) and returns the decoded state.
VmState decode_seed(std::span<const uint8_t> seed);

// One pipeline execution: profile, program, seed decode, rounding,
// boundary mutation, harness run. Deterministic in (input, config).
RunOutcome run_one(const FuzzInput& input, const RunConfig& config);

struct CampaignConfig {
  uint64_t seed = 1;
  int workers = 1;
  uint64_t max_execs = 0;    // execution budget; must be nonzero
  double max_seconds = 0;    // optional wall-clock bound (non-deterministic)
  bool coverage_guided = true;
  RunConfig run;
};

struct CorpusEntry {
  FuzzInput input;
  int discovered_edges;
  uint64_t exec_index;  // logical timestamp
  int64_t parent;       // corpus index, -1 for fresh inputs
  std::vector<uint16_t> new_slots;
};

struct StoredAnomaly {
  AnomalyRecord record;
  uint64_t exec_index;
  std::string file_stem;  // timestamped name without extension
};

struct CampaignStats {
  uint64_t execs = 0;
  int distinct_edges = 0;
  uint64_t corpus_size = 0;
  uint64_t anomaly_count = 0;
  uint64_t crashes_seen = 0;  // oracle crashes, incl. duplicates
  uint64_t restarts = 0;      // watchdog oracle reconstructions
  std::array<int64_t, oracle::kBugCount> first_found_exec;  // -1 if never

  CampaignStats() { first_found_exec.fill(-1); }
};

// AFL-style campaign driver with deterministic batched scheduling: worker
// results merge in job order, so identical (seed, config) runs produce
// identical corpora, coverage and anomaly sets.
class Campaign {
 public:
  explicit Campaign(CampaignConfig cfg);
  ~Campaign();

  Campaign(const Campaign&) = delete;
  Campaign& operator=(const Campaign&) = delete;

  // Runs up to `execs` more executions (bounded by the config budget).
  // Returns the number actually run.
  uint64_t run_for(uint64_t execs);

  // Runs until the configured budget is exhausted.
  void run_to_completion();

  const CampaignConfig& config() const { return cfg_; }
  const CampaignStats& stats() const { return stats_; }
  const std::vector<CorpusEntry>& corpus() const { return corpus_; }
  const std::vector<StoredAnomaly>& anomalies() const { return anomalies_; }
  const oracle::CoverageMap& global_coverage() const { return coverage_; }

  // coverage.csv content: execs,distinct_edges,anomalies per sample row.
  std::string coverage_csv() const;

  // Writes corpus/, anomalies/, coverage.csv, coverage.bin, campaign.json.
  void write_outputs(const std::string& dir) const;

 private:
  struct Impl;
  CampaignConfig cfg_;
  CampaignStats stats_;
  std::vector<CorpusEntry> corpus_;
  std::vector<StoredAnomaly> anomalies_;
  oracle::CoverageMap coverage_;
  std::vector<std::array<uint64_t, 3>> curve_;  // execs, edges, anomalies
  std::unique_ptr<Impl> impl_;
};

CampaignStats run_campaign(const CampaignConfig& cfg,
                           const std::string& out_dir);

// Reproduction verdict for a stored anomaly record.
struct ReproVerdict {
  bool reproduced = false;
  std::string expected;  // bug name
  std::string observed;
  std::string message;
};

// Re-runs the input stored in an anomaly record (JSON) under its stored
// config. Throws std::runtime_error for missing or corrupt records.
ReproVerdict reproduce(const std::string& record_path);

// Writes/parses anomaly record JSON.
std::string anomaly_record_json(const AnomalyRecord& r);
AnomalyRecord parse_anomaly_record(const std::string& json_text);

struct DistributionSummary {
  double mean = 0, stddev = 0;
  int min = 0, p25 = 0, p50 = 0, p75 = 0, max = 0;
};

struct HammingSummary {
  DistributionSummary random_vs_rounded;
  DistributionSummary default_vs_rounded;
  DistributionSummary rounded_pairwise;
};

// Rounding-distance experiment: n random states, each rounded under the
// full-featured profile, compared against (a) its own raw form, (b) the
// rounded all-zero default, (c) the previous rounded state. Deterministic
// per seed; optionally writes one CSV row per iteration.
HammingSummary hamming_experiment(uint32_t n, uint64_t seed,
                                  const std::string& csv_path = "");

}  // namespace efz::engine
