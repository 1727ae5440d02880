// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include <doctest.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "entryfuzz/engine.hpp"

using namespace efz;
using namespace efz::engine;
namespace fs = std::filesystem;

namespace {

FuzzInput random_input(std::mt19937_64& rng) {
  FuzzInput in;
  for (auto& b : in) b = uint8_t(rng());
  return in;
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("entryfuzz-test-" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::set<std::tuple<int, uint64_t, std::string>> anomaly_set(
    const Campaign& c) {
  std::set<std::tuple<int, uint64_t, std::string>> out;
  for (const auto& a : c.anomalies())
    out.emplace(a.record.bug, a.record.path_hash,
                std::string(a.record.input.begin(), a.record.input.end()));
  return out;
}

}  // namespace

TEST_CASE("the partition map tiles the 2048-byte input") {
  size_t covered = 0;
  for (const auto& p : kPartitions) covered += p.len;
  CHECK(covered == kInputSize);
  CHECK(kPartVcpuConfig.off == 0);
  CHECK(kPartInitSequence.off == 256);
  CHECK(kPartRuntimeSteps.off == 512);
  CHECK(kPartVmcsSeed.off == 1024);
  CHECK(kPartMutation.off == 1792);
}

TEST_CASE("zero input completes with nonzero coverage") {
  FuzzInput zero{};
  RunConfig cfg;
  RunOutcome out = run_one(zero, cfg);
  CHECK(out.trace.terminal == harness::TerminalStatus::Completed);
  CHECK(!out.edges.empty());
  CHECK(!out.anomaly.has_value());
  CHECK(out.coverage_delta().distinct() == int(out.edges.size()));
}

TEST_CASE("run_one is deterministic") {
  std::mt19937_64 rng(500);
  RunConfig cfg;
  cfg.seeded_bugs = oracle::all_bugs();
  for (int i = 0; i < 50; ++i) {
    FuzzInput in = random_input(rng);
    RunOutcome a = run_one(in, cfg);
    RunOutcome b = run_one(in, cfg);
    CHECK(a.trace.terminal == b.trace.terminal);
    CHECK(a.edges == b.edges);
    CHECK(a.path_hash == b.path_hash);
    CHECK(a.anomaly.has_value() == b.anomaly.has_value());
    if (a.anomaly) {
      CHECK(a.anomaly->bug == b.anomaly->bug);
      CHECK(a.anomaly->kind == b.anomaly->kind);
    }
  }
}

TEST_CASE("partitions feed exactly one stage each") {
  std::mt19937_64 rng(501);
  FuzzInput in = random_input(rng);

  // Mutating only the vcpu-config bytes changes neither the parsed
  // directive nor the harness program.
  FuzzInput other = in;
  for (size_t i = kPartVcpuConfig.off;
       i < kPartVcpuConfig.off + kPartVcpuConfig.len; ++i)
    other[i] ^= 0xA5;

  auto d1 = mutate::parse_directive(part(in, kPartMutation));
  auto d2 = mutate::parse_directive(part(other, kPartMutation));
  REQUIRE(d1.fields.size() == d2.fields.size());
  for (size_t i = 0; i < d1.fields.size(); ++i) {
    CHECK(d1.fields[i].field == d2.fields[i].field);
    CHECK(d1.fields[i].bits == d2.fields[i].bits);
  }

  auto p1 = harness::build_program(
      part(in, kPartInitSequence).subspan(0, harness::kInitSliceBytes),
      part(in, kPartRuntimeSteps));
  auto p2 = harness::build_program(
      part(other, kPartInitSequence).subspan(0, harness::kInitSliceBytes),
      part(other, kPartRuntimeSteps));
  REQUIRE(p1.init_ops.size() == p2.init_ops.size());
  for (size_t i = 0; i < p1.init_ops.size(); ++i) {
    CHECK(p1.init_ops[i].op == p2.init_ops[i].op);
    CHECK(p1.init_ops[i].xor_mask == p2.init_ops[i].xor_mask);
  }
  CHECK(decode_seed(part(in, kPartVmcsSeed)) ==
        decode_seed(part(other, kPartVmcsSeed)));

  // And the profile changes only through the vcpu-config partition.
  CHECK(caps::generate_profile(part(in, kPartVcpuConfig)).feature_bits !=
        caps::generate_profile(part(other, kPartVcpuConfig)).feature_bits);
}

TEST_CASE("the seed partition zero-pads to a full state blob") {
  FuzzInput in{};
  in[kPartVmcsSeed.off] = 0xFF;  // first byte of the first field
  VmState s = decode_seed(part(in, kPartVmcsSeed));
  CHECK(s.read(0) == 0xFF);
  // Fields past the 768-byte window decode as zero.
  CHECK(s.read(kFieldCount - 1) == 0);
}

TEST_CASE("campaigns are deterministic per seed and config") {
  CampaignConfig cfg;
  cfg.seed = 77;
  cfg.workers = 2;
  cfg.max_execs = 4000;
  cfg.coverage_guided = true;
  cfg.run.seeded_bugs = oracle::all_bugs();

  Campaign a(cfg), b(cfg);
  a.run_to_completion();
  b.run_to_completion();
  CHECK(a.stats().execs == 4000);
  CHECK(a.stats().distinct_edges == b.stats().distinct_edges);
  CHECK(a.coverage_csv() == b.coverage_csv());
  CHECK(anomaly_set(a) == anomaly_set(b));
  REQUIRE(a.corpus().size() == b.corpus().size());
  for (size_t i = 0; i < a.corpus().size(); ++i) {
    CHECK(a.corpus()[i].input == b.corpus()[i].input);
    CHECK(a.corpus()[i].discovered_edges == b.corpus()[i].discovered_edges);
  }
}

TEST_CASE("distinct edges grow monotonically along the coverage curve") {
  CampaignConfig cfg;
  cfg.seed = 5;
  cfg.workers = 1;
  cfg.max_execs = 3000;
  Campaign c(cfg);
  c.run_to_completion();
  std::string csv = c.coverage_csv();
  uint64_t prev_execs = 0, prev_edges = 0;
  size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    size_t eol = csv.find('\n', pos);
    std::string line = csv.substr(pos, eol - pos);
    uint64_t e, d, an;
    REQUIRE(std::sscanf(line.c_str(), "%lu,%lu,%lu", &e, &d, &an) == 3);
    CHECK(e > prev_execs);
    CHECK(d >= prev_edges);
    prev_execs = e;
    prev_edges = d;
    pos = eol + 1;
  }
  CHECK(prev_execs == 3000);
}

TEST_CASE("corpus entries reproduce their recorded new edges") {
  CampaignConfig cfg;
  cfg.seed = 9;
  cfg.workers = 1;
  cfg.max_execs = 1500;
  cfg.run.seeded_bugs = oracle::all_bugs();
  Campaign c(cfg);
  c.run_to_completion();
  REQUIRE(!c.corpus().empty());
  for (const auto& e : c.corpus()) {
    RunOutcome out = run_one(e.input, cfg.run);
    std::set<uint16_t> hit;
    for (auto [slot, cnt] : out.edges) hit.insert(slot);
    bool any = false;
    for (uint16_t slot : e.new_slots) any = any || hit.count(slot);
    CHECK(any);
  }
}

TEST_CASE("anomalies are deduplicated and replayable") {
  CampaignConfig cfg;
  cfg.seed = 21;
  cfg.workers = 2;
  cfg.max_execs = 30000;
  cfg.run.seeded_bugs = oracle::all_bugs();
  Campaign c(cfg);
  c.run_to_completion();
  REQUIRE(!c.anomalies().empty());

  std::set<std::pair<int, uint64_t>> keys;
  for (const auto& a : c.anomalies()) {
    CHECK(keys.insert({a.record.bug, a.record.path_hash}).second);
    // Anomaly fidelity: the stored input replays to the same kind and bug.
    RunOutcome out = run_one(a.record.input, a.record.config);
    REQUIRE(out.anomaly.has_value());
    CHECK(out.anomaly->bug == a.record.bug);
    CHECK(out.anomaly->kind == a.record.kind);
    CHECK(out.path_hash == a.record.path_hash);
  }
}

TEST_CASE("campaign outputs land in the documented layout") {
  fs::path dir = temp_dir("layout");
  CampaignConfig cfg;
  cfg.seed = 33;
  cfg.workers = 1;
  cfg.max_execs = 20000;
  cfg.run.seeded_bugs = oracle::all_bugs();
  Campaign c(cfg);
  c.run_to_completion();
  c.write_outputs(dir.string());

  CHECK(fs::exists(dir / "coverage.csv"));
  CHECK(fs::exists(dir / "campaign.json"));
  CHECK(fs::is_directory(dir / "corpus"));
  CHECK(fs::is_directory(dir / "anomalies"));
  CHECK(fs::file_size(dir / "coverage.bin") == 65536);

  // Binary files are the exact input bytes.
  REQUIRE(!c.corpus().empty());
  bool checked_bin = false;
  for (const auto& entry : fs::directory_iterator(dir / "corpus")) {
    CHECK(fs::file_size(entry.path()) == kInputSize);
    checked_bin = true;
    break;
  }
  CHECK(checked_bin);

  // Each anomaly has a .bin of exact input bytes plus a .json record.
  REQUIRE(!c.anomalies().empty());
  const auto& first = c.anomalies().front();
  fs::path bin = dir / "anomalies" / (first.file_stem + ".bin");
  fs::path rec = dir / "anomalies" / (first.file_stem + ".json");
  REQUIRE(fs::exists(bin));
  REQUIRE(fs::exists(rec));
  CHECK(fs::file_size(bin) == kInputSize);
  std::ifstream f(bin, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == kInputSize);
  CHECK(std::memcmp(bytes.data(), first.record.input.data(), kInputSize) ==
        0);

  // The stored record reproduces.
  ReproVerdict v = reproduce(rec.string());
  CHECK(v.reproduced);

  fs::remove_all(dir);
}

TEST_CASE("reproduce rejects corrupt records and missing triggers") {
  fs::path dir = temp_dir("repro");

  CHECK_THROWS_AS(reproduce((dir / "missing.json").string()),
                  std::runtime_error);

  std::ofstream bad(dir / "bad.json");
  bad << "{ truncated";
  bad.close();
  CHECK_THROWS_AS(reproduce((dir / "bad.json").string()),
                  std::runtime_error);

  // A record whose bugs are unseeded in the replay config does not
  // reproduce.
  CampaignConfig cfg;
  cfg.seed = 44;
  cfg.workers = 1;
  cfg.max_execs = 30000;
  cfg.run.seeded_bugs = oracle::all_bugs();
  Campaign c(cfg);
  c.run_to_completion();
  REQUIRE(!c.anomalies().empty());
  AnomalyRecord rec = c.anomalies().front().record;
  rec.config.seeded_bugs = 0;  // replay without the trigger
  std::ofstream out(dir / "unseeded.json");
  out << anomaly_record_json(rec);
  out.close();
  ReproVerdict v = reproduce((dir / "unseeded.json").string());
  CHECK(!v.reproduced);

  fs::remove_all(dir);
}

TEST_CASE("ablation switches swap stages for passthroughs") {
  std::mt19937_64 rng(502);
  FuzzInput in = random_input(rng);

  RunConfig all;
  RunConfig no_validator = all;
  no_validator.validator_on = false;
  RunConfig no_configurator = all;
  no_configurator.configurator_on = false;
  RunConfig no_harness = all;
  no_harness.harness_on = false;

  // Raw seeds are essentially never accepted, so the validator-off
  // pipeline should reject at the first failing check.
  int rejected = 0;
  for (int i = 0; i < 50; ++i) {
    FuzzInput x = random_input(rng);
    RunOutcome out = run_one(x, no_validator);
    rejected += out.trace.terminal ==
                harness::TerminalStatus::OracleRejected;
  }
  CHECK(rejected == 50);

  // Configurator off pins the default profile: identical config bytes or
  // not, the run behaves the same.
  FuzzInput other = in;
  other[0] ^= 0xFF;
  RunOutcome a = run_one(in, no_configurator);
  RunOutcome b = run_one(other, no_configurator);
  CHECK(a.edges == b.edges);

  // Harness off pins the fixed base program: init-sequence bytes stop
  // mattering.
  FuzzInput third = in;
  third[kPartInitSequence.off] ^= 0xFF;
  RunOutcome c1 = run_one(in, no_harness);
  RunOutcome c2 = run_one(third, no_harness);
  CHECK(c1.edges == c2.edges);
}

TEST_CASE("a crafted input rediscovers the paging-consistency bug") {
  // Config bytes: long mode on, nested paging off. Seed bytes: the
  // IA-32e entry control bit. Directive bytes: clear guest CR4.PAE after
  // rounding. Together they reproduce the B1 trigger end to end.
  FuzzInput in{};
  in[kPartVcpuConfig.off] = 0x20;  // feature bit 5: long-mode support

  // VM_ENTRY_CONTROLS (field 47) starts 324 bytes into the state blob;
  // bit 9 lives in the second byte.
  in[kPartVmcsSeed.off + 325] = 0x02;

  in[kPartMutation.off + 0] = 0;    // one field
  in[kPartMutation.off + 1] = F_GUEST_CR4;
  in[kPartMutation.off + 2] = 0;
  in[kPartMutation.off + 3] = 0;    // one bit
  in[kPartMutation.off + 4] = 5;    // CR4.PAE

  RunConfig cfg;
  cfg.seeded_bugs = oracle::all_bugs();
  RunOutcome out = run_one(in, cfg);
  REQUIRE(out.anomaly.has_value());
  CHECK(out.anomaly->kind == AnomalyKind::Crash);
  CHECK(out.anomaly->bug ==
        int(oracle::BugId::B1_MissingIa32ePaeCheck));

  // Without the seeded bugs the same input is cleanly rejected.
  cfg.seeded_bugs = 0;
  RunOutcome clean = run_one(in, cfg);
  CHECK(!clean.anomaly.has_value());
  CHECK(clean.trace.terminal == harness::TerminalStatus::OracleRejected);
}

TEST_CASE("hamming experiment is deterministic and ordered") {
  HammingSummary a = hamming_experiment(300, 12345);
  HammingSummary b = hamming_experiment(300, 12345);
  CHECK(a.random_vs_rounded.mean == b.random_vs_rounded.mean);
  CHECK(a.rounded_pairwise.mean == b.rounded_pairwise.mean);

  CHECK(a.random_vs_rounded.mean > a.rounded_pairwise.mean);
  CHECK(a.rounded_pairwise.mean > 0);
  CHECK(a.default_vs_rounded.mean < a.random_vs_rounded.mean);

  HammingSummary c = hamming_experiment(300, 999);
  CHECK(c.random_vs_rounded.mean != a.random_vs_rounded.mean);

  // n=2 produces a single pairwise distance.
  HammingSummary d = hamming_experiment(2, 7);
  CHECK(d.rounded_pairwise.min == d.rounded_pairwise.max);
  CHECK(d.rounded_pairwise.min >= 0);

  CHECK_THROWS_AS(hamming_experiment(1, 1), std::invalid_argument);

  fs::path csv = fs::temp_directory_path() / "entryfuzz-hamming-test.csv";
  hamming_experiment(50, 3, csv.string());
  std::ifstream f(csv);
  REQUIRE(f.good());
  std::string header;
  std::getline(f, header);
  CHECK(header ==
        "iteration,random_vs_rounded,default_vs_rounded,rounded_pairwise");
  int rows = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 50);
  fs::remove(csv);
}

TEST_CASE("a wall-clock budget terminates an unbounded campaign") {
  CampaignConfig cfg;
  cfg.seed = 2;
  cfg.workers = 1;
  cfg.max_execs = 0;
  cfg.max_seconds = 0.2;
  Campaign c(cfg);
  auto t0 = std::chrono::steady_clock::now();
  c.run_to_completion();
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(c.stats().execs > 0);
  CHECK(secs < 30.0);  // far below this; generous bound for slow machines
}

TEST_CASE("campaign config requires a budget") {
  CampaignConfig cfg;
  cfg.max_execs = 0;
  cfg.max_seconds = 0;
  CHECK_THROWS_AS(Campaign{cfg}, std::invalid_argument);
}
