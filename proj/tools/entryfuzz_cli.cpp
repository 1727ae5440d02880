// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.
//
// Command-line front end. Links the public C API only; the stats
// subcommand reads campaign output files directly.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "entryfuzz/entryfuzz.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int fail(efz_status st, const std::string& what) {
  std::cerr << "error: " << what << ": " << efz_status_str(st) << "\n";
  return 1;
}

uint32_t parse_bugs(const std::string& spec) {
  if (spec == "all") return EFZ_ALL_BUGS;
  if (spec == "none" || spec.empty()) return 0;
  uint32_t mask = 0;
  std::string names[] = {"B1", "B2", "B3", "B4", "B5", "B6"};
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t comma = spec.find(',', pos);
    std::string item = spec.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    bool found = false;
    for (int b = 0; b < EFZ_BUG_COUNT; ++b) {
      if (item == names[b] || item == std::to_string(b + 1)) {
        mask |= 1u << b;
        found = true;
      }
    }
    if (!found) throw CLI::ValidationError("--bugs", "unknown bug " + item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return mask;
}

int cmd_fuzz(uint64_t seed, uint32_t workers, uint64_t execs,
             double duration, bool no_guidance,
             const std::vector<std::string>& disable,
             const std::string& bugs, bool no_silent_round,
             const std::string& out_dir) {
  efz_campaign_config cfg;
  efz_campaign_config_default(&cfg);
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.max_execs = execs;
  cfg.max_seconds = duration;
  cfg.coverage_guided = no_guidance ? 0 : 1;
  cfg.run.seeded_bugs = parse_bugs(bugs);
  cfg.run.silent_round = no_silent_round ? 0 : 1;
  for (const auto& d : disable) {
    if (d == "harness") cfg.run.harness_on = 0;
    else if (d == "validator") cfg.run.validator_on = 0;
    else if (d == "configurator") cfg.run.configurator_on = 0;
    else {
      std::cerr << "error: unknown stage to disable: " << d << "\n";
      return 1;
    }
  }

  efz_campaign* c = nullptr;
  if (auto st = efz_campaign_new(&cfg, &c); st != EFZ_OK)
    return fail(st, "campaign setup");

  const uint64_t chunk = 50000;
  efz_campaign_stats stats{};
  for (;;) {
    uint64_t ran = 0;
    if (auto st = efz_campaign_run(c, chunk, &ran); st != EFZ_OK) {
      efz_campaign_free(c);
      return fail(st, "campaign run");
    }
    efz_campaign_stats_get(c, &stats);
    std::fprintf(stderr,
                 "\r[fuzz] execs=%" PRIu64 " edges=%" PRIu64
                 " corpus=%" PRIu64 " anomalies=%" PRIu64,
                 stats.execs, stats.distinct_edges, stats.corpus_size,
                 stats.anomalies);
    std::fflush(stderr);
    if (ran == 0) break;
  }
  std::fputc('\n', stderr);

  if (!out_dir.empty()) {
    if (auto st = efz_campaign_write_outputs(c, out_dir.c_str());
        st != EFZ_OK) {
      efz_campaign_free(c);
      return fail(st, "writing outputs");
    }
    std::cout << "outputs written to " << out_dir << "\n";
  }
  std::cout << "executions:     " << stats.execs << "\n"
            << "distinct edges: " << stats.distinct_edges << "\n"
            << "corpus entries: " << stats.corpus_size << "\n"
            << "anomalies:      " << stats.anomalies << "\n"
            << "oracle crashes: " << stats.crashes_seen << "\n"
            << "restarts:       " << stats.restarts << "\n";
  static const char* bug_names[] = {
      "B1_MissingIa32ePaeCheck",   "B2_NonCanonicalMsrLoad",
      "B3_InvalidEptpTripleFault", "B4_ActivityStateBlindCopy",
      "B5_LmePgInconsistency",     "B6_VgifAssumption"};
  for (int b = 0; b < EFZ_BUG_COUNT; ++b)
    if (stats.first_found_exec[b] >= 0)
      std::cout << "  found " << bug_names[b] << " at exec "
                << stats.first_found_exec[b] << "\n";
  efz_campaign_free(c);
  return 0;
}

int cmd_reproduce(const std::string& record) {
  int reproduced = 0;
  char message[256] = {0};
  auto st = efz_reproduce(record.c_str(), &reproduced, message,
                          sizeof message);
  if (st != EFZ_OK) return fail(st, "reproduce " + record);
  std::cout << message << "\n";
  return reproduced ? 0 : 2;
}

int cmd_hamming(uint32_t n, uint64_t seed, const std::string& csv) {
  efz_hamming_summary s{};
  auto st = efz_hamming_experiment(n, seed, csv.empty() ? nullptr
                                                        : csv.c_str(),
                                   &s);
  if (st != EFZ_OK) return fail(st, "hamming experiment");
  std::printf("iterations: %u (seed %" PRIu64 ")\n", n, seed);
  std::printf("random vs rounded:   mean %.1f  stddev %.1f\n",
              s.random_vs_rounded_mean, s.random_vs_rounded_stddev);
  std::printf("default vs rounded:  mean %.1f  stddev %.1f\n",
              s.default_vs_rounded_mean, s.default_vs_rounded_stddev);
  std::printf("rounded pairwise:    mean %.1f  stddev %.1f\n",
              s.rounded_pairwise_mean, s.rounded_pairwise_stddev);
  std::printf(
      "reference means from a hardware-scale validator: 492.6 / 284.7 / "
      "353.0\n");
  if (!csv.empty()) std::printf("per-iteration CSV: %s\n", csv.c_str());
  return 0;
}

int cmd_stats(const std::string& dir) {
  fs::path root(dir);
  std::ifstream f(root / "campaign.json");
  if (!f) {
    std::cerr << "error: no campaign.json under " << dir << "\n";
    return 1;
  }
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    std::cerr << "error: parsing campaign.json: " << e.what() << "\n";
    return 1;
  }
  const auto& st = j.at("stats");
  std::cout << "campaign summary (" << dir << ")\n"
            << "  executions:     " << st.at("execs") << "\n"
            << "  distinct edges: " << st.at("distinct_edges") << "\n"
            << "  corpus entries: " << st.at("corpus_size") << "\n"
            << "  anomalies:      " << st.at("anomalies") << "\n"
            << "  oracle crashes: " << st.at("crashes_seen") << "\n"
            << "  restarts:       " << st.at("restarts") << "\n";

  if (j.contains("anomalies") && !j.at("anomalies").empty()) {
    std::cout << "anomalies:\n";
    std::printf("  %-28s %-20s %-18s %s\n", "bug", "kind", "path-hash",
                "file");
    for (const auto& a : j.at("anomalies"))
      std::printf("  %-28s %-20s %-18s %s\n",
                  a.at("bug").get<std::string>().c_str(),
                  a.at("kind").get<std::string>().c_str(),
                  a.at("path_hash").get<std::string>().c_str(),
                  a.at("file").get<std::string>().c_str());
  }

  std::ifstream csv(root / "coverage.csv");
  if (csv) {
    std::string line, last;
    std::getline(csv, line);  // header
    int rows = 0;
    while (std::getline(csv, line))
      if (!line.empty()) {
        last = line;
        ++rows;
      }
    std::cout << "coverage-over-time: " << rows << " samples";
    if (!last.empty()) std::cout << ", final: " << last;
    std::cout << "  (execs,distinct_edges,anomalies)\n";
  }
  return 0;
}

int cmd_dump(const std::string& what) {
  efz_json_kind kind;
  if (what == "catalog") kind = EFZ_JSON_FIELD_CATALOG;
  else if (what == "checks") kind = EFZ_JSON_CHECK_CATALOG;
  else if (what == "bugs") kind = EFZ_JSON_BUG_CATALOG;
  else if (what == "edges") kind = EFZ_JSON_EDGE_TABLE;
  else {
    std::cerr << "error: unknown dump kind " << what << "\n";
    return 1;
  }
  char* text = nullptr;
  if (auto st = efz_dump_json(kind, &text); st != EFZ_OK)
    return fail(st, "dump");
  std::fputs(text, stdout);
  std::fputc('\n', stdout);
  efz_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entryfuzz: coverage-guided fuzzing of a modeled nested "
               "VM-entry pipeline"};
  app.require_subcommand(1);

  // fuzz
  uint64_t seed = 1;
  uint32_t workers = 1;
  uint64_t execs = 100000;
  double duration = 0;
  bool no_guidance = false, no_silent = false;
  std::vector<std::string> disable;
  std::string bugs = "none", out_dir;
  auto* fuzz = app.add_subcommand("fuzz", "run a fuzzing campaign");
  fuzz->add_option("--seed", seed, "campaign seed");
  fuzz->add_option("--workers", workers, "parallel workers");
  fuzz->add_option("--execs", execs, "execution budget");
  fuzz->add_option("--duration", duration,
                   "wall-clock budget in seconds (0 = unbounded)");
  fuzz->add_flag("--no-coverage-guidance", no_guidance,
                 "draw uniform random inputs only");
  fuzz->add_option("--disable", disable,
                   "disable a stage: harness|validator|configurator")
      ->allow_extra_args(false);
  fuzz->add_option("--bugs", bugs, "seeded bugs: all|none|B1,B4,...");
  fuzz->add_flag("--no-silent-round", no_silent,
                 "disable silent rounding in the target");
  fuzz->add_option("--out", out_dir, "output directory");

  // reproduce
  std::string record;
  auto* rep = app.add_subcommand("reproduce",
                                 "replay a stored anomaly record");
  rep->add_option("record", record, "anomaly record .json")->required();

  // hamming
  uint32_t hn = 10000;
  uint64_t hseed = 1;
  std::string hcsv;
  auto* ham = app.add_subcommand("hamming",
                                 "rounding-distance distributions");
  ham->add_option("--n", hn, "iterations");
  ham->add_option("--seed", hseed, "rng seed");
  ham->add_option("--csv", hcsv, "per-iteration CSV path");

  // stats
  std::string stats_dir;
  auto* st = app.add_subcommand("stats", "summarize a campaign directory");
  st->add_option("dir", stats_dir, "campaign output directory")->required();

  // dump
  std::string dump_what;
  auto* dump = app.add_subcommand("dump",
                                  "print catalogs as JSON "
                                  "(catalog|checks|bugs|edges)");
  dump->add_option("what", dump_what, "catalog|checks|bugs|edges")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (fuzz->parsed())
    return cmd_fuzz(seed, workers, execs, duration, no_guidance, disable,
                    bugs, no_silent, out_dir);
  if (rep->parsed()) return cmd_reproduce(record);
  if (ham->parsed()) return cmd_hamming(hn, hseed, hcsv);
  if (st->parsed()) return cmd_stats(stats_dir);
  if (dump->parsed()) return cmd_dump(dump_what);
  return 1;
}
