// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/engine.hpp"

#include "entryfuzz/caps.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace efz::engine {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::span<const uint8_t> part(const FuzzInput& in, const Partition& p) {
  return std::span<const uint8_t>(in.data() + p.off, p.len);
}

std::string_view to_string(AnomalyKind k) {
  return k == AnomalyKind::Crash ? "crash" : "diagnostic-pattern";
}

oracle::CoverageMap RunOutcome::coverage_delta() const {
  oracle::CoverageMap m;
  for (auto [slot, cnt] : edges) m.raw()[slot] = cnt;
  return m;
}

VmState decode_seed(std::span<const uint8_t> seed) {
  StateBlob blob{};
  size_t n = std::min(seed.size(), blob.size());
  std::copy_n(seed.begin(), n, blob.begin());
  return decode(blob);
}

namespace {

std::string hex_encode(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xF];
  }
  return out;
}

std::vector<uint8_t> hex_decode(std::string_view text) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (text.size() % 2) throw std::runtime_error("odd hex length");
  std::vector<uint8_t> out(text.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = nib(text[2 * i]), lo = nib(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::runtime_error("bad hex digit");
    out[i] = uint8_t(hi << 4 | lo);
  }
  return out;
}

int parse_bug_line(const std::string& line) {
  if (line.rfind("BUG:", 0) != 0) return -1;
  size_t end = line.find(':', 4);
  if (end == std::string::npos) return -1;
  return oracle::bug_from_name(line.substr(4, end - 4));
}

// Executes the five-stage pipeline against a caller-provided oracle so
// campaign workers can reuse one instance.
RunOutcome run_one_with(const FuzzInput& input, const RunConfig& cfg,
                        oracle::Oracle& target) {
  const caps::CapabilityProfile profile =
      cfg.configurator_on ? caps::generate_profile(part(input, kPartVcpuConfig))
                          : caps::default_profile();

  harness::HarnessProgram program =
      cfg.harness_on
          ? harness::build_program(
                part(input, kPartInitSequence).subspan(0,
                                                       harness::kInitSliceBytes),
                part(input, kPartRuntimeSteps))
          : harness::fixed_base_program();

  VmState st = decode_seed(part(input, kPartVmcsSeed));
  if (cfg.validator_on) st = vmcheck::round(std::move(st), profile);
  auto directive = mutate::parse_directive(part(input, kPartMutation));
  st = mutate::mutate(std::move(st), directive);

  oracle::OracleConfig ocfg;
  ocfg.profile = profile;
  ocfg.seeded_bugs = cfg.seeded_bugs;
  ocfg.silent_round = cfg.silent_round;
  target.reconfigure(std::move(ocfg));

  RunOutcome out;
  out.trace = harness::execute(program, st, profile, target);
  out.edges.reserve(target.edges_touched().size());
  for (uint16_t slot : target.edges_touched())
    out.edges.emplace_back(slot, target.edge_hits(slot));
  out.path_hash = target.last_path_hash();

  bool crashed =
      out.trace.terminal == harness::TerminalStatus::OracleCrashed;
  int bug = -1;
  if (crashed) {
    // The crash line is the last diagnostic emitted.
    for (auto it = out.trace.diagnostics.rbegin();
         it != out.trace.diagnostics.rend() && bug < 0; ++it)
      bug = parse_bug_line(*it);
  } else {
    for (const auto& line : out.trace.diagnostics) {
      bug = parse_bug_line(line);
      if (bug >= 0) break;
    }
  }
  if (bug >= 0) {
    AnomalyRecord rec;
    rec.kind = crashed ? AnomalyKind::Crash : AnomalyKind::DiagnosticPattern;
    rec.bug = bug;
    rec.path_hash = out.path_hash;
    rec.input = input;
    rec.config = cfg;
    rec.diagnostics = out.trace.diagnostics;
    rec.trace_excerpt = harness::trace_jsonl(out.trace);
    out.anomaly = std::move(rec);
  }
  return out;
}

}  // namespace

RunOutcome run_one(const FuzzInput& input, const RunConfig& config) {
  oracle::Oracle scratch{oracle::OracleConfig{}};
  return run_one_with(input, config, scratch);
}

// ---- Campaign ------------------------------------------------------------

namespace {

struct Job {
  FuzzInput input;
  int64_t parent = -1;
};

struct JobResult {
  std::vector<std::pair<uint16_t, uint8_t>> edges;
  bool crashed = false;
  int bug = -1;
  uint8_t kind = 0xFF;
  uint64_t path_hash = 0;
  std::vector<std::string> diagnostics;
  std::string trace_excerpt;
};

std::string utc_stamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

struct Campaign::Impl {
  std::mt19937_64 rng;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();
  std::vector<uint64_t> cum_weights;
  uint64_t total_weight = 0;
  std::set<std::pair<int, uint64_t>> seen;

  std::vector<Job> jobs;
  std::vector<JobResult> results;

  // Worker pool state.
  int nworkers = 1;
  std::vector<std::thread> threads;
  std::mutex m;
  std::condition_variable cv_start, cv_done;
  uint64_t batch_gen = 0;
  int done_count = 0;
  std::atomic<size_t> next_job{0};
  bool stop = false;
  std::atomic<uint64_t> restarts{0};

  RunConfig run_cfg;

  void worker_loop() {
    auto target = std::make_unique<oracle::Oracle>(oracle::OracleConfig{});
    bool prev_crashed = false;
    uint64_t seen_gen = 0;
    for (;;) {
      {
        std::unique_lock lk(m);
        cv_start.wait(lk, [&] { return stop || batch_gen != seen_gen; });
        if (stop) return;
        seen_gen = batch_gen;
      }
      for (;;) {
        size_t i = next_job.fetch_add(1);
        if (i >= jobs.size()) break;
        if (prev_crashed) {
          // Watchdog: rebuild the target after a crash, keep the corpus.
          target = std::make_unique<oracle::Oracle>(oracle::OracleConfig{});
          restarts.fetch_add(1);
          prev_crashed = false;
        }
        results[i] = run_job(jobs[i], *target);
        prev_crashed = results[i].crashed;
      }
      {
        std::lock_guard lk(m);
        if (++done_count == nworkers) cv_done.notify_one();
      }
    }
  }

  JobResult run_job(const Job& job, oracle::Oracle& target) {
    RunOutcome out = run_one_with(job.input, run_cfg, target);
    JobResult r;
    r.edges = std::move(out.edges);
    r.crashed = out.trace.terminal == harness::TerminalStatus::OracleCrashed;
    r.path_hash = out.path_hash;
    if (out.anomaly) {
      r.bug = out.anomaly->bug;
      r.kind = static_cast<uint8_t>(out.anomaly->kind);
      r.diagnostics = std::move(out.anomaly->diagnostics);
      r.trace_excerpt = std::move(out.anomaly->trace_excerpt);
    }
    return r;
  }

  std::unique_ptr<oracle::Oracle> inline_oracle;
  bool inline_prev_crashed = false;

  void run_batch() {
    if (nworkers <= 1) {
      if (!inline_oracle)
        inline_oracle =
            std::make_unique<oracle::Oracle>(oracle::OracleConfig{});
      for (size_t i = 0; i < jobs.size(); ++i) {
        if (inline_prev_crashed) {
          inline_oracle =
              std::make_unique<oracle::Oracle>(oracle::OracleConfig{});
          restarts.fetch_add(1);
          inline_prev_crashed = false;
        }
        results[i] = run_job(jobs[i], *inline_oracle);
        inline_prev_crashed = results[i].crashed;
      }
      return;
    }
    {
      std::lock_guard lk(m);
      next_job.store(0);
      done_count = 0;
      ++batch_gen;
    }
    cv_start.notify_all();
    std::unique_lock lk(m);
    cv_done.wait(lk, [&] { return done_count == nworkers; });
  }

  uint16_t pick_corpus() {
    uint64_t r = rng() % total_weight;
    auto it = std::upper_bound(cum_weights.begin(), cum_weights.end(), r);
    return static_cast<uint16_t>(it - cum_weights.begin());
  }

  void mutate_input(FuzzInput& input) {
    int nmut = 1 + rng() % 4;
    for (int k = 0; k < nmut; ++k) {
      const Partition& p = kPartitions[rng() % 5];
      switch (rng() % 3) {
        case 0: {  // bit flip
          size_t pos = p.off + rng() % p.len;
          input[pos] ^= uint8_t(1u << (rng() % 8));
          break;
        }
        case 1: {  // byte replace
          input[p.off + rng() % p.len] = uint8_t(rng());
          break;
        }
        case 2: {  // block copy within the partition
          size_t blen = 1 + rng() % std::min<size_t>(32, p.len);
          size_t src = p.off + rng() % (p.len - blen + 1);
          size_t dst = p.off + rng() % (p.len - blen + 1);
          std::memmove(input.data() + dst, input.data() + src, blen);
          break;
        }
      }
    }
  }

  void fill_random(FuzzInput& input) {
    for (size_t i = 0; i < kInputSize; i += 8) {
      uint64_t v = rng();
      std::memcpy(input.data() + i, &v, 8);
    }
  }
};

Campaign::Campaign(CampaignConfig cfg)
    : cfg_(cfg), impl_(std::make_unique<Impl>()) {
  if (cfg_.max_execs == 0 && cfg_.max_seconds <= 0)
    throw std::invalid_argument("campaign needs an execution or time budget");
  if (cfg_.workers < 1) cfg_.workers = 1;
  impl_->rng.seed(cfg_.seed);
  impl_->run_cfg = cfg_.run;
  impl_->nworkers = cfg_.workers;
  if (cfg_.workers > 1) {
    impl_->threads.reserve(cfg_.workers);
    for (int w = 0; w < cfg_.workers; ++w)
      impl_->threads.emplace_back([this] { impl_->worker_loop(); });
  }
}

Campaign::~Campaign() {
  if (!impl_->threads.empty()) {
    {
      std::lock_guard lk(impl_->m);
      impl_->stop = true;
    }
    impl_->cv_start.notify_all();
    for (auto& t : impl_->threads) t.join();
  }
}

uint64_t Campaign::run_for(uint64_t execs) {
  uint64_t remaining =
      cfg_.max_execs ? std::min(execs, cfg_.max_execs - stats_.execs) : execs;
  uint64_t done = 0;
  Impl& im = *impl_;

  while (done < remaining) {
    if (cfg_.max_seconds > 0) {
      // The wall-clock bound covers the whole campaign, not this call.
      double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        im.started)
              .count();
      if (elapsed >= cfg_.max_seconds) break;
    }
    size_t batch = std::min<uint64_t>(
        remaining - done, std::max<size_t>(256, size_t(cfg_.workers) * 64));
    im.jobs.resize(batch);
    im.results.assign(batch, JobResult{});

    // Deterministic scheduling: every decision comes from the master RNG.
    for (size_t i = 0; i < batch; ++i) {
      Job& j = im.jobs[i];
      j.parent = -1;
      bool from_corpus = cfg_.coverage_guided && !corpus_.empty() &&
                         im.rng() % 100 < 60;
      if (from_corpus) {
        uint16_t idx = im.pick_corpus();
        j.input = corpus_[idx].input;
        j.parent = idx;
        im.mutate_input(j.input);
      } else {
        im.fill_random(j.input);
      }
    }

    im.run_batch();

    // Merge in job order.
    for (size_t i = 0; i < batch; ++i) {
      JobResult& r = im.results[i];
      uint64_t exec_index = stats_.execs++;
      int new_edges = 0;
      std::vector<uint16_t> new_slots;
      for (auto [slot, cnt] : r.edges) {
        uint8_t& g = coverage_.raw()[slot];
        if (g == 0) {
          ++new_edges;
          new_slots.push_back(slot);
        }
        if (cnt > g) g = cnt;
      }
      if (r.crashed) ++stats_.crashes_seen;
      if (new_edges > 0) {
        CorpusEntry e;
        e.input = im.jobs[i].input;
        e.discovered_edges = new_edges;
        e.exec_index = exec_index;
        e.parent = im.jobs[i].parent;
        e.new_slots = std::move(new_slots);
        corpus_.push_back(std::move(e));
        im.total_weight += uint64_t(new_edges);
        im.cum_weights.push_back(im.total_weight);
      }
      if (r.bug >= 0) {
        auto key = std::make_pair(r.bug, r.path_hash);
        if (stats_.first_found_exec[r.bug] < 0)
          stats_.first_found_exec[r.bug] = int64_t(exec_index);
        if (im.seen.insert(key).second) {
          StoredAnomaly sa;
          sa.record.kind = static_cast<AnomalyKind>(r.kind);
          sa.record.bug = r.bug;
          sa.record.path_hash = r.path_hash;
          sa.record.input = im.jobs[i].input;
          sa.record.config = cfg_.run;
          sa.record.diagnostics = std::move(r.diagnostics);
          sa.record.trace_excerpt = std::move(r.trace_excerpt);
          sa.exec_index = exec_index;
          sa.file_stem = utc_stamp() + "-" + std::to_string(exec_index) +
                         "-" +
                         std::string(oracle::bug_name(
                             static_cast<oracle::BugId>(r.bug)));
          anomalies_.push_back(std::move(sa));
        }
      }
    }
    done += batch;
    stats_.distinct_edges = coverage_.distinct();
    stats_.corpus_size = corpus_.size();
    stats_.anomaly_count = anomalies_.size();
    stats_.restarts = im.restarts.load();
    curve_.push_back({stats_.execs, uint64_t(stats_.distinct_edges),
                      stats_.anomaly_count});
  }
  return done;
}

void Campaign::run_to_completion() {
  if (cfg_.max_execs) {
    while (stats_.execs < cfg_.max_execs)
      if (run_for(cfg_.max_execs - stats_.execs) == 0) break;
  } else {
    while (run_for(1u << 16) != 0) {
    }
  }
}

std::string Campaign::coverage_csv() const {
  std::string out = "execs,distinct_edges,anomalies\n";
  for (const auto& row : curve_) {
    out += std::to_string(row[0]);
    out += ',';
    out += std::to_string(row[1]);
    out += ',';
    out += std::to_string(row[2]);
    out += '\n';
  }
  return out;
}

namespace {

json run_config_json(const RunConfig& c) {
  return json{{"seeded_bugs", c.seeded_bugs},
              {"silent_round", c.silent_round},
              {"harness_on", c.harness_on},
              {"validator_on", c.validator_on},
              {"configurator_on", c.configurator_on}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.seeded_bugs = j.at("seeded_bugs").get<uint32_t>();
  c.silent_round = j.at("silent_round").get<bool>();
  c.harness_on = j.at("harness_on").get<bool>();
  c.validator_on = j.at("validator_on").get<bool>();
  c.configurator_on = j.at("configurator_on").get<bool>();
  return c;
}

void write_file(const fs::path& p, std::string_view content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f.write(content.data(), std::streamsize(content.size()));
}

}  // namespace

std::string anomaly_record_json(const AnomalyRecord& r) {
  json j;
  j["schema"] = "entryfuzz-anomaly-v1";
  j["kind"] = std::string(to_string(r.kind));
  j["bug"] = std::string(oracle::bug_name(static_cast<oracle::BugId>(r.bug)));
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(r.path_hash));
  j["path_hash"] = hash;
  j["config"] = run_config_json(r.config);
  {
    // The derived vCPU profile, for human consumption; replay derives it
    // from the input again.
    caps::CapabilityProfile p =
        r.config.configurator_on
            ? caps::generate_profile(
                  std::span<const uint8_t>(r.input.data(), 3))
            : caps::default_profile();
    j["profile"] = json::parse(caps::profile_json(p));
  }
  j["input_hex"] = hex_encode(r.input);
  j["diagnostics"] = r.diagnostics;
  j["trace_excerpt"] = r.trace_excerpt;
  return j.dump(2);
}

AnomalyRecord parse_anomaly_record(const std::string& text) {
  json j = json::parse(text);
  if (j.value("schema", "") != "entryfuzz-anomaly-v1")
    throw std::runtime_error("not an anomaly record");
  AnomalyRecord r;
  std::string kind = j.at("kind").get<std::string>();
  r.kind = kind == "crash" ? AnomalyKind::Crash
                           : AnomalyKind::DiagnosticPattern;
  int bug = oracle::bug_from_name(j.at("bug").get<std::string>());
  if (bug < 0) throw std::runtime_error("unknown bug name");
  r.bug = bug;
  r.path_hash =
      std::stoull(j.at("path_hash").get<std::string>(), nullptr, 16);
  r.config = run_config_from_json(j.at("config"));
  auto bytes = hex_decode(j.at("input_hex").get<std::string>());
  if (bytes.size() != kInputSize)
    throw std::runtime_error("input must be 2048 bytes");
  std::copy(bytes.begin(), bytes.end(), r.input.begin());
  if (j.contains("diagnostics"))
    r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  return r;
}

void Campaign::write_outputs(const std::string& dir) const {
  fs::path root(dir);
  fs::create_directories(root / "corpus");
  fs::create_directories(root / "anomalies");

  for (const auto& e : corpus_) {
    char name[32];
    std::snprintf(name, sizeof name, "%09llu.bin",
                  static_cast<unsigned long long>(e.exec_index));
    write_file(root / "corpus" / name,
               std::string_view(reinterpret_cast<const char*>(e.input.data()),
                                e.input.size()));
  }
  for (const auto& a : anomalies_) {
    write_file(root / "anomalies" / (a.file_stem + ".bin"),
               std::string_view(
                   reinterpret_cast<const char*>(a.record.input.data()),
                   a.record.input.size()));
    write_file(root / "anomalies" / (a.file_stem + ".json"),
               anomaly_record_json(a.record));
  }
  write_file(root / "coverage.csv", coverage_csv());
  write_file(root / "coverage.bin",
             std::string_view(
                 reinterpret_cast<const char*>(coverage_.raw().data()),
                 coverage_.raw().size()));

  json j;
  j["config"] = {{"seed", cfg_.seed},
                 {"workers", cfg_.workers},
                 {"max_execs", cfg_.max_execs},
                 {"coverage_guided", cfg_.coverage_guided},
                 {"run", run_config_json(cfg_.run)}};
  j["stats"] = {{"execs", stats_.execs},
                {"distinct_edges", stats_.distinct_edges},
                {"corpus_size", stats_.corpus_size},
                {"anomalies", stats_.anomaly_count},
                {"crashes_seen", stats_.crashes_seen},
                {"restarts", stats_.restarts}};
  json ff = json::object();
  for (int b = 0; b < oracle::kBugCount; ++b)
    ff[std::string(oracle::bug_name(static_cast<oracle::BugId>(b)))] =
        stats_.first_found_exec[b];
  j["stats"]["first_found_exec"] = ff;
  json corpus_meta = json::array();
  for (const auto& e : corpus_)
    corpus_meta.push_back({{"exec", e.exec_index},
                           {"parent", e.parent},
                           {"new_edges", e.discovered_edges}});
  j["corpus"] = corpus_meta;
  json anom_meta = json::array();
  for (const auto& a : anomalies_) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(a.record.path_hash));
    anom_meta.push_back(
        {{"file", a.file_stem + ".bin"},
         {"bug", std::string(oracle::bug_name(
                     static_cast<oracle::BugId>(a.record.bug)))},
         {"kind", std::string(to_string(a.record.kind))},
         {"path_hash", hash},
         {"exec", a.exec_index}});
  }
  j["anomalies"] = anom_meta;
  write_file(root / "campaign.json", j.dump(2));
}

CampaignStats run_campaign(const CampaignConfig& cfg,
                           const std::string& out_dir) {
  Campaign c(cfg);
  c.run_to_completion();
  if (!out_dir.empty()) c.write_outputs(out_dir);
  return c.stats();
}

ReproVerdict reproduce(const std::string& record_path) {
  std::ifstream f(record_path, std::ios::binary);
  if (!f) throw std::runtime_error("record not found: " + record_path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  AnomalyRecord rec;
  try {
    rec = parse_anomaly_record(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt record: ") + e.what());
  }

  RunOutcome out = run_one(rec.input, rec.config);
  ReproVerdict v;
  v.expected =
      std::string(oracle::bug_name(static_cast<oracle::BugId>(rec.bug)));
  if (out.anomaly) {
    v.observed = std::string(
        oracle::bug_name(static_cast<oracle::BugId>(out.anomaly->bug)));
    v.reproduced =
        out.anomaly->bug == rec.bug && out.anomaly->kind == rec.kind;
  } else {
    v.observed = "(no anomaly)";
    v.reproduced = false;
  }
  v.message = v.reproduced ? "reproduced " + v.expected
                           : "expected " + v.expected + ", observed " +
                                 v.observed;
  return v;
}

// ---- Rounding-distance experiment ------------------------------------------

namespace {

DistributionSummary summarize(std::vector<int>& xs) {
  DistributionSummary s;
  if (xs.empty()) return s;
  double sum = 0;
  for (int x : xs) sum += x;
  s.mean = sum / double(xs.size());
  double var = 0;
  for (int x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / double(xs.size()));
  std::sort(xs.begin(), xs.end());
  auto pct = [&](int q) { return xs[(xs.size() - 1) * size_t(q) / 100]; };
  s.min = xs.front();
  s.p25 = pct(25);
  s.p50 = pct(50);
  s.p75 = pct(75);
  s.max = xs.back();
  return s;
}

}  // namespace

HammingSummary hamming_experiment(uint32_t n, uint64_t seed,
                                  const std::string& csv_path) {
  if (n < 2) throw std::invalid_argument("experiment needs n >= 2");
  std::mt19937_64 rng(seed);
  const caps::CapabilityProfile& profile = caps::full_profile();
  const VmState default_state = vmcheck::round(VmState{}, profile);

  std::vector<int> rand_vs_rounded, default_vs_rounded, pairwise;
  rand_vs_rounded.reserve(n);
  default_vs_rounded.reserve(n);
  pairwise.reserve(n - 1);

  std::string csv;
  if (!csv_path.empty())
    csv = "iteration,random_vs_rounded,default_vs_rounded,rounded_pairwise\n";

  VmState prev_rounded;
  for (uint32_t i = 0; i < n; ++i) {
    VmState raw;
    for (uint16_t f = 0; f < kFieldCount; ++f) raw.write(f, rng());
    VmState rounded = vmcheck::round(raw, profile);
    int d_rand = hamming_distance(raw, rounded);
    int d_def = hamming_distance(default_state, rounded);
    rand_vs_rounded.push_back(d_rand);
    default_vs_rounded.push_back(d_def);
    int d_pair = -1;
    if (i > 0) {
      d_pair = hamming_distance(prev_rounded, rounded);
      pairwise.push_back(d_pair);
    }
    if (!csv_path.empty()) {
      csv += std::to_string(i);
      csv += ',';
      csv += std::to_string(d_rand);
      csv += ',';
      csv += std::to_string(d_def);
      csv += ',';
      if (d_pair >= 0) csv += std::to_string(d_pair);
      csv += '\n';
    }
    prev_rounded = rounded;
  }

  if (!csv_path.empty()) write_file(csv_path, csv);

  HammingSummary s;
  s.random_vs_rounded = summarize(rand_vs_rounded);
  s.default_vs_rounded = summarize(default_vs_rounded);
  s.rounded_pairwise = summarize(pairwise);
  return s;
}

}  // namespace efz::engine
