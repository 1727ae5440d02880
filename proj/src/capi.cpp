// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/entryfuzz.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "entryfuzz/engine.hpp"
#include "entryfuzz/oracle.hpp"
#include "entryfuzz/state.hpp"
#include "entryfuzz/validator.hpp"

namespace {

template <typename F>
efz_status guarded(F&& f) {
  try {
    f();
    return EFZ_OK;
  } catch (const std::invalid_argument&) {
    return EFZ_ERR_INVALID_ARG;
  } catch (const std::runtime_error&) {
    return EFZ_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    return EFZ_ERR_INTERNAL;
  } catch (...) {
    return EFZ_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

efz::engine::RunConfig to_run_config(const efz_run_config& c) {
  efz::engine::RunConfig r;
  r.seeded_bugs = c.seeded_bugs & EFZ_ALL_BUGS;
  r.silent_round = c.silent_round != 0;
  r.harness_on = c.harness_on != 0;
  r.validator_on = c.validator_on != 0;
  r.configurator_on = c.configurator_on != 0;
  return r;
}

void fill_stats(const efz::engine::CampaignStats& s,
                efz_campaign_stats* out) {
  out->execs = s.execs;
  out->distinct_edges = uint64_t(s.distinct_edges);
  out->corpus_size = s.corpus_size;
  out->anomalies = s.anomaly_count;
  out->crashes_seen = s.crashes_seen;
  out->restarts = s.restarts;
  for (int b = 0; b < EFZ_BUG_COUNT; ++b)
    out->first_found_exec[b] = s.first_found_exec[b];
}

}  // namespace

struct efz_campaign {
  efz::engine::Campaign impl;
};

extern "C" {

const char* efz_status_str(efz_status s) {
  switch (s) {
    case EFZ_OK: return "ok";
    case EFZ_ERR_INVALID_ARG: return "invalid argument";
    case EFZ_ERR_IO: return "io error";
    case EFZ_ERR_PARSE: return "parse error";
    case EFZ_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* efz_version(void) { return "entryfuzz 1.0.0"; }

efz_status efz_dump_json(efz_json_kind kind, char** out) {
  if (!out) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    std::string text;
    switch (kind) {
      case EFZ_JSON_FIELD_CATALOG: text = efz::catalog_json(); break;
      case EFZ_JSON_CHECK_CATALOG:
        text = efz::vmcheck::check_catalog_json();
        break;
      case EFZ_JSON_BUG_CATALOG: text = efz::oracle::bug_catalog_json(); break;
      case EFZ_JSON_EDGE_TABLE: text = efz::oracle::edge_table_json(); break;
      default: throw std::invalid_argument("json kind");
    }
    *out = dup_string(text);
    if (!*out) throw std::bad_alloc();
  });
}

void efz_string_free(char* s) { std::free(s); }

void efz_run_config_default(efz_run_config* cfg) {
  if (!cfg) return;
  cfg->seeded_bugs = 0;
  cfg->silent_round = 1;
  cfg->harness_on = 1;
  cfg->validator_on = 1;
  cfg->configurator_on = 1;
}

efz_status efz_run_one(const uint8_t* input, const efz_run_config* cfg,
                       efz_run_result* out) {
  if (!input || !cfg || !out) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    efz::engine::FuzzInput in;
    std::memcpy(in.data(), input, EFZ_INPUT_SIZE);
    auto outcome = efz::engine::run_one(in, to_run_config(*cfg));
    out->terminal = static_cast<int>(outcome.trace.terminal);
    out->anomaly = 0;
    out->bug[0] = '\0';
    if (outcome.anomaly) {
      out->anomaly =
          outcome.anomaly->kind == efz::engine::AnomalyKind::Crash ? 1 : 2;
      std::snprintf(out->bug, sizeof out->bug, "%s",
                    std::string(efz::oracle::bug_name(
                                    static_cast<efz::oracle::BugId>(
                                        outcome.anomaly->bug)))
                        .c_str());
    }
    out->path_hash = outcome.path_hash;
    out->edges_hit = uint32_t(outcome.edges.size());
  });
}

void efz_campaign_config_default(efz_campaign_config* cfg) {
  if (!cfg) return;
  cfg->seed = 1;
  cfg->workers = 1;
  cfg->max_execs = 100000;
  cfg->max_seconds = 0;
  cfg->coverage_guided = 1;
  efz_run_config_default(&cfg->run);
}

efz_status efz_campaign_new(const efz_campaign_config* cfg,
                            efz_campaign** out) {
  if (!cfg || !out) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    efz::engine::CampaignConfig cc;
    cc.seed = cfg->seed;
    cc.workers = int(cfg->workers);
    cc.max_execs = cfg->max_execs;
    cc.max_seconds = cfg->max_seconds;
    cc.coverage_guided = cfg->coverage_guided != 0;
    cc.run = to_run_config(cfg->run);
    *out = new efz_campaign{efz::engine::Campaign(std::move(cc))};
  });
}

efz_status efz_campaign_run(efz_campaign* c, uint64_t execs, uint64_t* ran) {
  if (!c) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    uint64_t n = c->impl.run_for(execs);
    if (ran) *ran = n;
  });
}

efz_status efz_campaign_stats_get(const efz_campaign* c,
                                  efz_campaign_stats* out) {
  if (!c || !out) return EFZ_ERR_INVALID_ARG;
  fill_stats(c->impl.stats(), out);
  return EFZ_OK;
}

efz_status efz_campaign_write_outputs(const efz_campaign* c,
                                      const char* dir) {
  if (!c || !dir) return EFZ_ERR_INVALID_ARG;
  auto st = guarded([&] { c->impl.write_outputs(dir); });
  return st == EFZ_ERR_PARSE ? EFZ_ERR_IO : st;
}

void efz_campaign_free(efz_campaign* c) { delete c; }

efz_status efz_reproduce(const char* record_path, int* reproduced,
                         char* message_buf, size_t message_len) {
  if (!record_path || !reproduced) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    auto v = efz::engine::reproduce(record_path);
    *reproduced = v.reproduced ? 1 : 0;
    if (message_buf && message_len)
      std::snprintf(message_buf, message_len, "%s", v.message.c_str());
  });
}

efz_status efz_hamming_experiment(uint32_t n, uint64_t seed,
                                  const char* csv_path,
                                  efz_hamming_summary* out) {
  if (!out) return EFZ_ERR_INVALID_ARG;
  return guarded([&] {
    auto s = efz::engine::hamming_experiment(n, seed,
                                             csv_path ? csv_path : "");
    out->random_vs_rounded_mean = s.random_vs_rounded.mean;
    out->random_vs_rounded_stddev = s.random_vs_rounded.stddev;
    out->default_vs_rounded_mean = s.default_vs_rounded.mean;
    out->default_vs_rounded_stddev = s.default_vs_rounded.stddev;
    out->rounded_pairwise_mean = s.rounded_pairwise.mean;
    out->rounded_pairwise_stddev = s.rounded_pairwise.stddev;
  });
}

}  // extern "C"
