// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "entryfuzz/entryfuzz.h"

namespace fs = std::filesystem;

TEST_CASE("version and status strings") {
  CHECK(std::string(efz_version()).find("entryfuzz") != std::string::npos);
  CHECK(std::string(efz_status_str(EFZ_OK)) == "ok");
  CHECK(std::string(efz_status_str(EFZ_ERR_PARSE)) == "parse error");
}

TEST_CASE("json dumps are served through the C surface") {
  for (auto kind : {EFZ_JSON_FIELD_CATALOG, EFZ_JSON_CHECK_CATALOG,
                    EFZ_JSON_BUG_CATALOG, EFZ_JSON_EDGE_TABLE}) {
    char* text = nullptr;
    REQUIRE(efz_dump_json(kind, &text) == EFZ_OK);
    REQUIRE(text != nullptr);
    CHECK(std::strlen(text) > 100);
    efz_string_free(text);
  }
  CHECK(efz_dump_json(EFZ_JSON_FIELD_CATALOG, nullptr) ==
        EFZ_ERR_INVALID_ARG);
}

TEST_CASE("run_one executes a zero input") {
  uint8_t input[EFZ_INPUT_SIZE] = {0};
  efz_run_config cfg;
  efz_run_config_default(&cfg);
  efz_run_result result;
  REQUIRE(efz_run_one(input, &cfg, &result) == EFZ_OK);
  CHECK(result.terminal == 0);  // completed
  CHECK(result.anomaly == 0);
  CHECK(result.edges_hit > 0);

  CHECK(efz_run_one(nullptr, &cfg, &result) == EFZ_ERR_INVALID_ARG);
}

TEST_CASE("campaign lifecycle through opaque handles") {
  efz_campaign_config cfg;
  efz_campaign_config_default(&cfg);
  cfg.seed = 7;
  cfg.workers = 2;
  cfg.max_execs = 20000;
  cfg.run.seeded_bugs = EFZ_ALL_BUGS;

  efz_campaign* c = nullptr;
  REQUIRE(efz_campaign_new(&cfg, &c) == EFZ_OK);
  REQUIRE(c != nullptr);

  uint64_t ran = 0;
  REQUIRE(efz_campaign_run(c, 5000, &ran) == EFZ_OK);
  CHECK(ran == 5000);
  REQUIRE(efz_campaign_run(c, 1u << 30, &ran) == EFZ_OK);
  CHECK(ran == 15000);

  efz_campaign_stats stats;
  REQUIRE(efz_campaign_stats_get(c, &stats) == EFZ_OK);
  CHECK(stats.execs == 20000);
  CHECK(stats.distinct_edges > 0);
  CHECK(stats.corpus_size > 0);

  fs::path dir = fs::temp_directory_path() / "entryfuzz-capi-test";
  fs::remove_all(dir);
  REQUIRE(efz_campaign_write_outputs(c, dir.string().c_str()) == EFZ_OK);
  CHECK(fs::exists(dir / "campaign.json"));
  CHECK(fs::exists(dir / "coverage.csv"));
  efz_campaign_free(c);

  // Reproduce the first stored anomaly, if the short run found one.
  for (const auto& entry : fs::directory_iterator(dir / "anomalies")) {
    if (entry.path().extension() != ".json") continue;
    int reproduced = 0;
    char message[256];
    REQUIRE(efz_reproduce(entry.path().string().c_str(), &reproduced,
                          message, sizeof message) == EFZ_OK);
    CHECK(reproduced == 1);
    break;
  }
  fs::remove_all(dir);

  efz_campaign_config bad = cfg;
  bad.max_execs = 0;
  bad.max_seconds = 0;
  efz_campaign* c2 = nullptr;
  CHECK(efz_campaign_new(&bad, &c2) == EFZ_ERR_INVALID_ARG);
}

TEST_CASE("reproduce reports missing records as errors") {
  int reproduced = 0;
  CHECK(efz_reproduce("/nonexistent/record.json", &reproduced, nullptr,
                      0) == EFZ_ERR_PARSE);
}

TEST_CASE("hamming experiment summary crosses the C boundary") {
  efz_hamming_summary s;
  REQUIRE(efz_hamming_experiment(200, 42, nullptr, &s) == EFZ_OK);
  CHECK(s.random_vs_rounded_mean > s.rounded_pairwise_mean);
  CHECK(s.rounded_pairwise_mean > 0);
  CHECK(s.default_vs_rounded_mean < s.random_vs_rounded_mean);
  CHECK(efz_hamming_experiment(1, 1, nullptr, &s) == EFZ_ERR_INVALID_ARG);
}
