/* Copyright 2026 the entryfuzz authors. All rights reserved.
 * Use of this source code is governed by the Apache-2.0 license that can be
 * found in the LICENSE file.
 *
 * C API of the entryfuzz shared library. All functions return an
 * efz_status; results travel through out-parameters. Strings returned
 * through efz_*_json must be released with efz_string_free.
 */

#ifndef ENTRYFUZZ_H_
#define ENTRYFUZZ_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define EFZ_INPUT_SIZE 2048
#define EFZ_BUG_COUNT 6
#define EFZ_ALL_BUGS 0x3Fu

typedef enum efz_status {
  EFZ_OK = 0,
  EFZ_ERR_INVALID_ARG = 1,
  EFZ_ERR_IO = 2,
  EFZ_ERR_PARSE = 3,
  EFZ_ERR_INTERNAL = 4,
} efz_status;

const char* efz_status_str(efz_status s);
const char* efz_version(void);

/* ---- catalogs ---------------------------------------------------------- */

typedef enum efz_json_kind {
  EFZ_JSON_FIELD_CATALOG = 0,
  EFZ_JSON_CHECK_CATALOG = 1,
  EFZ_JSON_BUG_CATALOG = 2,
  EFZ_JSON_EDGE_TABLE = 3,
} efz_json_kind;

efz_status efz_dump_json(efz_json_kind kind, char** out);
void efz_string_free(char* s);

/* ---- one-shot execution ------------------------------------------------ */

typedef struct efz_run_config {
  uint32_t seeded_bugs; /* bit per bug ordinal, EFZ_ALL_BUGS for all */
  int silent_round;
  int harness_on;
  int validator_on;
  int configurator_on;
} efz_run_config;

void efz_run_config_default(efz_run_config* cfg);

typedef struct efz_run_result {
  int terminal;        /* 0 completed, 1 rejected, 2 crashed */
  int anomaly;         /* 0 none, 1 crash, 2 diagnostic pattern */
  char bug[48];        /* bug name when anomaly != 0 */
  uint64_t path_hash;
  uint32_t edges_hit;  /* distinct edges this execution */
} efz_run_result;

efz_status efz_run_one(const uint8_t* input /* EFZ_INPUT_SIZE bytes */,
                       const efz_run_config* cfg, efz_run_result* out);

/* ---- campaigns --------------------------------------------------------- */

typedef struct efz_campaign efz_campaign; /* opaque */

typedef struct efz_campaign_config {
  uint64_t seed;
  uint32_t workers;
  uint64_t max_execs;
  double max_seconds; /* 0 disables the wall-clock bound */
  int coverage_guided;
  efz_run_config run;
} efz_campaign_config;

typedef struct efz_campaign_stats {
  uint64_t execs;
  uint64_t distinct_edges;
  uint64_t corpus_size;
  uint64_t anomalies;
  uint64_t crashes_seen;
  uint64_t restarts;
  int64_t first_found_exec[EFZ_BUG_COUNT]; /* -1 when not found */
} efz_campaign_stats;

void efz_campaign_config_default(efz_campaign_config* cfg);

efz_status efz_campaign_new(const efz_campaign_config* cfg,
                            efz_campaign** out);
/* Runs up to `execs` further executions; *ran reports the actual count. */
efz_status efz_campaign_run(efz_campaign* c, uint64_t execs, uint64_t* ran);
efz_status efz_campaign_stats_get(const efz_campaign* c,
                                  efz_campaign_stats* out);
/* Writes corpus/, anomalies/, coverage.csv, coverage.bin, campaign.json. */
efz_status efz_campaign_write_outputs(const efz_campaign* c,
                                      const char* dir);
void efz_campaign_free(efz_campaign* c);

/* ---- reproduction ------------------------------------------------------ */

/* Re-runs a stored anomaly record (.json). *reproduced is 1 when the same
 * anomaly recurred. message_buf receives a human-readable verdict. */
efz_status efz_reproduce(const char* record_path, int* reproduced,
                         char* message_buf, size_t message_len);

/* ---- rounding-distance experiment -------------------------------------- */

typedef struct efz_hamming_summary {
  double random_vs_rounded_mean, random_vs_rounded_stddev;
  double default_vs_rounded_mean, default_vs_rounded_stddev;
  double rounded_pairwise_mean, rounded_pairwise_stddev;
} efz_hamming_summary;

/* csv_path may be NULL to skip the per-iteration dump. */
efz_status efz_hamming_experiment(uint32_t n, uint64_t seed,
                                  const char* csv_path,
                                  efz_hamming_summary* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ENTRYFUZZ_H_ */
