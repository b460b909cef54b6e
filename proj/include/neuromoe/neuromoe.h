/* Copyright 2026 The NeuroMoE Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef NEUROMOE_NEUROMOE_H_
#define NEUROMOE_NEUROMOE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NMOE_BUILDING_LIBRARY)
#define NMOE_API __attribute__((visibility("default")))
#else
#define NMOE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure a message is available
 * from nmoe_last_error() on the calling thread until its next failing call. */
typedef enum nmoe_status {
  NMOE_OK = 0,
  NMOE_E_ARGUMENT = 1,        /* null handle or pointer, bad index */
  NMOE_E_DIMENSION = 2,
  NMOE_E_VALIDATION = 3,
  NMOE_E_CONTRACT = 4,
  NMOE_E_FORMAT = 5,
  NMOE_E_CHECKSUM = 6,
  NMOE_E_CONFIG_MISMATCH = 7,
  NMOE_E_IO = 8,
  NMOE_E_NUMERIC = 9,
  NMOE_E_INTERNAL = 10
} nmoe_status;

typedef struct nmoe_config nmoe_config;
typedef struct nmoe_dataset nmoe_dataset;

typedef struct nmoe_metrics {
  size_t n;
  double accuracy;
  double f1_macro;
  double f1_weighted;
  size_t confusion[3][3]; /* rows true class (PD, iRBD, HC), columns predicted */
  int any_undefined;
} nmoe_metrics;

typedef struct nmoe_epoch {
  size_t epoch;
  double lr;
  double train_loss;
  double train_ce;
  double train_balance;
  double train_accuracy;
  double test_accuracy;
  double test_f1;
} nmoe_epoch;

typedef struct nmoe_train_result {
  nmoe_metrics test;           /* the saved checkpoint on the test split */
  size_t epochs;
  size_t best_epoch;
  double best_test_accuracy;
  uint32_t train_split_crc;
  uint32_t test_split_crc;
} nmoe_train_result;

typedef void (*nmoe_epoch_fn)(void* user, const nmoe_epoch* record);
typedef void (*nmoe_ablation_fn)(void* user, const char* config, uint64_t seed,
                                 const nmoe_metrics* metrics);

NMOE_API const char* nmoe_version(void);
NMOE_API const char* nmoe_status_name(nmoe_status status);
NMOE_API const char* nmoe_last_error(void);

/* Configuration: defaults, overridden by key=value settings. */
NMOE_API nmoe_status nmoe_config_create(nmoe_config** out);
NMOE_API void nmoe_config_destroy(nmoe_config* cfg);
NMOE_API nmoe_status nmoe_config_set(nmoe_config* cfg, const char* key, const char* value);
NMOE_API nmoe_status nmoe_config_load_file(nmoe_config* cfg, const char* path);
NMOE_API nmoe_status nmoe_config_validate(const nmoe_config* cfg);
/* Copies the full key=value text into buf (NUL-terminated, truncated to cap).
 * *length receives the untruncated length without the terminator. */
NMOE_API nmoe_status nmoe_config_to_text(const nmoe_config* cfg, char* buf, size_t cap,
                                         size_t* length);

/* Datasets. */
NMOE_API nmoe_status nmoe_dataset_generate(const nmoe_config* cfg, nmoe_dataset** out);
NMOE_API nmoe_status nmoe_dataset_load(const char* path, nmoe_dataset** out);
NMOE_API nmoe_status nmoe_dataset_save(const nmoe_dataset* ds, const char* path);
NMOE_API void nmoe_dataset_destroy(nmoe_dataset* ds);
NMOE_API size_t nmoe_dataset_size(const nmoe_dataset* ds);
/* label: 0 = PD, 1 = iRBD, 2 = HC. */
NMOE_API nmoe_status nmoe_dataset_subject(const nmoe_dataset* ds, size_t index,
                                          const char** subject_id, int* label);

/* Workflows. Each writes its artifacts into out_dir. */
NMOE_API nmoe_status nmoe_generate_file(const nmoe_config* cfg, const char* path,
                                        size_t* subjects);
NMOE_API nmoe_status nmoe_train(const nmoe_config* cfg, const nmoe_dataset* ds,
                                const char* out_dir, nmoe_epoch_fn on_epoch, void* user,
                                nmoe_train_result* result);
/* out_dir may be NULL to skip writing files. */
NMOE_API nmoe_status nmoe_evaluate(const nmoe_config* cfg, const nmoe_dataset* ds,
                                   const char* checkpoint, const char* out_dir,
                                   nmoe_metrics* metrics);
/* names == NULL runs all six configurations. */
NMOE_API nmoe_status nmoe_ablate(const nmoe_config* cfg, const nmoe_dataset* ds,
                                 const uint64_t* seeds, size_t num_seeds,
                                 const char* const* names, size_t num_names,
                                 const char* out_dir, nmoe_ablation_fn on_run, void* user);
/* Writes per-expert mean gate weights into means (up to cap entries). */
NMOE_API nmoe_status nmoe_report(const nmoe_config* cfg, const nmoe_dataset* ds,
                                 const char* checkpoint, const char* out_dir, double* means,
                                 size_t cap, size_t* num_experts);

#ifdef __cplusplus
}
#endif

#endif /* NEUROMOE_NEUROMOE_H_ */
