// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/neuromoe.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "neuromoe/error.hpp"
#include "neuromoe/pipeline.hpp"

struct nmoe_config {
  neuromoe::RunConfig cfg;
};

struct nmoe_dataset {
  std::vector<neuromoe::SubjectRecord> records;
};

namespace {

thread_local std::string g_last_error;

nmoe_status status_of(neuromoe::ErrorKind kind) {
  using neuromoe::ErrorKind;
  switch (kind) {
    case ErrorKind::Dimension: return NMOE_E_DIMENSION;
    case ErrorKind::Validation: return NMOE_E_VALIDATION;
    case ErrorKind::Contract: return NMOE_E_CONTRACT;
    case ErrorKind::Format: return NMOE_E_FORMAT;
    case ErrorKind::Checksum: return NMOE_E_CHECKSUM;
    case ErrorKind::ConfigMismatch: return NMOE_E_CONFIG_MISMATCH;
    case ErrorKind::Io: return NMOE_E_IO;
    case ErrorKind::Numeric: return NMOE_E_NUMERIC;
  }
  return NMOE_E_INTERNAL;
}

nmoe_status fail(nmoe_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <typename F>
nmoe_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return NMOE_OK;
  } catch (const neuromoe::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NMOE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NMOE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(NMOE_E_INTERNAL, "unknown error");
  }
}

#define NMOE_REQUIRE(ptr)                                              \
  do {                                                                 \
    if (!(ptr)) return fail(NMOE_E_ARGUMENT, #ptr " must not be null"); \
  } while (0)

nmoe_metrics to_c(const neuromoe::Metrics& m) {
  nmoe_metrics out{};
  out.n = m.n;
  out.accuracy = m.accuracy;
  out.f1_macro = m.f1_macro;
  out.f1_weighted = m.f1_weighted;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) out.confusion[r][c] = m.confusion[r][c];
  out.any_undefined = m.any_undefined ? 1 : 0;
  return out;
}

}  // namespace

extern "C" {

const char* nmoe_version(void) { return "1.0.0"; }

const char* nmoe_status_name(nmoe_status status) {
  switch (status) {
    case NMOE_OK: return "ok";
    case NMOE_E_ARGUMENT: return "argument";
    case NMOE_E_DIMENSION: return "dimension";
    case NMOE_E_VALIDATION: return "validation";
    case NMOE_E_CONTRACT: return "contract";
    case NMOE_E_FORMAT: return "format";
    case NMOE_E_CHECKSUM: return "checksum";
    case NMOE_E_CONFIG_MISMATCH: return "config-mismatch";
    case NMOE_E_IO: return "io";
    case NMOE_E_NUMERIC: return "numeric";
    case NMOE_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* nmoe_last_error(void) { return g_last_error.c_str(); }

nmoe_status nmoe_config_create(nmoe_config** out) {
  NMOE_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new nmoe_config(); });
}

void nmoe_config_destroy(nmoe_config* cfg) { delete cfg; }

nmoe_status nmoe_config_set(nmoe_config* cfg, const char* key, const char* value) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(key);
  NMOE_REQUIRE(value);
  return guarded([&] { cfg->cfg.set(key, value); });
}

nmoe_status nmoe_config_load_file(nmoe_config* cfg, const char* path) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(path);
  return guarded([&] { cfg->cfg.load_file(path); });
}

nmoe_status nmoe_config_validate(const nmoe_config* cfg) {
  NMOE_REQUIRE(cfg);
  return guarded([&] { cfg->cfg.validate(); });
}

nmoe_status nmoe_config_to_text(const nmoe_config* cfg, char* buf, size_t cap, size_t* length) {
  NMOE_REQUIRE(cfg);
  if (cap > 0) NMOE_REQUIRE(buf);
  return guarded([&] {
    const std::string text = cfg->cfg.to_text();
    if (length) *length = text.size();
    if (cap == 0) return;
    const std::size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  });
}

nmoe_status nmoe_dataset_generate(const nmoe_config* cfg, nmoe_dataset** out) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto ds = std::make_unique<nmoe_dataset>();
    ds->records = neuromoe::generate_cohort(cfg->cfg.cohort);
    *out = ds.release();
  });
}

nmoe_status nmoe_dataset_load(const char* path, nmoe_dataset** out) {
  NMOE_REQUIRE(path);
  NMOE_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto ds = std::make_unique<nmoe_dataset>();
    ds->records = neuromoe::load_dataset(path);
    *out = ds.release();
  });
}

nmoe_status nmoe_dataset_save(const nmoe_dataset* ds, const char* path) {
  NMOE_REQUIRE(ds);
  NMOE_REQUIRE(path);
  return guarded([&] { neuromoe::save_dataset(ds->records, path); });
}

void nmoe_dataset_destroy(nmoe_dataset* ds) { delete ds; }

size_t nmoe_dataset_size(const nmoe_dataset* ds) { return ds ? ds->records.size() : 0; }

nmoe_status nmoe_dataset_subject(const nmoe_dataset* ds, size_t index, const char** subject_id,
                                 int* label) {
  NMOE_REQUIRE(ds);
  if (index >= ds->records.size())
    return fail(NMOE_E_ARGUMENT, "subject index " + std::to_string(index) + " out of range (" +
                                     std::to_string(ds->records.size()) + " subjects)");
  const auto& r = ds->records[index];
  if (subject_id) *subject_id = r.subject_id.c_str();
  if (label) *label = static_cast<int>(r.label);
  return NMOE_OK;
}

nmoe_status nmoe_generate_file(const nmoe_config* cfg, const char* path, size_t* subjects) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(path);
  return guarded([&] {
    const auto n = neuromoe::generate_dataset_file(cfg->cfg, path);
    if (subjects) *subjects = n;
  });
}

nmoe_status nmoe_train(const nmoe_config* cfg, const nmoe_dataset* ds, const char* out_dir,
                       nmoe_epoch_fn on_epoch, void* user, nmoe_train_result* result) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(ds);
  NMOE_REQUIRE(out_dir);
  return guarded([&] {
    neuromoe::EpochCallback cb;
    if (on_epoch)
      cb = [&](const neuromoe::EpochRecord& r) {
        const nmoe_epoch e{r.epoch,          r.lr,           r.train_loss,
                           r.train_ce,       r.train_balance, r.train_accuracy,
                           r.test_accuracy,  r.test_f1};
        on_epoch(user, &e);
      };
    const auto s = neuromoe::train_to_directory(cfg->cfg, ds->records, out_dir, cb);
    if (!result) return;
    const auto& h = s.result.training.history;
    result->test = to_c(s.result.evaluation.metrics);
    result->epochs = h.epochs.size();
    result->best_epoch = h.best_epoch;
    result->best_test_accuracy = h.best_test_accuracy;
    result->train_split_crc = s.train_hash;
    result->test_split_crc = s.test_hash;
  });
}

nmoe_status nmoe_evaluate(const nmoe_config* cfg, const nmoe_dataset* ds, const char* checkpoint,
                          const char* out_dir, nmoe_metrics* metrics) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(ds);
  NMOE_REQUIRE(checkpoint);
  return guarded([&] {
    const auto ev = neuromoe::evaluate_to_directory(cfg->cfg, ds->records, checkpoint,
                                                    out_dir ? out_dir : "");
    if (metrics) *metrics = to_c(ev.metrics);
  });
}

nmoe_status nmoe_ablate(const nmoe_config* cfg, const nmoe_dataset* ds, const uint64_t* seeds,
                        size_t num_seeds, const char* const* names, size_t num_names,
                        const char* out_dir, nmoe_ablation_fn on_run, void* user) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(ds);
  NMOE_REQUIRE(out_dir);
  if (num_seeds > 0) NMOE_REQUIRE(seeds);
  if (num_names > 0) NMOE_REQUIRE(names);
  return guarded([&] {
    std::vector<std::string> list;
    for (size_t i = 0; i < num_names; ++i) {
      if (!names[i]) throw neuromoe::ValidationError("configuration name must not be null");
      list.emplace_back(names[i]);
    }
    neuromoe::AblationProgress cb;
    if (on_run)
      cb = [&](const std::string& name, std::uint64_t seed, const neuromoe::AblationRun& run) {
        const nmoe_metrics m = to_c(run.metrics);
        on_run(user, name.c_str(), seed, &m);
      };
    neuromoe::ablate_to_directory(cfg->cfg, ds->records,
                                  std::span<const std::uint64_t>(seeds, num_seeds), list,
                                  out_dir, cb);
  });
}

nmoe_status nmoe_report(const nmoe_config* cfg, const nmoe_dataset* ds, const char* checkpoint,
                        const char* out_dir, double* means, size_t cap, size_t* num_experts) {
  NMOE_REQUIRE(cfg);
  NMOE_REQUIRE(ds);
  NMOE_REQUIRE(checkpoint);
  NMOE_REQUIRE(out_dir);
  if (cap > 0) NMOE_REQUIRE(means);
  return guarded([&] {
    const auto u = neuromoe::report_to_directory(cfg->cfg, ds->records, checkpoint, out_dir);
    if (num_experts) *num_experts = u.mean.size();
    for (size_t i = 0; i < std::min(cap, u.mean.size()); ++i) means[i] = u.mean[i];
  });
}

}  // extern "C"
