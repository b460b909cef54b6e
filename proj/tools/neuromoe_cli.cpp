// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "neuromoe/neuromoe.h"

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kValidation = 3,
  kNumeric = 4,
  kIo = 5,
};

int exit_code(nmoe_status s) {
  switch (s) {
    case NMOE_OK: return kOk;
    case NMOE_E_ARGUMENT: return kUsage;
    case NMOE_E_DIMENSION:
    case NMOE_E_VALIDATION:
    case NMOE_E_CONTRACT:
    case NMOE_E_FORMAT:
    case NMOE_E_CHECKSUM:
    case NMOE_E_CONFIG_MISMATCH: return kValidation;
    case NMOE_E_NUMERIC: return kNumeric;
    case NMOE_E_IO: return kIo;
    case NMOE_E_INTERNAL: break;
  }
  return kInternal;
}

struct Failure {
  nmoe_status status;
};

void check(nmoe_status s) {
  if (s != NMOE_OK) throw Failure{s};
}

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string mode, drop;
  std::optional<double> lambda;
  std::string data, out, checkpoint;
  std::vector<std::string> configs;
  bool quiet = false;
};

struct Config {
  nmoe_config* p = nullptr;
  ~Config() { nmoe_config_destroy(p); }
};

struct Dataset {
  nmoe_dataset* p = nullptr;
  ~Dataset() { nmoe_dataset_destroy(p); }
};

void set(nmoe_config* cfg, const std::string& key, const std::string& value) {
  check(nmoe_config_set(cfg, key.c_str(), value.c_str()));
}

void build_config(Config& cfg, const Options& o, const char* seed_key) {
  check(nmoe_config_create(&cfg.p));
  if (!o.config_file.empty()) check(nmoe_config_load_file(cfg.p, o.config_file.c_str()));
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      throw Failure{NMOE_E_ARGUMENT};
    }
    set(cfg.p, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) set(cfg.p, seed_key, std::to_string(*o.seed));
  if (!o.mode.empty()) set(cfg.p, "mode", o.mode);
  if (!o.drop.empty()) set(cfg.p, "drop", o.drop);
  if (o.lambda) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *o.lambda);
    set(cfg.p, "lambda", buf);
  }
  check(nmoe_config_validate(cfg.p));
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

void on_epoch(void* user, const nmoe_epoch* e) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr,
               "epoch %3zu  lr %.6f  loss %.4f  ce %.4f  balance %.5f  train_acc %.3f  "
               "test_acc %.3f\n",
               e->epoch, e->lr, e->train_loss, e->train_ce, e->train_balance,
               e->train_accuracy, e->test_accuracy);
}

void on_run(void* user, const char* config, std::uint64_t seed, const nmoe_metrics* m) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "%-20s seed %-6llu accuracy %.4f  macro F1 %.4f\n", config,
               static_cast<unsigned long long>(seed), m->accuracy, m->f1_macro);
}

int gen_data(const Options& o) {
  Config cfg;
  build_config(cfg, o, "cohort_seed");
  std::size_t n = 0;
  check(nmoe_generate_file(cfg.p, o.out.c_str(), &n));
  std::printf("wrote %zu subjects to %s\n", n, o.out.c_str());
  return kOk;
}

void load(Dataset& ds, const Options& o) { check(nmoe_dataset_load(o.data.c_str(), &ds.p)); }

int train(const Options& o) {
  Config cfg;
  build_config(cfg, o, "seed");
  Dataset ds;
  load(ds, o);
  bool quiet = o.quiet;
  nmoe_train_result r{};
  check(nmoe_train(cfg.p, ds.p, o.out.c_str(), on_epoch, &quiet, &r));
  print_file(o.out + "/summary.txt");
  return kOk;
}

int eval(const Options& o) {
  Config cfg;
  build_config(cfg, o, "seed");
  Dataset ds;
  load(ds, o);
  nmoe_metrics m{};
  check(nmoe_evaluate(cfg.p, ds.p, o.checkpoint.c_str(), o.out.empty() ? nullptr : o.out.c_str(),
                      &m));
  if (o.out.empty())
    std::printf("subjects: %zu\naccuracy: %.6f\nmacro F1: %.6f\nweighted F1: %.6f\n", m.n,
                m.accuracy, m.f1_macro, m.f1_weighted);
  else
    print_file(o.out + "/summary.txt");
  return kOk;
}

int ablate(const Options& o) {
  Config cfg;
  build_config(cfg, o, "seed");
  Dataset ds;
  load(ds, o);
  std::vector<const char*> names;
  for (const auto& c : o.configs) names.push_back(c.c_str());
  bool quiet = o.quiet;
  check(nmoe_ablate(cfg.p, ds.p, o.seeds.data(), o.seeds.size(),
                    names.empty() ? nullptr : names.data(), names.size(), o.out.c_str(), on_run,
                    &quiet));
  print_file(o.out + "/summary.txt");
  return kOk;
}

int report(const Options& o) {
  Config cfg;
  build_config(cfg, o, "seed");
  Dataset ds;
  load(ds, o);
  check(nmoe_report(cfg.p, ds.p, o.checkpoint.c_str(), o.out.c_str(), nullptr, 0, nullptr));
  print_file(o.out + "/summary.txt");
  return kOk;
}

void common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_file, "key=value file overriding defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Single key=value override (repeatable)");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

void model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode, "Gate mode")->check(CLI::IsMember({"gated", "uniform"}));
  cmd->add_option("--drop", o.drop, "Comma-separated experts to remove (amri,dti,fmri,clinical)");
  cmd->add_option("--lambda", o.lambda, "Balance regularizer weight");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NeuroMoE multimodal mixture-of-experts classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nmoe_version()));
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic cohort");
  common(gen, o);
  gen->add_option("--seed", o.seed, "Cohort seed");
  gen->add_option("--out", o.out, "Output dataset file")->required();

  auto* tr = app.add_subcommand("train", "Train one configuration and save the best checkpoint");
  common(tr, o);
  model_flags(tr, o);
  tr->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--seed", o.seed, "Split, initialization and training seed");
  tr->add_option("--out", o.out, "Output directory")->default_val("out");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint on the seed's test split");
  common(ev, o);
  model_flags(ev, o);
  ev->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--seed", o.seed, "Seed the checkpoint was trained with");
  ev->add_option("--out", o.out, "Output directory (optional)");

  auto* ab = app.add_subcommand("ablate", "Run the ablation matrix over several seeds");
  common(ab, o);
  ab->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
  ab->add_option("--seeds", o.seeds, "Comma-separated seeds")->delimiter(',');
  ab->add_option("--configs", o.configs, "Subset of configurations, comma-separated")
      ->delimiter(',');
  ab->add_option("--lambda", o.lambda, "Balance regularizer weight");
  ab->add_option("--out", o.out, "Output directory")->default_val("ablation");

  auto* rp = app.add_subcommand("report", "Expert-utilization report for a checkpoint");
  common(rp, o);
  model_flags(rp, o);
  rp->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
  rp->add_option("--checkpoint", o.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  rp->add_option("--seed", o.seed, "Seed the checkpoint was trained with");
  rp->add_option("--out", o.out, "Output directory")->default_val("report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_data(o);
    if (*tr) return train(o);
    if (*ev) return eval(o);
    if (*ab) return ablate(o);
    if (*rp) return report(o);
  } catch (const Failure& f) {
    if (f.status != NMOE_E_ARGUMENT || *nmoe_last_error())
      std::fprintf(stderr, "error (%s): %s\n", nmoe_status_name(f.status), nmoe_last_error());
    return exit_code(f.status);
  }
  return kUsage;
}
