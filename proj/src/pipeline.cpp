// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/pipeline.hpp"

#include <cstdio>

#include "neuromoe/binary_io.hpp"
#include "neuromoe/error.hpp"

namespace neuromoe {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

constexpr const char* kSelectionNote =
    "note: the checkpoint is the epoch with the highest test accuracy, so test metrics are "
    "an optimistic estimate.\n";

std::string metrics_block(const Metrics& m) {
  std::string s;
  s += "subjects: " + std::to_string(m.n) + "\n";
  s += "accuracy: " + fmt("%.6f", m.accuracy) + "\n";
  s += "macro F1: " + fmt("%.6f", m.f1_macro) + "\n";
  s += "weighted F1: " + fmt("%.6f", m.f1_weighted) + "\n";
  s += "class      precision  recall     f1         support\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& k = m.per_class[c];
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %-10.6f %-10.6f %-10.6f %zu%s\n",
                  to_string(static_cast<Label>(c)), k.precision, k.recall, k.f1, k.support,
                  k.undefined ? "  (undefined ratio set to 0)" : "");
    s += line;
  }
  s += "confusion (rows true, columns predicted):\n";
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    char line[96];
    std::snprintf(line, sizeof line, "  %-6s %5zu %5zu %5zu\n", to_string(static_cast<Label>(r)),
                  m.confusion[r][0], m.confusion[r][1], m.confusion[r][2]);
    s += line;
  }
  return s;
}

std::string utilization_line(const UtilizationReport& u) {
  std::string s = "expert utilization (mean gate weight on the test split):";
  for (std::size_t i = 0; i < u.experts.size(); ++i)
    s += " " + u.experts[i] + "=" + fmt("%.6f", u.mean[i]);
  if (u.static_weights) s += " (uniform mode: static weights)";
  return s + "\n";
}

std::string warnings_block(const PreprocessStats& stats) {
  std::string s;
  for (const auto& w : stats.warnings) s += "warning: " + w + "\n";
  return s;
}

std::string split_block(const PreparedSplit& data) {
  return "train subjects: " + std::to_string(data.train.size()) + " (split crc " +
         hex32(data.train_hash) + ")\n" + "test subjects: " + std::to_string(data.test.size()) +
         " (split crc " + hex32(data.test_hash) + ")\n";
}

void write_utilization(const fs::path& dir, const UtilizationReport& u) {
  write_text(dir / "utilization.csv", u.to_csv());
  write_text(dir / "utilization.svg", u.to_svg());
}

AblationResult single_run(const ModelConfig& cfg, std::uint64_t seed, const Metrics& m,
                          std::size_t best_epoch, const PreparedSplit& data) {
  AblationRun run;
  run.seed = seed;
  run.metrics = m;
  run.train_hash = data.train_hash;
  run.test_hash = data.test_hash;
  run.best_epoch = best_epoch;
  AblationResult r;
  r.name = config_label(cfg);
  r.mean_accuracy = m.accuracy;
  r.mean_f1 = m.f1_macro;
  r.runs.push_back(std::move(run));
  return r;
}

}  // namespace

std::string config_label(const ModelConfig& cfg) {
  for (const auto& name : ablation_names()) {
    const auto c = ablation_config(cfg, name);
    if (c.mode == cfg.mode && c.active == cfg.active) return name;
  }
  return "custom";
}

std::string metrics_csv(std::span<const AblationResult> results, bool with_best_epoch) {
  std::string s =
      "config,seed,n,accuracy,f1_macro,f1_weighted,best_epoch,train_split_crc,test_split_crc\n";
  for (const auto& res : results) {
    std::vector<double> acc, f1, f1w;
    for (const auto& r : res.runs) {
      const auto& m = r.metrics;
      s += res.name + "," + std::to_string(r.seed) + "," + std::to_string(m.n) + "," +
           fmt("%.6f", m.accuracy) + "," + fmt("%.6f", m.f1_macro) + "," +
           fmt("%.6f", m.f1_weighted) + "," +
           (with_best_epoch ? std::to_string(r.best_epoch) : std::string()) + "," +
           hex32(r.train_hash) + "," + hex32(r.test_hash) + "\n";
      acc.push_back(m.accuracy);
      f1.push_back(m.f1_macro);
      f1w.push_back(m.f1_weighted);
    }
    const auto a = mean_sd(acc), f = mean_sd(f1), w = mean_sd(f1w);
    s += res.name + ",mean,," + fmt("%.6f", a.first) + "," + fmt("%.6f", f.first) + "," +
         fmt("%.6f", w.first) + ",,,\n";
    s += res.name + ",sd,," + fmt("%.6f", a.second) + "," + fmt("%.6f", f.second) + "," +
         fmt("%.6f", w.second) + ",,,\n";
  }
  return s;
}

std::string history_csv(const TrainHistory& history, std::span<const std::string> experts) {
  std::string s =
      "epoch,lr,train_loss,train_ce,train_balance,train_accuracy,test_accuracy,test_f1";
  for (const auto& e : experts) s += ",gate_" + e;
  s += ",best\n";
  for (const auto& r : history.epochs) {
    s += std::to_string(r.epoch) + "," + fmt("%.9g", r.lr) + "," + fmt("%.9g", r.train_loss) +
         "," + fmt("%.9g", r.train_ce) + "," + fmt("%.9g", r.train_balance) + "," +
         fmt("%.6f", r.train_accuracy) + "," + fmt("%.6f", r.test_accuracy) + "," +
         fmt("%.6f", r.test_f1);
    for (double g : r.mean_gate) s += "," + fmt("%.6f", g);
    s += r.epoch == history.best_epoch ? ",1\n" : ",0\n";
  }
  return s;
}

std::string ablation_table(std::span<const AblationResult> results) {
  std::string s;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-10s %-10s %s\n", "configuration",
                "acc_mean", "acc_sd", "f1_mean", "f1_sd", "seeds");
  s += line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-20s %-10.6f %-10.6f %-10.6f %-10.6f %zu\n",
                  r.name.c_str(), r.mean_accuracy, r.sd_accuracy, r.mean_f1, r.sd_f1,
                  r.runs.size());
    s += line;
  }
  return s;
}

std::size_t generate_dataset_file(const RunConfig& cfg, const fs::path& out) {
  cfg.cohort.validate();
  const auto cohort = generate_cohort(cfg.cohort);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_dataset(cohort, out);
  return cohort.size();
}

TrainSummary train_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                const fs::path& out_dir, const EpochCallback& on_epoch) {
  cfg.validate();
  ensure_dir(out_dir);
  const PreparedSplit data = prepare_split(cohort, cfg.train_fraction, cfg.train.seed);
  TrainSummary out;
  out.result = run_experiment(data, cfg.model, cfg.train, on_epoch);
  out.train_hash = data.train_hash;
  out.test_hash = data.test_hash;
  const auto& r = out.result;
  const auto& h = r.training.history;

  save_checkpoint(r.training.best, out_dir / "best.nmck");
  write_text(out_dir / "run.cfg", cfg.to_text());
  const AblationResult row =
      single_run(r.model, cfg.train.seed, r.evaluation.metrics, h.best_epoch, data);
  write_text(out_dir / "metrics.csv", metrics_csv(std::span(&row, 1)));
  write_text(out_dir / "history.csv", history_csv(h, r.utilization.experts));
  write_utilization(out_dir, r.utilization);

  std::string s;
  s += "configuration: " + row.name + "\n";
  s += "seed: " + std::to_string(cfg.train.seed) + "\n";
  s += std::string("precision: ") + (cfg.train.precision == Precision::F64 ? "f64" : "f32") + "\n";
  s += "config fingerprint: " + r.model.fingerprint_hex() + "\n";
  s += split_block(data);
  s += "epochs: " + std::to_string(h.epochs.size()) + "\n";
  s += "best epoch: " + std::to_string(h.best_epoch) + " (test accuracy " +
       fmt("%.6f", h.best_test_accuracy) + ")\n";
  s += "test metrics of the saved checkpoint:\n" + metrics_block(r.evaluation.metrics);
  s += utilization_line(r.utilization);
  s += warnings_block(data.stats);
  s += kSelectionNote;
  write_text(out_dir / "summary.txt", s);
  return out;
}

Evaluation evaluate_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                 const fs::path& checkpoint, const fs::path& out_dir) {
  cfg.validate();
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const PreparedSplit data = prepare_split(cohort, cfg.train_fraction, cfg.train.seed);
  UtilizationReport util;
  Evaluation ev = evaluate_checkpoint(data, cfg.model, cfg.train.precision, ckpt, &util,
                                      cfg.train.lambda_balance);
  if (out_dir.empty()) return ev;
  ensure_dir(out_dir);
  const AblationResult row = single_run(cfg.model, cfg.train.seed, ev.metrics, 0, data);
  write_text(out_dir / "metrics.csv", metrics_csv(std::span(&row, 1), false));
  std::string s;
  s += "configuration: " + row.name + "\n";
  s += "checkpoint: " + checkpoint.filename().string() + "\n";
  s += "seed: " + std::to_string(cfg.train.seed) + "\n";
  s += split_block(data);
  s += metrics_block(ev.metrics);
  s += utilization_line(util);
  s += warnings_block(data.stats);
  write_text(out_dir / "summary.txt", s);
  return ev;
}

std::vector<AblationResult> ablate_to_directory(const RunConfig& cfg,
                                                std::span<const SubjectRecord> cohort,
                                                std::span<const std::uint64_t> seeds,
                                                const std::vector<std::string>& names,
                                                const fs::path& out_dir,
                                                const AblationProgress& progress) {
  cfg.validate();
  ensure_dir(out_dir);
  auto results = run_ablation(cohort, cfg, seeds, names, progress);
  write_text(out_dir / "metrics.csv", metrics_csv(results));
  std::string s = ablation_table(results);
  s += "shared splits:\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& ref = results.front().runs[i];
    bool shared = true;
    for (const auto& r : results)
      shared = shared && r.runs[i].train_hash == ref.train_hash &&
               r.runs[i].test_hash == ref.test_hash;
    s += "  seed " + std::to_string(seeds[i]) + ": train crc " + hex32(ref.train_hash) +
         ", test crc " + hex32(ref.test_hash) +
         (shared ? " (identical for every configuration)\n" : " (MISMATCH)\n");
  }
  s += kSelectionNote;
  write_text(out_dir / "summary.txt", s);
  return results;
}

UtilizationReport report_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                      const fs::path& checkpoint, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const PreparedSplit data = prepare_split(cohort, cfg.train_fraction, cfg.train.seed);
  UtilizationReport util;
  evaluate_checkpoint(data, cfg.model, cfg.train.precision, ckpt, &util, cfg.train.lambda_balance);
  write_utilization(out_dir, util);
  std::string s;
  s += "configuration: " + config_label(cfg.model) + "\n";
  s += "seed: " + std::to_string(cfg.train.seed) + "\n";
  s += split_block(data);
  s += utilization_line(util);
  s += std::string("trained with balance regularizer: ") + (util.regularized ? "yes" : "no") + "\n";
  write_text(out_dir / "summary.txt", s);
  return util;
}

}  // namespace neuromoe
