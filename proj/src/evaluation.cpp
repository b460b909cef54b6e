// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "neuromoe/error.hpp"

namespace neuromoe {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <typename T>
ExperimentResult run_typed(const PreparedSplit& data, const ModelConfig& cfg,
                           const TrainConfig& train_cfg, const EpochCallback& on_epoch) {
  const auto train_set = prepare_samples<T>(data.train, cfg);
  const auto test_set = prepare_samples<T>(data.test, cfg);
  ExperimentResult r;
  r.model = cfg;
  r.training = train<T>(train_set, test_set, cfg, train_cfg, on_epoch);
  NeuroMoE<T> model(cfg, train_cfg.seed);
  restore(model, r.training.best);
  r.evaluation = evaluate<T>(model, test_set);
  r.utilization = utilization_report<T>(model, test_set, train_cfg.lambda_balance);
  return r;
}

template <typename T>
Evaluation evaluate_typed(const PreparedSplit& data, const ModelConfig& cfg,
                          const Checkpoint& ckpt, UtilizationReport* util, double lambda) {
  const auto test_set = prepare_samples<T>(data.test, cfg);
  NeuroMoE<T> model(cfg, 0);
  restore(model, ckpt);
  if (util) *util = utilization_report<T>(model, test_set, lambda);
  return evaluate<T>(model, test_set);
}

}  // namespace

template <typename T>
Evaluation evaluate(const NeuroMoE<T>& model, std::span<const Sample<T>> samples) {
  if (samples.empty()) throw ValidationError("evaluate: empty test set");
  Evaluation e;
  e.predictions = model.predict(samples);
  e.metrics = compute_metrics(e.predictions.labels, e.predictions.predicted);
  return e;
}

template <typename T>
UtilizationReport utilization_report(const NeuroMoE<T>& model,
                                     std::span<const Sample<T>> samples, double lambda) {
  if (samples.empty()) throw ValidationError("utilization_report: empty record list");
  UtilizationReport u;
  for (auto e : model.active_experts()) u.experts.push_back(to_string(e));
  u.static_weights = model.config().mode == GateMode::Uniform;
  u.regularized = lambda > 0.0;
  const auto pred = model.predict(samples);
  u.rows = pred.gate;
  for (const auto& s : samples) u.subject_ids.push_back(s.subject_id);
  u.mean.assign(u.experts.size(), 0.0);
  for (const auto& row : u.rows)
    for (std::size_t e = 0; e < row.size(); ++e) u.mean[e] += row[e];
  for (auto& m : u.mean) m /= static_cast<double>(u.rows.size());
  if (u.static_weights)
    for (auto& m : u.mean) m = 1.0 / static_cast<double>(u.experts.size());
  return u;
}

std::string UtilizationReport::to_csv() const {
  std::string out = "subject";
  for (const auto& e : experts) out += "," + e;
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += subject_ids[i];
    for (double w : rows[i]) out += fmt(",%.6f", w);
    out += "\n";
  }
  out += "mean";
  for (double m : mean) out += fmt(",%.6f", m);
  out += "\n";
  return out;
}

std::string UtilizationReport::to_svg() const {
  const double width = 120.0 * static_cast<double>(experts.size()) + 80.0;
  const double height = 320.0, base = 270.0, top = 40.0;
  double peak = 0.0;
  for (double m : mean) peak = std::max(peak, m);
  const double scale = peak > 0.0 ? (base - top) / peak : 0.0;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", width) +
                  "\" height=\"" + fmt("%.0f", height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string title = "Average expert utilization";
  title += regularized ? " (with regularization)" : " (without regularization)";
  if (static_weights) title += " - static weights";
  s += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  s += "<line x1=\"40\" y1=\"" + fmt("%.0f", base) + "\" x2=\"" + fmt("%.0f", width - 20.0) +
       "\" y2=\"" + fmt("%.0f", base) + "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const double x = 60.0 + 120.0 * static_cast<double>(i);
    const double h = mean[i] * scale;
    s += "<rect x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.2f", base - h) +
         "\" width=\"80\" height=\"" + fmt("%.2f", h) + "\" fill=\"#4a78b5\"/>\n";
    s += "<text x=\"" + fmt("%.1f", x + 40.0) + "\" y=\"" + fmt("%.2f", base - h - 6.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         fmt("%.4f", mean[i]) + "</text>\n";
    s += "<text x=\"" + fmt("%.1f", x + 40.0) + "\" y=\"" + fmt("%.0f", base + 18.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + experts[i] +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

PreparedSplit prepare_split(std::span<const SubjectRecord> cohort, double train_fraction,
                            std::uint64_t seed) {
  PreparedSplit p;
  p.split = split_cohort(cohort, train_fraction, seed);
  const auto train_raw = select<SubjectRecord>(cohort, p.split.train);
  const auto test_raw = select<SubjectRecord>(cohort, p.split.test);
  p.stats = fit_preprocess(train_raw);
  p.train = apply_preprocess(train_raw, p.stats);
  p.test = apply_preprocess(test_raw, p.stats);
  p.train_hash = split_hash(cohort, p.split.train);
  p.test_hash = split_hash(cohort, p.split.test);
  return p;
}

ExperimentResult run_experiment(const PreparedSplit& data, ModelConfig model_cfg,
                                const TrainConfig& train_cfg, const EpochCallback& on_epoch) {
  model_cfg.feature_dim = data.stats.feature_dim();
  if (train_cfg.precision == Precision::F64)
    return run_typed<double>(data, model_cfg, train_cfg, on_epoch);
  return run_typed<float>(data, model_cfg, train_cfg, on_epoch);
}

Evaluation evaluate_checkpoint(const PreparedSplit& data, ModelConfig model_cfg,
                               Precision precision, const Checkpoint& ckpt,
                               UtilizationReport* utilization, double lambda) {
  model_cfg.feature_dim = data.stats.feature_dim();
  if (precision == Precision::F64)
    return evaluate_typed<double>(data, model_cfg, ckpt, utilization, lambda);
  return evaluate_typed<float>(data, model_cfg, ckpt, utilization, lambda);
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> kNames{"full",     "w/o gate", "w/o aMRI",
                                               "w/o DTI",  "w/o fMRI", "w/o serum/clinical"};
  return kNames;
}

ModelConfig ablation_config(const ModelConfig& base, const std::string& name) {
  ModelConfig c = base;
  c.mode = GateMode::Gated;
  c.active = {true, true, true, true};
  auto drop = [&](ExpertId e) { c.active[static_cast<std::size_t>(e)] = false; };
  if (name == "full") {
  } else if (name == "w/o gate") {
    c.mode = GateMode::Uniform;
  } else if (name == "w/o aMRI") {
    drop(ExpertId::Anatomical);
  } else if (name == "w/o DTI") {
    drop(ExpertId::Diffusion);
  } else if (name == "w/o fMRI") {
    drop(ExpertId::Functional);
  } else if (name == "w/o serum/clinical") {
    drop(ExpertId::Clinical);
  } else {
    throw ValidationError("unknown ablation configuration '" + name + "'");
  }
  return c;
}

std::pair<double, double> mean_sd(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<AblationResult> run_ablation(std::span<const SubjectRecord> cohort,
                                         const RunConfig& base,
                                         std::span<const std::uint64_t> seeds,
                                         const std::vector<std::string>& names,
                                         const AblationProgress& progress) {
  if (seeds.empty()) throw ValidationError("run_ablation: at least one seed is required");
  const auto& configs = names.empty() ? ablation_names() : names;
  std::vector<AblationResult> results;
  for (const auto& n : configs) {
    ablation_config(base.model, n);
    results.push_back({n, {}, 0, 0, 0, 0});
  }
  for (auto seed : seeds) {
    const PreparedSplit data = prepare_split(cohort, base.train_fraction, seed);
    for (auto& res : results) {
      TrainConfig tc = base.train;
      tc.seed = seed;
      const auto exp = run_experiment(data, ablation_config(base.model, res.name), tc);
      AblationRun run;
      run.seed = seed;
      run.metrics = exp.evaluation.metrics;
      run.train_hash = data.train_hash;
      run.test_hash = data.test_hash;
      run.best_epoch = exp.training.history.best_epoch;
      run.mean_gate = exp.utilization.mean;
      if (progress) progress(res.name, seed, run);
      res.runs.push_back(std::move(run));
    }
  }
  for (auto& res : results) {
    std::vector<double> acc, f1;
    for (const auto& r : res.runs) {
      acc.push_back(r.metrics.accuracy);
      f1.push_back(r.metrics.f1_macro);
    }
    std::tie(res.mean_accuracy, res.sd_accuracy) = mean_sd(acc);
    std::tie(res.mean_f1, res.sd_f1) = mean_sd(f1);
  }
  return results;
}

template Evaluation evaluate<float>(const NeuroMoE<float>&, std::span<const Sample<float>>);
template Evaluation evaluate<double>(const NeuroMoE<double>&, std::span<const Sample<double>>);
template UtilizationReport utilization_report<float>(const NeuroMoE<float>&,
                                                     std::span<const Sample<float>>, double);
template UtilizationReport utilization_report<double>(const NeuroMoE<double>&,
                                                      std::span<const Sample<double>>, double);

}  // namespace neuromoe
