// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "neuromoe/binary_io.hpp"
#include "neuromoe/error.hpp"
#include "neuromoe/run_config.hpp"

namespace neuromoe {

const char* to_string(Modality m) noexcept {
  switch (m) {
    case Modality::AMRI: return "amri";
    case Modality::DTI: return "dti";
    case Modality::FMRI: return "fmri";
  }
  return "?";
}

const char* to_string(ExpertId e) noexcept {
  switch (e) {
    case ExpertId::Functional: return "functional";
    case ExpertId::Anatomical: return "anatomical";
    case ExpertId::Diffusion: return "diffusion";
    case ExpertId::Clinical: return "clinical";
  }
  return "?";
}

Modality modality_of(ExpertId e) {
  switch (e) {
    case ExpertId::Functional: return Modality::FMRI;
    case ExpertId::Anatomical: return Modality::AMRI;
    case ExpertId::Diffusion: return Modality::DTI;
    case ExpertId::Clinical: break;
  }
  throw ContractError("the serum/clinical expert has no imaging modality");
}

std::size_t EncoderConfig::num_patches(Modality m) const {
  const auto& d = volume_shape(m);
  return (d[0] / patch_size) * (d[1] / patch_size) * (d[2] / patch_size);
}

void EncoderConfig::validate() const {
  if (patch_size == 0) throw ValidationError("patch_size must be positive");
  for (auto m : kModalities)
    for (std::size_t a = 0; a < 3; ++a) {
      const auto d = volume_shape(m)[a];
      if (d == 0 || d % patch_size != 0)
        throw ValidationError(std::string("volume_shape.") + to_string(m) + " axis " +
                              std::to_string(a) + " = " + std::to_string(d) +
                              " is not a positive multiple of patch_size " +
                              std::to_string(patch_size));
    }
  if (d_model == 0 || num_heads == 0 || d_model % num_heads != 0)
    throw ValidationError("d_model (" + std::to_string(d_model) +
                          ") must be divisible by num_heads (" + std::to_string(num_heads) + ")");
  if (num_layers == 0) throw ValidationError("num_layers must be at least 1");
  if (ffn_hidden == 0 || clinical_out == 0) throw ValidationError("layer widths must be positive");
  for (auto h : clinical_hidden)
    if (h == 0) throw ValidationError("clinical_hidden widths must be positive");
  if (!(clinical_dropout >= 0.0 && clinical_dropout < 1.0))
    throw ValidationError("clinical_dropout must lie in [0, 1)");
}

std::vector<ExpertId> ModelConfig::active_experts() const {
  std::vector<ExpertId> out;
  for (auto e : kExperts)
    if (is_active(e)) out.push_back(e);
  return out;
}

void ModelConfig::validate() const {
  encoder.validate();
  if (feature_dim == 0) throw ValidationError("feature_dim must be positive");
  if (num_classes < 2) throw ValidationError("num_classes must be at least 2");
  if (expert_hidden == 0) throw ValidationError("expert_hidden must be positive");
  for (auto h : gate_hidden)
    if (h == 0) throw ValidationError("gate_hidden widths must be positive");
  if (!(gate_dropout >= 0.0 && gate_dropout < 1.0))
    throw ValidationError("gate_dropout must lie in [0, 1)");
  if (active_experts().empty()) throw ValidationError("at least one expert must be active");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::string dims_str(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

std::string ModelConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["patch_size"] = std::to_string(encoder.patch_size);
  for (auto m : kModalities)
    kv[std::string("volume_shape.") + to_string(m)] = dims_str(encoder.volume_shape(m));
  kv["d_model"] = std::to_string(encoder.d_model);
  kv["num_heads"] = std::to_string(encoder.num_heads);
  kv["num_layers"] = std::to_string(encoder.num_layers);
  kv["ffn_hidden"] = std::to_string(encoder.ffn_hidden);
  kv["clinical_hidden"] = join(encoder.clinical_hidden);
  kv["clinical_out"] = std::to_string(encoder.clinical_out);
  kv["clinical_dropout"] = fmt_double(encoder.clinical_dropout);
  kv["temporal_collapse"] =
      encoder.temporal_collapse == TemporalCollapse::Mean ? "mean" : "first-frame";
  kv["feature_dim"] = std::to_string(feature_dim);
  kv["num_classes"] = std::to_string(num_classes);
  kv["expert_hidden"] = std::to_string(expert_hidden);
  kv["gate_hidden"] = join(gate_hidden);
  kv["gate_dropout"] = fmt_double(gate_dropout);
  kv["mode"] = mode == GateMode::Gated ? "gated" : "uniform";
  std::string experts;
  for (auto e : active_experts()) {
    if (!experts.empty()) experts += ',';
    experts += to_string(e);
  }
  kv["experts"] = experts;
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

std::string ModelConfig::fingerprint_hex() const {
  const auto digest = sha256(canonical_text());
  return to_hex(digest);
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  if (accumulation_steps == 0) throw ValidationError("accumulation_steps must be at least 1");
  if (epochs == 0) throw ValidationError("epochs must be at least 1");
  if (!(lr_init > lr_min && lr_min >= 0.0))
    throw ValidationError("learning rates must satisfy lr_init > lr_min >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  if (!(lambda_balance >= 0.0)) throw ValidationError("lambda must be nonnegative");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// RunConfig

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expect) {
  throw ValidationError("config key '" + std::string(key) + "': cannot parse '" +
                        std::string(value) + "' as " + expect);
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "an unsigned integer");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v, "a real number");
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(parse_size(key, part));
  return out;
}

Dims3 parse_dims(std::string_view key, std::string_view v) {
  const auto parts = split(v, 'x');
  if (parts.size() != 3) bad_value(key, v, "XxYxZ dimensions");
  return {parse_size(key, parts[0]), parse_size(key, parts[1]), parse_size(key, parts[2])};
}

std::size_t modality_index(std::string_view key, std::string_view name) {
  for (auto m : kModalities)
    if (name == to_string(m)) return static_cast<std::size_t>(m);
  throw ValidationError("config key '" + std::string(key) + "': unknown modality '" +
                        std::string(name) + "'");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto& enc = model.encoder;
  if (key == "volume_shape") {
    const auto d = parse_dims(key, value);
    for (auto m : kModalities) {
      enc.volume_shapes[static_cast<std::size_t>(m)] = d;
      cohort.volume_shapes[static_cast<std::size_t>(m)] = d;
    }
  } else if (key.starts_with("volume_shape.")) {
    const auto i = modality_index(key, key.substr(13));
    enc.volume_shapes[i] = cohort.volume_shapes[i] = parse_dims(key, value);
  } else if (key == "counts") {
    const auto c = parse_sizes(key, value);
    if (c.size() != kNumClasses) bad_value(key, value, "three class counts");
    for (std::size_t i = 0; i < kNumClasses; ++i) cohort.counts[i] = c[i];
  } else if (key == "missing_rate") {
    cohort.missing_rate = parse_double(key, value);
  } else if (key == "dti_frames") {
    cohort.dti_frames = parse_size(key, value);
  } else if (key == "fmri_frames") {
    cohort.fmri_frames = parse_size(key, value);
  } else if (key == "signal_scale") {
    cohort.signal_scale = parse_double(key, value);
  } else if (key == "noise_sd") {
    cohort.noise_sd = parse_double(key, value);
  } else if (key == "background_amplitude") {
    cohort.background_amplitude = parse_double(key, value);
  } else if (key == "cohort_seed") {
    cohort.seed = parse_u64(key, value);
  } else if (key == "patch_size") {
    enc.patch_size = parse_size(key, value);
  } else if (key == "d_model") {
    enc.d_model = parse_size(key, value);
  } else if (key == "num_heads") {
    enc.num_heads = parse_size(key, value);
  } else if (key == "num_layers") {
    enc.num_layers = parse_size(key, value);
  } else if (key == "ffn_hidden") {
    enc.ffn_hidden = parse_size(key, value);
  } else if (key == "clinical_hidden") {
    enc.clinical_hidden = parse_sizes(key, value);
  } else if (key == "clinical_out") {
    enc.clinical_out = parse_size(key, value);
  } else if (key == "clinical_dropout") {
    enc.clinical_dropout = parse_double(key, value);
  } else if (key == "temporal_collapse") {
    if (value == "mean") enc.temporal_collapse = TemporalCollapse::Mean;
    else if (value == "first-frame") enc.temporal_collapse = TemporalCollapse::FirstFrame;
    else bad_value(key, value, "mean|first-frame");
  } else if (key == "feature_dim") {
    model.feature_dim = parse_size(key, value);
  } else if (key == "expert_hidden") {
    model.expert_hidden = parse_size(key, value);
  } else if (key == "gate_hidden") {
    model.gate_hidden = parse_sizes(key, value);
  } else if (key == "gate_dropout") {
    model.gate_dropout = parse_double(key, value);
  } else if (key == "mode") {
    if (value == "gated") model.mode = GateMode::Gated;
    else if (value == "uniform") model.mode = GateMode::Uniform;
    else bad_value(key, value, "gated|uniform");
  } else if (key == "drop") {
    model.active = {true, true, true, true};
    if (value != "none" && !value.empty())
      for (const auto& name : split(value, ',')) {
        if (name == "amri") model.active[static_cast<std::size_t>(ExpertId::Anatomical)] = false;
        else if (name == "dti") model.active[static_cast<std::size_t>(ExpertId::Diffusion)] = false;
        else if (name == "fmri") model.active[static_cast<std::size_t>(ExpertId::Functional)] = false;
        else if (name == "clinical") model.active[static_cast<std::size_t>(ExpertId::Clinical)] = false;
        else bad_value(key, value, "a list of amri|dti|fmri|clinical");
      }
  } else if (key == "batch_size") {
    train.batch_size = parse_size(key, value);
  } else if (key == "accumulation_steps") {
    train.accumulation_steps = parse_size(key, value);
  } else if (key == "epochs") {
    train.epochs = parse_size(key, value);
  } else if (key == "lr_init") {
    train.lr_init = parse_double(key, value);
  } else if (key == "lr_min") {
    train.lr_min = parse_double(key, value);
  } else if (key == "beta1") {
    train.beta1 = parse_double(key, value);
  } else if (key == "beta2") {
    train.beta2 = parse_double(key, value);
  } else if (key == "adam_eps") {
    train.adam_eps = parse_double(key, value);
  } else if (key == "lambda") {
    train.lambda_balance = parse_double(key, value);
  } else if (key == "seed") {
    train.seed = parse_u64(key, value);
  } else if (key == "precision") {
    if (value == "f32") train.precision = Precision::F32;
    else if (value == "f64") train.precision = Precision::F64;
    else bad_value(key, value, "f32|f64");
  } else if (key == "train_fraction") {
    train_fraction = parse_double(key, value);
  } else {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::load_text(std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(std::string(source) + ":" + std::to_string(line_no) +
                            ": expected key=value");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  load_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
            path.string());
}

std::string RunConfig::to_text() const {
  const auto& enc = model.encoder;
  std::string t;
  auto put = [&](const std::string& k, const std::string& v) { t += k + "=" + v + "\n"; };
  put("counts", join({cohort.counts.begin(), cohort.counts.end()}));
  put("missing_rate", fmt_double(cohort.missing_rate));
  put("dti_frames", std::to_string(cohort.dti_frames));
  put("fmri_frames", std::to_string(cohort.fmri_frames));
  put("signal_scale", fmt_double(cohort.signal_scale));
  put("noise_sd", fmt_double(cohort.noise_sd));
  put("background_amplitude", fmt_double(cohort.background_amplitude));
  put("cohort_seed", std::to_string(cohort.seed));
  for (auto m : kModalities)
    put(std::string("volume_shape.") + to_string(m), dims_str(enc.volume_shape(m)));
  put("patch_size", std::to_string(enc.patch_size));
  put("d_model", std::to_string(enc.d_model));
  put("num_heads", std::to_string(enc.num_heads));
  put("num_layers", std::to_string(enc.num_layers));
  put("ffn_hidden", std::to_string(enc.ffn_hidden));
  put("clinical_hidden", join(enc.clinical_hidden));
  put("clinical_out", std::to_string(enc.clinical_out));
  put("clinical_dropout", fmt_double(enc.clinical_dropout));
  put("temporal_collapse", enc.temporal_collapse == TemporalCollapse::Mean ? "mean" : "first-frame");
  put("feature_dim", std::to_string(model.feature_dim));
  put("expert_hidden", std::to_string(model.expert_hidden));
  put("gate_hidden", join(model.gate_hidden));
  put("gate_dropout", fmt_double(model.gate_dropout));
  put("mode", model.mode == GateMode::Gated ? "gated" : "uniform");
  std::string dropped;
  for (auto e : kExperts)
    if (!model.is_active(e)) {
      if (!dropped.empty()) dropped += ',';
      dropped += e == ExpertId::Clinical ? "clinical" : to_string(modality_of(e));
    }
  put("drop", dropped.empty() ? "none" : dropped);
  put("batch_size", std::to_string(train.batch_size));
  put("accumulation_steps", std::to_string(train.accumulation_steps));
  put("epochs", std::to_string(train.epochs));
  put("lr_init", fmt_double(train.lr_init));
  put("lr_min", fmt_double(train.lr_min));
  put("beta1", fmt_double(train.beta1));
  put("beta2", fmt_double(train.beta2));
  put("adam_eps", fmt_double(train.adam_eps));
  put("lambda", fmt_double(train.lambda_balance));
  put("seed", std::to_string(train.seed));
  put("precision", train.precision == Precision::F64 ? "f64" : "f32");
  put("train_fraction", fmt_double(train_fraction));
  return t;
}

void RunConfig::validate() const {
  cohort.validate();
  model.validate();
  train.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must lie in (0, 1)");
  for (auto m : kModalities)
    if (cohort.volume_shapes[static_cast<std::size_t>(m)] != model.encoder.volume_shape(m))
      throw ValidationError(std::string("cohort and encoder volume shapes differ for ") +
                            to_string(m));
}

}  // namespace neuromoe
