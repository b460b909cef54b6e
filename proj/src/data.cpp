// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>

#include "neuromoe/binary_io.hpp"
#include "neuromoe/error.hpp"
#include "neuromoe/rng.hpp"

namespace neuromoe {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'O', 'E'};
constexpr std::uint32_t kVersion = 1;

// Upper clip per clinical marker (index = ClinicalFeature); infinity = none.
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<double, kNumClinical> kClinicalMax{kInf, 1.0, 132.0, kInf, 5.0, 30.0, 40.0};

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

double draw_clipped(Rng& rng, const Moments& m, double hi) {
  if (m.sd == 0.0) return std::clamp(m.mean, 0.0, hi);
  return std::clamp(rng.normal(m.mean, m.sd), 0.0, hi);
}

// exp(-(t - c)^2 / (2 r^2)) sampled at voxel centers along one axis.
std::vector<double> axis_profile(std::size_t n, double center, double radius) {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n) - center;
    p[i] = std::exp(-t * t / (2.0 * radius * radius));
  }
  return p;
}

void add_bump(std::vector<double>& field, const Dims3& d, const std::array<double, 3>& c,
              double radius, double amplitude) {
  const auto px = axis_profile(d[0], c[0], radius);
  const auto py = axis_profile(d[1], c[1], radius);
  const auto pz = axis_profile(d[2], c[2], radius);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < d[0]; ++i)
    for (std::size_t j = 0; j < d[1]; ++j) {
      const double a = amplitude * px[i] * py[j];
      for (std::size_t k = 0; k < d[2]; ++k) field[idx++] += a * pz[k];
    }
}

Tensor<double> synth_volume(const CohortSpec& spec, Modality m, Label label, Rng rng,
                            std::size_t frames) {
  const Dims3& d = spec.volume_shapes[static_cast<std::size_t>(m)];
  const std::size_t voxels = d[0] * d[1] * d[2];
  std::vector<double> base(voxels, 0.0);
  for (std::size_t b = 0; b < spec.background_bumps; ++b) {
    std::array<double, 3> c{rng.uniform(), rng.uniform(), rng.uniform()};
    add_bump(base, d, c, 0.25, rng.normal(0.0, spec.background_amplitude));
  }
  const BlobSignal& blob =
      spec.blobs[static_cast<std::size_t>(label)][static_cast<std::size_t>(m)];
  std::array<double, 3> c = blob.center;
  for (auto& v : c) v += rng.normal(0.0, spec.center_jitter);
  const double amp = spec.signal_scale * blob.amplitude * (1.0 + 0.1 * rng.normal());
  add_bump(base, d, c, blob.radius, amp);

  Shape shape = frames == 0 ? Shape{d[0], d[1], d[2]} : Shape{frames, d[0], d[1], d[2]};
  Tensor<double> out(shape);
  const std::size_t nf = std::max<std::size_t>(frames, 1);
  for (std::size_t f = 0; f < nf; ++f) {
    double* dst = out.data() + f * voxels;
    for (std::size_t i = 0; i < voxels; ++i)
      dst[i] = quantize(base[i] + rng.normal(0.0, spec.noise_sd));
  }
  return out;
}

FeatureStats fit_feature(const std::vector<double>& observed, const std::string& name,
                         std::vector<std::string>& warnings) {
  if (observed.empty())
    throw ValidationError("feature '" + name + "' is missing in every training subject");
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  double var = 0.0;
  for (double v : observed) var += (v - mean) * (v - mean);
  var /= static_cast<double>(observed.size());
  FeatureStats s{mean, std::sqrt(var), false};
  if (s.sd < kSdGuard) {
    s.sd = 1.0;
    s.sd_guarded = true;
    warnings.push_back("feature '" + name + "' is constant on the training split; SD set to 1");
  }
  return s;
}

void write_tensor(ByteWriter& w, const Tensor<double>& t, const std::string& what) {
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw ValidationError(what + " contains a non-finite voxel");
    w.f32(static_cast<float>(v));
  }
}

Tensor<double> read_tensor(ByteReader& r) {
  const std::size_t at = r.offset();
  const std::uint8_t rank = r.u8();
  if (rank < 3 || rank > 4)
    throw FormatError("volume rank " + std::to_string(rank) + " is not 3 or 4", at);
  Shape shape(rank);
  std::size_t n = 1;
  for (auto& d : shape) {
    const std::size_t dat = r.offset();
    d = r.u32();
    if (d == 0) throw FormatError("zero volume dimension", dat);
    n *= d;
    if (n > r.remaining() / 4) throw FormatError("volume payload exceeds file size", dat);
  }
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = r.f32();
  return t;
}

template <std::size_t N>
void write_markers(ByteWriter& w, const std::array<double, N>& values, const char* what) {
  w.u8(static_cast<std::uint8_t>(N));
  std::array<std::uint8_t, (N + 7) / 8> bitmap{};
  for (std::size_t i = 0; i < N; ++i) {
    if (is_missing(values[i])) {
      bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      w.f32(0.0f);
    } else {
      if (!std::isfinite(values[i]))
        throw ValidationError(std::string(what) + " marker " + std::to_string(i) +
                              " is infinite");
      w.f32(static_cast<float>(values[i]));
    }
  }
  for (auto b : bitmap) w.u8(b);
}

template <std::size_t N>
std::array<double, N> read_markers(ByteReader& r, const char* what) {
  const std::size_t at = r.offset();
  const std::uint8_t count = r.u8();
  if (count != N)
    throw FormatError(std::string(what) + " block has " + std::to_string(count) +
                          " values, expected " + std::to_string(N),
                      at);
  std::array<double, N> v{};
  for (auto& x : v) x = r.f32();
  for (std::size_t byte = 0; byte < (N + 7) / 8; ++byte) {
    const std::uint8_t bits = r.u8();
    for (std::size_t bit = 0; bit < 8; ++bit) {
      const std::size_t i = byte * 8 + bit;
      if (!(bits & (1u << bit))) continue;
      if (i >= N) throw FormatError("missing bitmap has bits past the value count", r.offset() - 1);
      v[i] = kMissing;
    }
  }
  return v;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_tensor(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

}  // namespace

const char* to_string(Label l) noexcept {
  switch (l) {
    case Label::PD: return "PD";
    case Label::iRBD: return "iRBD";
    case Label::HC: return "HC";
  }
  return "?";
}

const char* clinical_name(std::size_t index) noexcept {
  static constexpr const char* kNames[kNumClinical] = {
      "disease_duration", "psg", "updrs3", "tug", "hoehn_yahr", "moca", "upsit"};
  return index < kNumClinical ? kNames[index] : "?";
}

const char* serum_name(std::size_t index) noexcept {
  static constexpr const char* kNames[kNumSerum] = {"vitamin_d", "uric_acid", "ifn_gamma"};
  return index < kNumSerum ? kNames[index] : "?";
}

const Tensor<double>& SubjectRecord::volume(Modality m) const {
  switch (m) {
    case Modality::AMRI: return amri;
    case Modality::DTI: return dti;
    case Modality::FMRI: return fmri;
  }
  return amri;
}

const Tensor<double>& NormalizedRecord::volume(Modality m) const {
  switch (m) {
    case Modality::AMRI: return amri;
    case Modality::DTI: return dti;
    case Modality::FMRI: return fmri;
  }
  return amri;
}

bool bitwise_equal(const SubjectRecord& a, const SubjectRecord& b) {
  if (a.subject_id != b.subject_id || a.label != b.label) return false;
  if (!same_tensor(a.amri, b.amri) || !same_tensor(a.dti, b.dti) || !same_tensor(a.fmri, b.fmri))
    return false;
  for (std::size_t i = 0; i < kNumClinical; ++i)
    if (!same_bits(a.clinical[i], b.clinical[i])) return false;
  for (std::size_t i = 0; i < kNumSerum; ++i)
    if (!same_bits(a.serum[i], b.serum[i])) return false;
  return true;
}

std::array<ClassBiomarkers, kNumClasses> CohortSpec::default_biomarkers() {
  using CF = ClinicalFeature;
  std::array<ClassBiomarkers, kNumClasses> t{};
  auto set = [&](Label l, CF f, double mean, double sd) {
    t[static_cast<std::size_t>(l)].clinical[static_cast<std::size_t>(f)] = {mean, sd};
  };
  auto serum = [&](Label l, double vd, double vd_sd, double ua, double ua_sd, double ifn,
                   double ifn_sd) {
    auto& s = t[static_cast<std::size_t>(l)].serum;
    s[0] = {vd, vd_sd};
    s[1] = {ua, ua_sd};
    s[2] = {ifn, ifn_sd};
  };
  set(Label::PD, CF::DiseaseDuration, 6.11, 3.41);
  set(Label::PD, CF::UPDRS3, 29.75, 15.17);
  set(Label::PD, CF::TUG, 18.93, 14.61);
  set(Label::PD, CF::HoehnYahr, 1.73, 0.72);
  set(Label::PD, CF::MoCA, 27.75, 2.83);
  set(Label::PD, CF::UPSIT, 21.59, 7.24);
  t[0].psg_positive = 23.0 / 41.0;
  serum(Label::PD, 35.68, 14.39, 4.34, 0.99, 27.74, 54.11);

  set(Label::iRBD, CF::DiseaseDuration, 6.45, 3.12);
  set(Label::iRBD, CF::UPDRS3, 63.90, 20.35);
  set(Label::iRBD, CF::TUG, 21.95, 2.28);
  set(Label::iRBD, CF::HoehnYahr, 0.0, 0.0);
  set(Label::iRBD, CF::MoCA, 18.60, 7.96);
  set(Label::iRBD, CF::UPSIT, 15.40, 2.61);
  t[1].psg_positive = 42.0 / 44.0;
  serum(Label::iRBD, 33.38, 7.54, 4.50, 0.34, 4.21, 4.00);

  set(Label::HC, CF::DiseaseDuration, 0.0, 0.0);
  set(Label::HC, CF::UPDRS3, 2.81, 3.11);
  set(Label::HC, CF::TUG, 14.23, 1.97);
  set(Label::HC, CF::HoehnYahr, 0.0, 0.0);
  set(Label::HC, CF::MoCA, 28.54, 1.97);
  set(Label::HC, CF::UPSIT, 35.30, 4.51);
  t[2].psg_positive = 0.0;
  serum(Label::HC, 36.61, 15.41, 4.80, 1.34, 33.01, 58.63);
  return t;
}

std::array<std::array<BlobSignal, 3>, kNumClasses> CohortSpec::default_blobs() {
  // [class][modality = amri, dti, fmri]
  return {{
      {{{{0.3, 0.5, 0.5}, 0.15, 1.5}, {{0.5, 0.7, 0.3}, 0.15, 1.2}, {{0.6, 0.5, 0.7}, 0.15, 1.0}}},
      {{{{0.5, 0.3, 0.6}, 0.15, 1.2}, {{0.3, 0.4, 0.7}, 0.15, 1.5}, {{0.4, 0.6, 0.3}, 0.15, 1.3}}},
      {{{{0.7, 0.6, 0.4}, 0.15, 0.9}, {{0.6, 0.3, 0.5}, 0.15, 1.0}, {{0.5, 0.4, 0.5}, 0.15, 1.6}}},
  }};
}

void CohortSpec::validate() const {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0)
      throw ValidationError(std::string("cohort count for ") + to_string(static_cast<Label>(c)) +
                            " must be positive");
    for (const auto& m : biomarkers[c].clinical)
      if (!(m.sd >= 0.0) || !std::isfinite(m.mean))
        throw ValidationError("cohort biomarker moments must be finite with SD >= 0");
    for (const auto& m : biomarkers[c].serum)
      if (!(m.sd >= 0.0) || !std::isfinite(m.mean))
        throw ValidationError("cohort biomarker moments must be finite with SD >= 0");
    if (!(biomarkers[c].psg_positive >= 0.0 && biomarkers[c].psg_positive <= 1.0))
      throw ValidationError("PSG positive fraction must lie in [0, 1]");
    for (const auto& b : blobs[c])
      if (!(b.radius > 0.0) || !std::isfinite(b.amplitude))
        throw ValidationError("blob radius must be positive and amplitude finite");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0))
    throw ValidationError("missing_rate must lie in [0, 1)");
  for (const auto& d : volume_shapes)
    if (d[0] == 0 || d[1] == 0 || d[2] == 0)
      throw ValidationError("volume dimensions must be positive");
  if (dti_frames == 0 || fmri_frames == 0)
    throw ValidationError("dti_frames and fmri_frames must be at least 1");
  if (!(noise_sd >= 0.0) || !(background_amplitude >= 0.0) || !(center_jitter >= 0.0) ||
      !std::isfinite(signal_scale))
    throw ValidationError("noise_sd, background_amplitude and center_jitter must be >= 0");
}

SubjectRecord generate_subject(const CohortSpec& spec, Label label, std::size_t class_index,
                               std::size_t global_index) {
  const auto c = static_cast<std::size_t>(label);
  const Rng subject = Rng(spec.seed).derive(global_index);
  SubjectRecord r;
  char id[32];
  std::snprintf(id, sizeof id, "%s-%03zu", to_string(label), class_index + 1);
  r.subject_id = id;
  r.label = label;

  Rng markers = subject.derive("markers");
  const auto& bio = spec.biomarkers[c];
  for (std::size_t i = 0; i < kNumClinical; ++i) {
    if (i == static_cast<std::size_t>(ClinicalFeature::PSG))
      r.clinical[i] = markers.bernoulli(bio.psg_positive) ? 1.0 : 0.0;
    else
      r.clinical[i] = quantize(draw_clipped(markers, bio.clinical[i], kClinicalMax[i]));
  }
  for (std::size_t i = 0; i < kNumSerum; ++i)
    r.serum[i] = quantize(draw_clipped(markers, bio.serum[i], kInf));

  Rng mask = subject.derive("missing");
  for (auto& v : r.clinical)
    if (mask.bernoulli(spec.missing_rate)) v = kMissing;
  for (auto& v : r.serum)
    if (mask.bernoulli(spec.missing_rate)) v = kMissing;

  r.amri = synth_volume(spec, Modality::AMRI, label, subject.derive("amri"), 0);
  r.dti = synth_volume(spec, Modality::DTI, label, subject.derive("dti"), spec.dti_frames);
  r.fmri = synth_volume(spec, Modality::FMRI, label, subject.derive("fmri"), spec.fmri_frames);
  return r;
}

std::vector<SubjectRecord> generate_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<SubjectRecord> out;
  out.reserve(spec.total());
  std::size_t global = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (std::size_t i = 0; i < spec.counts[c]; ++i)
      out.push_back(generate_subject(spec, static_cast<Label>(c), i, global++));
  return out;
}

PreprocessStats fit_preprocess(std::span<const SubjectRecord> train) {
  if (train.empty()) throw ValidationError("cannot fit preprocessing on an empty training set");
  PreprocessStats s;
  constexpr auto kPsg = static_cast<std::size_t>(ClinicalFeature::PSG);
  for (std::size_t i = 0; i < kNumClinical; ++i) {
    if (i == kPsg) continue;
    std::vector<double> obs;
    for (const auto& r : train)
      if (!is_missing(r.clinical[i])) obs.push_back(r.clinical[i]);
    s.clinical[i] = fit_feature(obs, clinical_name(i), s.warnings);
  }
  for (std::size_t i = 0; i < kNumSerum; ++i) {
    std::vector<double> obs;
    for (const auto& r : train)
      if (!is_missing(r.serum[i])) obs.push_back(r.serum[i]);
    s.serum[i] = fit_feature(obs, serum_name(i), s.warnings);
  }
  std::map<int, std::size_t> freq;
  for (const auto& r : train) {
    const double v = r.clinical[kPsg];
    if (is_missing(v)) continue;
    if (v != std::round(v))
      throw ValidationError("PSG value " + std::to_string(v) + " in " + r.subject_id +
                            " is not a category");
    ++freq[static_cast<int>(v)];
  }
  if (freq.empty()) throw ValidationError("feature 'psg' is missing in every training subject");
  std::size_t best = 0;
  for (const auto& [cat, n] : freq) {
    s.psg_categories.push_back(cat);
    if (n > best) {
      best = n;
      s.psg_impute = cat;
    }
  }
  return s;
}

Tensor<double> zscore_volume(const Tensor<double>& volume) {
  const double n = static_cast<double>(volume.size());
  double mean = 0.0;
  for (double v : volume.values()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : volume.values()) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / n);
  if (sd < kSdGuard) sd = 1.0;
  Tensor<double> out(volume.shape());
  for (std::size_t i = 0; i < volume.size(); ++i) out[i] = (volume[i] - mean) / sd;
  return out;
}

NormalizedRecord apply_preprocess(const SubjectRecord& record, const PreprocessStats& stats) {
  if (!stats.fitted()) throw ContractError("apply_preprocess: stats have not been fitted");
  constexpr auto kPsg = static_cast<std::size_t>(ClinicalFeature::PSG);
  NormalizedRecord n;
  n.subject_id = record.subject_id;
  n.label = record.label;
  n.features.reserve(stats.feature_dim());
  auto z = [](double v, const FeatureStats& fs) {
    return is_missing(v) ? 0.0 : (v - fs.mean) / fs.sd;
  };
  for (std::size_t i = 0; i < kNumClinical; ++i)
    if (i != kPsg) n.features.push_back(z(record.clinical[i], stats.clinical[i]));

  const double psg = record.clinical[kPsg];
  const int cat = is_missing(psg) ? stats.psg_impute : static_cast<int>(psg);
  auto it = std::find(stats.psg_categories.begin(), stats.psg_categories.end(), cat);
  if (it == stats.psg_categories.end() || (!is_missing(psg) && psg != std::round(psg))) {
    std::string known;
    for (auto c : stats.psg_categories) known += (known.empty() ? "" : ", ") + std::to_string(c);
    throw ValidationError("subject " + record.subject_id + ": PSG value " + std::to_string(psg) +
                          " is not a known category {" + known + "}");
  }
  for (auto c : stats.psg_categories) n.features.push_back(c == cat ? 1.0 : 0.0);
  for (std::size_t i = 0; i < kNumSerum; ++i) n.features.push_back(z(record.serum[i], stats.serum[i]));

  n.amri = zscore_volume(record.amri);
  n.dti = zscore_volume(record.dti);
  n.fmri = zscore_volume(record.fmri);
  return n;
}

std::vector<NormalizedRecord> apply_preprocess(std::span<const SubjectRecord> records,
                                               const PreprocessStats& stats) {
  std::vector<NormalizedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(apply_preprocess(r, stats));
  return out;
}

CohortSplit split_cohort(std::span<const SubjectRecord> records, double train_fraction,
                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must lie strictly between 0 and 1");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < records.size(); ++i)
    by_class[static_cast<std::size_t>(records[i].label)].push_back(i);
  const Rng root = Rng(seed).derive("split");
  CohortSplit s;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2)
      throw ValidationError(std::string("class ") + to_string(static_cast<Label>(c)) +
                            " has fewer than 2 subjects; cannot split");
    Rng rng = root.derive(c);
    rng.shuffle(idx);
    const auto n = static_cast<long>(idx.size());
    const long k = std::clamp(std::lround(train_fraction * static_cast<double>(n)), 1L, n - 1);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + k);
    s.test.insert(s.test.end(), idx.begin() + k, idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::uint32_t split_hash(std::span<const SubjectRecord> records,
                         std::span<const std::size_t> indices) {
  std::string ids;
  for (auto i : indices) {
    ids += records[i].subject_id;
    ids += '\n';
  }
  return crc32(std::span(reinterpret_cast<const std::uint8_t*>(ids.data()), ids.size()));
}

std::vector<std::uint8_t> encode_dataset(std::span<const SubjectRecord> records) {
  ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.subject_id.size() > 0xFFFF) throw ValidationError("subject id too long");
    const std::size_t start = w.size();
    w.u16(static_cast<std::uint16_t>(r.subject_id.size()));
    w.str(r.subject_id);
    w.u8(static_cast<std::uint8_t>(r.label));
    for (auto m : kModalities) write_tensor(w, r.volume(m), r.subject_id);
    write_markers(w, r.clinical, "clinical");
    write_markers(w, r.serum, "serum");
    const auto& buf = w.buffer();
    w.u32(crc32(std::span(buf.data() + start, buf.size() - start)));
  }
  w.u32(crc32(w.buffer()));
  return w.take();
}

std::vector<SubjectRecord> decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.str(4) != std::string_view(kMagic, 4)) throw FormatError("bad magic, not an NMOE dataset", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32();
  std::vector<SubjectRecord> out;
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::size_t start = r.offset();
    SubjectRecord rec;
    rec.subject_id = r.str(r.u16());
    const std::size_t label_at = r.offset();
    const std::uint8_t label = r.u8();
    if (label >= kNumClasses) throw FormatError("invalid label " + std::to_string(label), label_at);
    rec.label = static_cast<Label>(label);
    rec.amri = read_tensor(r);
    rec.dti = read_tensor(r);
    rec.fmri = read_tensor(r);
    rec.clinical = read_markers<kNumClinical>(r, "clinical");
    rec.serum = read_markers<kNumSerum>(r, "serum");
    const std::size_t crc_at = r.offset();
    const std::uint32_t expect = crc32(bytes.subspan(start, crc_at - start));
    if (r.u32() != expect)
      throw ChecksumError("record " + std::to_string(n) + " CRC32 mismatch", crc_at);
    out.push_back(std::move(rec));
  }
  const std::size_t trailer_at = r.offset();
  const std::uint32_t expect = crc32(bytes.first(trailer_at));
  if (r.u32() != expect) throw ChecksumError("file CRC32 mismatch", trailer_at);
  if (r.remaining() != 0)
    throw FormatError("trailing bytes after dataset (record count " + std::to_string(count) +
                          " does not match contents)",
                      r.offset());
  return out;
}

void save_dataset(std::span<const SubjectRecord> records, const std::filesystem::path& path) {
  write_file(path, encode_dataset(records));
}

std::vector<SubjectRecord> load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file(path));
}

}  // namespace neuromoe
