// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "neuromoe/encoders.hpp"
#include "neuromoe/error.hpp"
#include "support/gradcheck.hpp"

namespace neuromoe {
namespace {

using testing::random_tensor;

EncoderConfig small_config() {
  EncoderConfig c;
  c.volume_shapes = {Dims3{8, 8, 8}, Dims3{8, 8, 8}, Dims3{8, 8, 8}};
  c.d_model = 8;
  c.num_heads = 2;
  c.num_layers = 2;
  c.ffn_hidden = 12;
  return c;
}

TEST(TemporalCollapse, SingleFrameIsIdentity) {
  Rng rng(1);
  auto v = random_tensor({1, 4, 4, 4}, rng);
  auto out = temporal_collapse(v, TemporalCollapse::Mean);
  EXPECT_EQ(out.shape(), (Shape{4, 4, 4}));
  EXPECT_EQ(out.storage(), v.storage());
  auto v3 = random_tensor({4, 4, 4}, rng);
  EXPECT_EQ(temporal_collapse(v3, TemporalCollapse::Mean), v3);
}

TEST(TemporalCollapse, MeanOfTwoFrames) {
  Tensor<double> v({2, 4, 4, 4});
  for (std::size_t i = 64; i < 128; ++i) v[i] = 2.0;
  auto out = temporal_collapse(v, TemporalCollapse::Mean);
  for (double x : out.values()) EXPECT_EQ(x, 1.0);
  auto first = temporal_collapse(v, TemporalCollapse::FirstFrame);
  for (double x : first.values()) EXPECT_EQ(x, 0.0);
}

TEST(TemporalCollapse, MatchesScalarLoop) {
  Rng rng(2);
  auto v = random_tensor({4, 8, 8, 8}, rng, -3, 3);
  auto out = temporal_collapse(v, TemporalCollapse::Mean);
  for (std::size_t x = 0; x < 512; ++x) {
    double s = 0;
    for (std::size_t t = 0; t < 4; ++t) s += v[t * 512 + x];
    EXPECT_NEAR(out[x], s / 4, 1e-12);
  }
}

TEST(TemporalCollapse, RejectsBadRank) {
  EXPECT_THROW(temporal_collapse(Tensor<double>({4, 4}), TemporalCollapse::Mean),
               ValidationError);
}

TEST(Patchify, FullVolumeGives512Patches) {
  auto p = patchify(Tensor<double>({32, 32, 32}), 4);
  EXPECT_EQ(p.shape(), (Shape{512, 64}));
}

TEST(Patchify, SinglePatchIsFlattenedVolume) {
  Rng rng(3);
  auto v = random_tensor({4, 4, 4}, rng);
  auto p = patchify(v, 4);
  EXPECT_EQ(p.shape(), (Shape{1, 64}));
  EXPECT_EQ(p.storage(), v.storage());
}

TEST(Patchify, LayoutMatchesScalarLoop) {
  Rng rng(4);
  const std::size_t X = 8, Y = 4, Z = 12, P = 4;
  auto v = random_tensor({X, Y, Z}, rng);
  auto p = patchify(v, P);
  std::size_t row = 0;
  for (std::size_t i = 0; i < X / P; ++i)
    for (std::size_t j = 0; j < Y / P; ++j)
      for (std::size_t k = 0; k < Z / P; ++k, ++row) {
        std::size_t col = 0;
        for (std::size_t u = 0; u < P; ++u)
          for (std::size_t w = 0; w < P; ++w)
            for (std::size_t z = 0; z < P; ++z, ++col)
              ASSERT_EQ(p.at(row, col), v[((i * P + u) * Y + j * P + w) * Z + k * P + z]);
      }
}

TEST(Patchify, RoundTripIsBitExact) {
  Rng rng(5);
  auto v = random_tensor({16, 16, 16}, rng, -10, 10);
  EXPECT_EQ(unpatchify(patchify(v, 4), Dims3{16, 16, 16}, 4), v);
}

TEST(Patchify, RoundTripOverRandomExtents) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const Dims3 d{4 * (1 + rng.index(8)), 4 * (1 + rng.index(8)), 4 * (1 + rng.index(8))};
    auto v = random_tensor({d[0], d[1], d[2]}, rng, -10, 10);
    auto p = patchify(v, 4);
    EXPECT_EQ(p.dim(0), d[0] * d[1] * d[2] / 64);
    EXPECT_EQ(unpatchify(p, d, 4), v);
  }
}

TEST(Patchify, NonDivisibleAxisIsNamed) {
  try {
    patchify(Tensor<double>({8, 6, 8}), 4);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("axis y"), std::string::npos) << e.what();
  }
}

TEST(Mhsa, RowsSumToOne) {
  Rng rng(6);
  ParameterStore<double> store;
  AttentionParams<double> p{Linear<double>(store, "q", 8, 8, rng),
                            Linear<double>(store, "k", 8, 8, rng),
                            Linear<double>(store, "v", 8, 8, rng),
                            Linear<double>(store, "o", 8, 8, rng)};
  Tape<double> tape(false);
  auto r = mhsa_layer(tape, tape.constant(random_tensor({10, 8}, rng, -2, 2)), p, 4, true);
  ASSERT_EQ(r.attention.size(), 4u);
  for (const auto& a : r.attention)
    for (std::size_t i = 0; i < 10; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 10; ++j) s += a.at(i, j);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Mhsa, SingleTokenIsValueThenOutputProjection) {
  Rng rng(7);
  ParameterStore<double> store;
  AttentionParams<double> p{Linear<double>(store, "q", 8, 8, rng),
                            Linear<double>(store, "k", 8, 8, rng),
                            Linear<double>(store, "v", 8, 8, rng),
                            Linear<double>(store, "o", 8, 8, rng)};
  Tape<double> tape(false);
  auto x = tape.constant(random_tensor({1, 8}, rng));
  auto r = mhsa_layer(tape, x, p, 2, true);
  for (const auto& a : r.attention) EXPECT_EQ(a[0], 1.0);
  auto expected = p.output(tape, p.value(tape, x)).value();
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(r.output.value()[i], expected[i], 1e-14);
}

TEST(MriEncoder, OutputShapeAndDeterminism) {
  Rng rng(8);
  ParameterStore<double> store;
  const auto cfg = small_config();
  MriEncoder<double> enc(store, Modality::DTI, cfg, rng);
  auto v = random_tensor({2, 8, 8, 8}, rng);
  Tape<double> t1(false), t2(false);
  auto a = enc.encode_volume(t1, v).value();
  auto b = enc.encode_volume(t2, v).value();
  EXPECT_EQ(a.shape(), (Shape{8}));
  EXPECT_EQ(a, b);
}

TEST(MriEncoder, RejectsWrongVolumeShape) {
  Rng rng(9);
  ParameterStore<double> store;
  MriEncoder<double> enc(store, Modality::AMRI, small_config(), rng);
  Tape<double> tape(false);
  EXPECT_THROW(enc.encode_volume(tape, Tensor<double>({8, 8, 4})), ValidationError);
}

TEST(MriEncoder, ZeroInputDependsOnlyOnBiases) {
  const auto cfg = small_config();
  std::vector<Tensor<double>> outs;
  for (auto m : kModalities) {
    Rng rng(10);
    ParameterStore<double> store;
    MriEncoder<double> enc(store, m, cfg, rng);
    for (auto* p : store.all())
      if (p->name.ends_with("patch_embed.weight") || p->name.ends_with("positional"))
        p->value.fill(0.0);
    Tape<double> tape(false);
    outs.push_back(enc.encode_volume(tape, Tensor<double>({8, 8, 8})).value());
  }
  // Zero tokens stay zero through attention and the residual; post-norm
  // then maps each token to beta = 0, and the FFN adds only its bias path.
  EXPECT_EQ(outs[0], outs[1]);
  EXPECT_EQ(outs[1], outs[2]);
  for (double v : outs[0].values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(MriEncoder, TokenPermutationEquivariance) {
  Rng rng(11);
  ParameterStore<double> store;
  const auto cfg = small_config();
  MriEncoder<double> enc(store, Modality::FMRI, cfg, rng);
  const std::size_t n = cfg.num_patches(Modality::FMRI), pv = cfg.patch_volume(), d = cfg.d_model;
  auto patches = random_tensor({n, pv}, rng);
  const auto& pos = enc.positional().value;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 3 + 1) % n;
  Tensor<double> pp({n, pv}), ppos({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < pv; ++c) pp.at(i, c) = patches.at(perm[i], c);
    for (std::size_t c = 0; c < d; ++c) ppos.at(i, c) = pos.at(perm[i], c);
  }
  Tape<double> tape(false);
  auto a = enc.encode_tokens(tape, tape.constant(patches), tape.constant(pos)).value();
  auto b = enc.encode_tokens(tape, tape.constant(pp), tape.constant(ppos)).value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(b.at(i, c), a.at(perm[i], c), 1e-12);
}

TEST(MriEncoder, ParameterPrefixesAreDisjoint) {
  Rng rng(12);
  ParameterStore<double> store;
  const auto cfg = small_config();
  MriEncoder<double> a(store, Modality::AMRI, cfg, rng);
  MriEncoder<double> d(store, Modality::DTI, cfg, rng);
  MriEncoder<double> f(store, Modality::FMRI, cfg, rng);
  ClinicalEncoder<double> c(store, 11, cfg, rng);
  std::map<std::string, int> owners;
  for (const auto* p : store.all()) {
    const auto dot = p->name.find('.', 8);
    owners[p->name.substr(0, dot)]++;
  }
  EXPECT_EQ(owners.size(), 4u);
  EXPECT_EQ(owners["encoder.amri"], owners["encoder.dti"]);
  EXPECT_EQ(owners["encoder.amri"], owners["encoder.fmri"]);
  EXPECT_GT(owners["encoder.clinical"], 0);
  std::set<const Tensor<double>*> storage;
  for (const auto* p : store.all()) EXPECT_TRUE(storage.insert(&p->value).second);
}

TEST(MriEncoder, EveryParameterReceivesGradient) {
  Rng rng(13);
  ParameterStore<double> store;
  MriEncoder<double> enc(store, Modality::AMRI, small_config(), rng);
  Tape<double> tape;
  auto out = enc.encode_volume(tape, random_tensor({8, 8, 8}, rng));
  tape.backward(testing::project(out, 14));
  for (const auto* p : store.all()) {
    bool any = false;
    for (double g : p->grad.values()) any = any || g != 0.0;
    EXPECT_TRUE(any) << p->name;
  }
}

TEST(MriEncoder, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(15);
  ParameterStore<double> store;
  auto cfg = small_config();
  cfg.num_layers = 1;
  MriEncoder<double> enc(store, Modality::AMRI, cfg, rng);
  const auto vol = random_tensor({8, 8, 8}, rng);
  auto r = testing::check_parameter_gradients(
      store, [&](Tape<double>& t) { return testing::project(enc.encode_volume(t, vol), 16); }, 17);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(ClinicalEncoder, ShapeDeterminismAndDimensionCheck) {
  Rng rng(18);
  ParameterStore<double> store;
  ClinicalEncoder<double> enc(store, 11, EncoderConfig{}, rng);
  Tape<double> tape(false);
  auto x = tape.constant(random_tensor({3, 11}, rng));
  auto a = enc.encode(tape, x, false, nullptr).value();
  auto b = enc.encode(tape, x, false, nullptr).value();
  EXPECT_EQ(a.shape(), (Shape{3, 16}));
  EXPECT_EQ(a, b);
  EXPECT_THROW(enc.encode(tape, tape.constant(Tensor<double>({3, 10})), false, nullptr),
               ValidationError);
  EXPECT_THROW(enc.encode(tape, x, true, nullptr), ContractError);
}

TEST(ClinicalEncoder, ZeroInputFollowsBiasPath) {
  Rng rng(19);
  ParameterStore<double> store;
  ClinicalEncoder<double> enc(store, 11, EncoderConfig{}, rng);
  auto& b0 = store.get("encoder.clinical.fc0.bias").value;
  auto& w1 = store.get("encoder.clinical.fc1.weight").value;
  auto& b1 = store.get("encoder.clinical.fc1.bias").value;
  auto& w2 = store.get("encoder.clinical.fc2.weight").value;
  auto& b2 = store.get("encoder.clinical.fc2.bias").value;
  for (auto* t : {&b0, &b1, &b2})
    for (auto& v : t->values()) v = rng.uniform(-1, 1);
  Tape<double> tape(false);
  auto out = enc.encode(tape, tape.constant(Tensor<double>({1, 11})), false, nullptr).value();
  std::vector<double> h1(32), h2(16);
  for (std::size_t j = 0; j < 32; ++j) h1[j] = std::max(0.0, b0[j]);
  for (std::size_t j = 0; j < 16; ++j) {
    double s = b1[j];
    for (std::size_t i = 0; i < 32; ++i) s += h1[i] * w1.at(i, j);
    h2[j] = std::max(0.0, s);
  }
  for (std::size_t j = 0; j < 16; ++j) {
    double s = b2[j];
    for (std::size_t i = 0; i < 16; ++i) s += h2[i] * w2.at(i, j);
    EXPECT_NEAR(out[j], s, 1e-12);
  }
}

}  // namespace
}  // namespace neuromoe
