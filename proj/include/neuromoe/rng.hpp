// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace neuromoe {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded generator. Child streams are derived from the seed rather than
/// from the engine state, so `derive` never perturbs the parent sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng derive(std::uint64_t stream) const;
  Rng derive(std::string_view stream) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n);

  template <typename U>
  void shuffle(std::vector<U>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace neuromoe
