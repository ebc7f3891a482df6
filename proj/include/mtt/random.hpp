#pragma once

#include "mtt/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mtt {

/// Mixes a 64-bit value (splitmix64 finaliser).
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent substream identified by (seed, a, b).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Random source used by every stochastic routine. Thin wrapper over mt19937_64
/// plus the handful of distributions the sampler needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  Rng substream(std::uint64_t a, std::uint64_t b = 0) const;

  double uniform();                 // [0, 1)
  int uniform_int(int n);           // {0, ..., n-1}
  double normal();
  double gamma(double shape, double scale);
  double beta(double a, double b);
  double inverse_gamma(double shape, double scale);
  int poisson(double mean);
  bool bernoulli(double p);

  /// Index drawn with probability proportional to exp(log_weights[i]).
  int categorical_log(std::span<const double> log_weights);
  /// Index drawn with probability proportional to max(weights[i], 0).
  int categorical(std::span<const double> weights);

  template <int D>
  Eigen::Matrix<double, D, 1> standard_normal_vector() {
    Eigen::Matrix<double, D, 1> z;
    for (int i = 0; i < D; ++i) z(i) = normal();
    return z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
};

/// log(sum(exp(v))) with max subtraction; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

}  // namespace mtt
