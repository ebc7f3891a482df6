#include "mtt/random.hpp"

#include <algorithm>
#include <cmath>

namespace mtt {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

Rng Rng::substream(std::uint64_t a, std::uint64_t b) const {
  return Rng(derive_seed(seed_, a, b));
}

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

int Rng::uniform_int(int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(engine_);
}

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

double Rng::gamma(double shape, double scale) {
  // Small shapes are drawn in log space (Gamma(a) = Gamma(a+1) * U^(1/a)) so the
  // result does not silently underflow; the support is kept strictly positive.
  double x;
  if (shape < 1.0) {
    const double y = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    x = std::exp(std::log(y) + std::log(u) / shape);
  } else {
    x = std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  return std::max(x * scale, std::numeric_limits<double>::min());
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double Rng::inverse_gamma(double shape, double scale) {
  return scale / gamma(shape, 1.0);
}

int Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::categorical_log(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  double u = uniform();
  int last = -1;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == kNegInf) continue;
    last = static_cast<int>(i);
    u -= std::exp(log_weights[i] - lse);
    if (u < 0.0) return last;
  }
  return last;
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += std::max(w, 0.0);
  double u = uniform() * total;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = static_cast<int>(i);
    u -= weights[i];
    if (u < 0.0) return last;
  }
  return last;
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace mtt
