#include "mtt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtt {

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  if (n > m) throw ValidationError("assignment needs rows <= cols");
  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path (Jonker-Volgenant style potentials), 1-based.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
        if (cur < minv[js]) {
          minv[js] = cur;
          way[js] = j0;
        }
        if (minv[js] < delta) {
          delta = minv[js];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) {
          u[static_cast<std::size_t>(match[js])] += delta;
          v[js] -= delta;
        } else {
          minv[js] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (match[static_cast<std::size_t>(j)] > 0) out[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return out;
}

OspaResult ospa(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b, double c, double p) {
  if (!(c > 0.0)) throw ValidationError("OSPA cutoff must be > 0");
  if (!(p >= 1.0)) throw ValidationError("OSPA order must be >= 1");
  if (a.size() > b.size()) std::swap(a, b);
  const auto m = a.size(), n = b.size();
  if (n == 0) return {};
  double loc = 0.0;
  if (m > 0) {
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (a[i].size() != b[j].size()) throw ValidationError("OSPA points differ in dimension");
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::pow(std::min(c, (a[i] - b[j]).norm()), p);
      }
    const auto assign = min_cost_assignment(cost);
    for (std::size_t i = 0; i < m; ++i) loc += cost(static_cast<Eigen::Index>(i), assign[i]);
  }
  const double card = std::pow(c, p) * static_cast<double>(n - m);
  const double nn = static_cast<double>(n);
  OspaResult r;
  r.total = std::pow((loc + card) / nn, 1.0 / p);
  r.localisation = std::pow(loc / nn, 1.0 / p);
  r.cardinality = std::pow(card / nn, 1.0 / p);
  return r;
}

std::vector<Eigen::VectorXd> positions_at(std::span<const Track> tracks, int t) {
  std::vector<Eigen::VectorXd> out;
  for (const Track& tr : tracks) {
    if (!tr.alive(t)) continue;
    const State& x = tr.state_at(t);
    Eigen::VectorXd v(2);
    v << x(0), x(2);
    out.push_back(std::move(v));
  }
  return out;
}

Histogram histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.hi = *hi;
  const double width = (h.hi - h.lo) / bins;
  for (double x : values) {
    int k = width > 0.0 ? static_cast<int>((x - h.lo) / width) : 0;
    k = std::clamp(k, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

ChainSummary chain_summary(std::span<const TraceEntry> trace, int burn_in, int bins) {
  if (trace.empty()) throw ValidationError("empty trace");
  if (burn_in < 0 || burn_in >= static_cast<int>(trace.size()))
    throw ValidationError("burn_in must be smaller than the trace length");
  ChainSummary s;
  s.map_index = burn_in;
  for (std::size_t i = static_cast<std::size_t>(burn_in); i < trace.size(); ++i) {
    s.log_density.push_back(trace[i].log_density);
    s.totals += trace[i].stats;
    if (trace[i].log_density > trace[static_cast<std::size_t>(s.map_index)].log_density)
      s.map_index = static_cast<int>(i);
  }
  for (int k = 0; k < kNumMoves; ++k) s.acceptance[static_cast<std::size_t>(k)] = s.totals.rate(static_cast<MoveKind>(k));
  s.overall_acceptance = s.totals.overall_rate();
  if (trace[static_cast<std::size_t>(burn_in)].theta) {
    for (int c = 0; c < kNumReportedParams; ++c) {
      std::vector<double> v;
      for (std::size_t i = static_cast<std::size_t>(burn_in); i < trace.size(); ++i)
        if (trace[i].theta) v.push_back((*trace[i].theta)[static_cast<std::size_t>(c)]);
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean);
      var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
      s.theta_mean.push_back(mean);
      s.theta_var.push_back(var);
      s.theta_hist.push_back(histogram(v, bins));
    }
  }
  return s;
}

}  // namespace mtt
