#pragma once

#include "mtt/moves.hpp"
#include "mtt/params.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace mtt {

struct OspaResult {
  double total = 0.0;
  double localisation = 0.0;
  double cardinality = 0.0;
};

/// OSPA distance with cutoff c and order p between two point sets of equal dimension.
OspaResult ospa(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b, double c = 10.0,
                double p = 1.0);

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Returns the column of each row.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Positions (S_x, S_y) of the tracks alive at scan t.
std::vector<Eigen::VectorXd> positions_at(std::span<const Track> tracks, int t);

struct TraceEntry {
  double log_density = 0.0;
  MoveStats stats;  // proposals of this sweep only
  std::optional<std::array<double, kNumReportedParams>> theta;
};

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<long> counts;
};

Histogram histogram(std::span<const double> values, int bins);

struct ChainSummary {
  std::vector<double> log_density;              // after burn-in
  std::array<double, kNumMoves> acceptance{};   // per move
  double overall_acceptance = 0.0;
  MoveStats totals;
  int map_index = 0;                            // index into the full trace
  std::vector<double> theta_mean, theta_var;
  std::vector<Histogram> theta_hist;
};

ChainSummary chain_summary(std::span<const TraceEntry> trace, int burn_in, int bins = 20);

}  // namespace mtt
