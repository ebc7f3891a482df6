#pragma once

#include "mtt/density.hpp"
#include "mtt/gaussian.hpp"
#include "mtt/params.hpp"
#include "mtt/random.hpp"
#include "mtt/scene.hpp"
#include "mtt/target_model.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mtt {

inline constexpr int kNumMoves = 6;

enum class MoveKind { birth = 0, death = 1, extension = 2, reduction = 3, state = 4, measurement = 5 };

std::string_view to_string(MoveKind kind);
MoveKind reverse_kind(MoveKind kind);

struct MoveConfig {
  double p_m = 0.99;
  double gate_radius = 4.0;  // Mahalanobis distance under the predicted observation law
  int tau = 5;
  std::array<double, kNumMoves> move_probs = {1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  double ut_scale = kDefaultUtScale;

  void validate() const;
};

/// t_m = min{t >= 1 : (1 - p_d)^t < 1 - p_m}.
int compute_tm(double p_d, double p_m);

/// Everything a move needs besides the chain state.
struct MoveContext {
  MoveContext(const Scene& scene, const ModelParams& params, const MoveConfig& cfg);

  const Scene* scene;
  ModelParams params;
  TargetModel model;
  MoveConfig cfg;
  int t_m;
};

/// Chain state: an unordered collection of tracks with states, plus its cached log density.
struct ChainState {
  std::vector<Track> tracks;
  double log_density = 0.0;
};

ChainState make_chain_state(const MoveContext& ctx, std::vector<Track> tracks);
/// All observations treated as clutter.
ChainState all_clutter_state(const MoveContext& ctx);
double chain_log_density(const MoveContext& ctx, std::span<const Track> tracks);

/// Free-observation lookup (observations not assigned to any track).
class FreeObs {
 public:
  FreeObs(std::span<const Track> tracks, const Scene& scene);
  bool is_free(int t, int i) const { return flags_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(i)] != 0; }
  const std::vector<int>& at(int t) const { return lists_[static_cast<std::size_t>(t - 1)]; }

 private:
  std::vector<std::vector<char>> flags_;
  std::vector<std::vector<int>> lists_;
};

// ---------------------------------------------------------------------------
// Plans: every discrete and continuous choice of a proposal. Indices refer to
// positions in the track vector the plan is applied to.

struct BirthPlan {
  Track track;
};
struct DeathPlan {
  int k = 0;
};
struct ExtensionPlan {
  int k = 0;
  bool forward = true;
  std::vector<int> y_idx;     // per added scan, in time order
  std::vector<State> states;  // per added scan, in time order
};
struct ReductionPlan {
  int k = 0;
  bool tail = true;
  int cut = 0;  // tail: keep t_b..cut-1; head: keep cut+1..t_d-1
};

/// Piece of a track around the link t -> t+1: head = scans <= t, tail = scans >= t+1.
struct PieceKey {
  int track = 0;
  bool tail = false;
  auto operator<=>(const PieceKey&) const = default;
};

struct StatePlan {
  int t = 0;
  int i = 0;
  int sub = 0;  // 1..8
  int j = -1, h = -1, l = -1;
  std::map<PieceKey, std::vector<State>> window;  // states of each piece inside the window
};

struct MeasurementPlan {
  int t = 0;
  int i = 0;
  int sub = 0;  // 1..9
  int j = -1;
  int m = -1;
  int y_b = 0;  // clutter observation index (sub-moves 1, 2, 8)
  std::vector<State> window;
};

using MovePlan = std::variant<BirthPlan, DeathPlan, ExtensionPlan, ReductionPlan, StatePlan, MeasurementPlan>;

MoveKind plan_kind(const MovePlan& plan);
int plan_submove(const MovePlan& plan);

/// Result of applying a plan to a track vector.
struct PlanOutcome {
  bool valid = false;  // false when the plan is not realisable from this state
  std::vector<Track> tracks;
  double log_q = kNegInf;  // log probability (density) of proposing this plan
  MovePlan reverse;        // plan that maps `tracks` back to the input
};

/// Evaluate mode: deterministic application of a plan with its proposal log density.
PlanOutcome evaluate_plan(const MoveContext& ctx, std::span<const Track> tracks, const MovePlan& plan);

/// Sample mode: draws a plan of the given kind. `log_q` accumulates the probability of
/// every choice made; nullopt when the move has no legal proposal here.
struct SampledPlan {
  MovePlan plan;
  double log_q = 0.0;
};
std::optional<SampledPlan> sample_plan(const MoveContext& ctx, std::span<const Track> tracks,
                                       MoveKind kind, Rng& rng);

struct ProposalResult {
  MoveKind move = MoveKind::birth;
  int submove = 0;
  bool valid = false;
  std::vector<Track> tracks;
  double log_target_old = 0.0;
  double log_target_new = kNegInf;
  double log_q_fwd = 0.0;
  double log_q_rev = kNegInf;
  double log_acceptance_ratio = kNegInf;
  MovePlan forward;
  MovePlan reverse;
};

ProposalResult propose(const MoveContext& ctx, const ChainState& state, MoveKind kind, Rng& rng);

struct MoveStats {
  std::array<long, kNumMoves> proposed{};
  std::array<long, kNumMoves> accepted{};

  long total_proposed() const;
  long total_accepted() const;
  double rate(MoveKind k) const;
  double overall_rate() const;
  MoveStats& operator+=(const MoveStats& o);
};

/// One MH step: pick a move by move_probs, accept with min(1, r).
bool dispatch_move(const MoveContext& ctx, ChainState& state, Rng& rng, MoveStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Grouping measurement (birth proposal for the association of a new track).

/// Draws (t_d, y_idx) of a new track born at t_b using free observations only.
Track group_measurements_sample(const MoveContext& ctx, const FreeObs& free, int t_b, Rng& rng);
/// log q_b of a track structure (t_b, t_d, y_idx), marginal over the auxiliary
/// initial death time. -inf when the structure is unreachable.
double group_measurements_log_prob(const MoveContext& ctx, const FreeObs& free, const Track& track);

/// Observation sequence of a track on scans [from, to] (nullopt = missed).
std::vector<std::optional<Obs>> track_observations(const Track& track, const Scene& scene, int from, int to);

}  // namespace mtt
