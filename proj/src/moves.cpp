#include "mtt/moves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtt {

std::string_view to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::birth: return "birth";
    case MoveKind::death: return "death";
    case MoveKind::extension: return "extension";
    case MoveKind::reduction: return "reduction";
    case MoveKind::state: return "state";
    case MoveKind::measurement: return "measurement";
  }
  return "unknown";
}

MoveKind reverse_kind(MoveKind kind) {
  switch (kind) {
    case MoveKind::birth: return MoveKind::death;
    case MoveKind::death: return MoveKind::birth;
    case MoveKind::extension: return MoveKind::reduction;
    case MoveKind::reduction: return MoveKind::extension;
    default: return kind;
  }
}

void MoveConfig::validate() const {
  if (!(p_m > 0.0 && p_m < 1.0)) throw ValidationError("p_m must lie in (0, 1)");
  if (!(gate_radius > 0.0)) throw ValidationError("gate_radius must be > 0");
  if (tau < 1) throw ValidationError("tau must be >= 1");
  double s = 0.0;
  for (double p : move_probs) {
    if (!(p >= 0.0)) throw ValidationError("move_probs entries must be >= 0");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ValidationError("move_probs must sum to 1");
  if (!(ut_scale > 0.0)) throw ValidationError("ut_scale must be > 0");
}

int compute_tm(double p_d, double p_m) {
  if (!(p_d > 0.0 && p_d <= 1.0)) throw ValidationError("t_m needs 0 < p_d <= 1");
  if (!(p_m > 0.0 && p_m < 1.0)) throw ValidationError("t_m needs 0 < p_m < 1");
  int t = 1;
  double miss = 1.0 - p_d;
  while (!(miss < 1.0 - p_m)) {
    miss *= 1.0 - p_d;
    ++t;
    if (t > 1000000) throw ValidationError("t_m does not exist for these probabilities");
  }
  return t;
}

MoveContext::MoveContext(const Scene& s, const ModelParams& p, const MoveConfig& c)
    : scene(&s), params(p), model(p), cfg(c), t_m(0) {
  params.validate();
  cfg.validate();
  t_m = params.p_d > 0.0 ? std::min(compute_tm(params.p_d, cfg.p_m), s.n() + 1) : s.n() + 1;
}

double chain_log_density(const MoveContext& ctx, std::span<const Track> tracks) {
  return tracks_log_density(ctx.params, ctx.model, tracks, *ctx.scene).total();
}

ChainState make_chain_state(const MoveContext& ctx, std::vector<Track> tracks) {
  validate_tracks(tracks, *ctx.scene, true);
  ChainState s;
  s.tracks = std::move(tracks);
  s.log_density = chain_log_density(ctx, s.tracks);
  return s;
}

ChainState all_clutter_state(const MoveContext& ctx) { return make_chain_state(ctx, {}); }

FreeObs::FreeObs(std::span<const Track> tracks, const Scene& scene) {
  const int n = scene.n();
  flags_.resize(static_cast<std::size_t>(n));
  lists_.resize(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) flags_[static_cast<std::size_t>(t - 1)].assign(static_cast<std::size_t>(scene.k_y(t)) + 1, 1);
  for (const Track& tr : tracks)
    for (int t = tr.t_b; t < tr.t_d; ++t)
      if (tr.obs_at(t) > 0) flags_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(tr.obs_at(t))] = 0;
  for (int t = 1; t <= n; ++t) {
    auto& f = flags_[static_cast<std::size_t>(t - 1)];
    f[0] = 0;
    for (int i = 1; i <= scene.k_y(t); ++i)
      if (f[static_cast<std::size_t>(i)]) lists_[static_cast<std::size_t>(t - 1)].push_back(i);
  }
}

std::vector<std::optional<Obs>> track_observations(const Track& tr, const Scene& scene, int from, int to) {
  std::vector<std::optional<Obs>> out;
  for (int t = from; t <= to; ++t) {
    const int i = tr.obs_at(t);
    if (i > 0) out.emplace_back(scene.y(t, i));
    else out.emplace_back(std::nullopt);
  }
  return out;
}

MoveKind plan_kind(const MovePlan& plan) { return static_cast<MoveKind>(plan.index()); }

int plan_submove(const MovePlan& plan) {
  if (auto* s = std::get_if<StatePlan>(&plan)) return s->sub;
  if (auto* m = std::get_if<MeasurementPlan>(&plan)) return m->sub;
  return 0;
}

namespace {

double xlogy(double k, double p) { return k == 0.0 ? 0.0 : k * std::log(p); }
double log_uniform(std::size_t n) { return -std::log(static_cast<double>(n)); }

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

// Lifetime law of a target: P(L) = p^(L-1) (1-p) for L < lmax, p^(lmax-1) at lmax.
double log_length_prob(int len, int lmax, double p) {
  if (len < 1 || len > lmax) return kNegInf;
  if (len == lmax) return xlogy(len - 1, p);
  return xlogy(len - 1, p) + xlogy(1, 1.0 - p);
}

int sample_length(int lmax, double p, Rng& rng) {
  int len = 1;
  while (len < lmax && rng.bernoulli(p)) ++len;
  return len;
}

Belief4 prior_belief(const TargetModel& model) {
  return {model.birth_mean(), clamp_psd<4>(model.birth_cov())};
}

Belief4 point_mass_prediction(const TargetModel& model, const State& prev) {
  return {model.transition() * prev, model.process_cov()};
}

// Gated free observations at one scan with their predictive log likelihoods.
struct Candidates {
  std::vector<int> obs;
  std::vector<double> log_w;
  double lse = kNegInf;

  bool empty() const { return obs.empty(); }
  int find(int y) const {
    for (std::size_t c = 0; c < obs.size(); ++c)
      if (obs[c] == y) return static_cast<int>(c);
    return -1;
  }
};

Candidates gated_candidates(const MoveContext& ctx, const FreeObs& free, int t,
                            const ObservationPrediction& pred) {
  Candidates c;
  const double gate2 = ctx.cfg.gate_radius * ctx.cfg.gate_radius;
  for (int i : free.at(t)) {
    const Obs& y = ctx.scene->y(t, i);
    if (mahalanobis2(ctx.model, pred, y) > gate2) continue;
    c.obs.push_back(i);
    c.log_w.push_back(predictive_log_likelihood(ctx.model, pred, y));
  }
  c.lse = log_sum_exp(c.log_w);
  return c;
}

// ---------------------------------------------------------------------------
// Grouping measurement

class GroupingEngine {
 public:
  GroupingEngine(const MoveContext& ctx, const FreeObs& free, int t_b)
      : ctx_(ctx), free_(free), t_b_(t_b), n_(ctx.scene->n()) {}

  // Candidates at scan s given the last detection at `anchor` (t_b - 1 = none yet).
  const Candidates& candidates(int anchor, int s) {
    Anchor& a = anchor_data(anchor);
    while (static_cast<int>(a.cands.size()) < s - anchor) {
      const int next = anchor + static_cast<int>(a.cands.size()) + 1;
      Belief4 pred;
      if (a.preds.empty()) pred = anchor < t_b_ ? prior_belief(ctx_.model) : predict_state(ctx_.model, a.filtered);
      else pred = predict_state(ctx_.model, a.preds.back());
      a.preds.push_back(pred);
      a.obs_preds.push_back(predict_observation(ctx_.model, pred, ctx_.cfg.ut_scale));
      a.cands.push_back(gated_candidates(ctx_, free_, next, a.obs_preds.back()));
    }
    return a.cands[idx(s - anchor - 1)];
  }

  double block_lse(int anchor, int lo, int hi) {
    std::vector<double> v;
    for (int s = lo; s <= hi; ++s) v.push_back(candidates(anchor, s).lse);
    return log_sum_exp(v);
  }

  // Registers the detection (s, y) following `anchor`.
  void detect(int anchor, int s, int y) {
    if (anchors_.count(s)) return;
    candidates(anchor, s);
    Anchor& a = anchors_.at(anchor);
    const auto k = idx(s - anchor - 1);
    Anchor next;
    next.filtered = ukf_update(ctx_.model, a.preds[k], a.obs_preds[k], ctx_.scene->y(s, y));
    anchors_.emplace(s, std::move(next));
  }

  // Death-time law when a block has no candidates and the auxiliary death is later.
  std::vector<double> termination_log_weights(int t_p, int lo, int hi) const {
    std::vector<double> w;
    const double r = ctx_.params.p_s * (1.0 - ctx_.params.p_d);
    bool any = false;
    for (int d = lo; d <= hi; ++d) {
      w.push_back(xlogy(d - 1 - t_p, r));
      any = any || std::isfinite(w.back());
    }
    if (!any) std::fill(w.begin(), w.end(), 0.0);
    const double lse = log_sum_exp(w);
    for (double& x : w) x -= lse;
    return w;
  }

  int t_b() const { return t_b_; }
  int n() const { return n_; }

 private:
  struct Anchor {
    Belief4 filtered;
    std::vector<Belief4> preds;
    std::vector<ObservationPrediction> obs_preds;
    std::vector<Candidates> cands;
  };

  Anchor& anchor_data(int anchor) {
    auto it = anchors_.find(anchor);
    if (it == anchors_.end()) it = anchors_.emplace(anchor, Anchor{}).first;
    return it->second;
  }

  const MoveContext& ctx_;
  const FreeObs& free_;
  int t_b_, n_;
  std::map<int, Anchor> anchors_;
};

}  // namespace

Track group_measurements_sample(const MoveContext& ctx, const FreeObs& free, int t_b, Rng& rng) {
  const int n = ctx.scene->n();
  const int t_m = ctx.t_m;
  GroupingEngine eng(ctx, free, t_b);
  const int t_d0 = t_b + sample_length(n + 1 - t_b, ctx.params.p_s, rng);
  Track tr;
  tr.t_b = t_b;
  std::vector<std::pair<int, int>> dets;
  int t_p = t_b - 1;
  int anchor = t_b - 1;
  int t_d = t_d0;
  while (true) {
    const int hi = std::min(t_p + t_m, t_d0 - 1);
    if (hi < t_p + 1) {
      t_d = t_d0;
      break;
    }
    const double lse = eng.block_lse(anchor, t_p + 1, hi);
    if (!std::isfinite(lse)) {
      if (t_d0 <= t_p + t_m) {
        t_d = t_d0;
      } else {
        const int lo = std::max(t_p + 1, t_b + 1);
        const int up = std::max(t_p + t_m, t_b + 1);
        const auto w = eng.termination_log_weights(t_p, lo, up);
        t_d = lo + rng.categorical_log(w);
      }
      break;
    }
    if (rng.bernoulli(ctx.cfg.p_m)) {
      std::vector<double> lw;
      std::vector<std::pair<int, int>> which;
      for (int s = t_p + 1; s <= hi; ++s) {
        const Candidates& c = eng.candidates(anchor, s);
        for (std::size_t k = 0; k < c.obs.size(); ++k) {
          lw.push_back(c.log_w[k]);
          which.emplace_back(s, c.obs[k]);
        }
      }
      const auto [s, y] = which[idx(rng.categorical_log(lw))];
      eng.detect(anchor, s, y);
      dets.emplace_back(s, y);
      t_p = s;
      anchor = s;
      continue;
    }
    if (t_d0 <= t_p + t_m + 1) {
      t_d = t_d0;
      break;
    }
    t_p += t_m;
  }
  tr.t_d = t_d;
  tr.y_idx.assign(idx(t_d - t_b), 0);
  for (const auto& [s, y] : dets) tr.obs_at(s) = y;
  return tr;
}

double group_measurements_log_prob(const MoveContext& ctx, const FreeObs& free, const Track& tr) {
  const int n = ctx.scene->n();
  const int t_m = ctx.t_m;
  const int t_b = tr.t_b;
  if (t_b < 1 || t_b > n || tr.t_d <= t_b || tr.t_d > n + 1) return kNegInf;
  std::vector<std::pair<int, int>> dets;
  for (int t = tr.t_b; t < tr.t_d; ++t) {
    const int y = tr.obs_at(t);
    if (y == 0) continue;
    if (!free.is_free(t, y)) return kNegInf;
    dets.emplace_back(t, y);
  }
  GroupingEngine eng(ctx, free, t_b);
  const double log_pm = std::log(ctx.cfg.p_m);
  const double log_skip = std::log1p(-ctx.cfg.p_m);
  std::vector<double> terms;
  for (int t_d0 = tr.t_d; t_d0 <= n + 1; ++t_d0) {
    double lp = log_length_prob(t_d0 - t_b, n + 1 - t_b, ctx.params.p_s);
    if (!std::isfinite(lp)) continue;
    int t_p = t_b - 1;
    int anchor = t_b - 1;
    std::size_t di = 0;
    bool ok = false;
    while (true) {
      const bool done = di == dets.size();
      const int hi = std::min(t_p + t_m, t_d0 - 1);
      if (hi < t_p + 1) {
        ok = done && tr.t_d == t_d0;
        break;
      }
      const double lse = eng.block_lse(anchor, t_p + 1, hi);
      if (!std::isfinite(lse)) {
        if (t_d0 <= t_p + t_m) {
          ok = done && tr.t_d == t_d0;
        } else {
          const int lo = std::max(t_p + 1, t_b + 1);
          const int up = std::max(t_p + t_m, t_b + 1);
          if (done && tr.t_d >= lo && tr.t_d <= up) {
            lp += eng.termination_log_weights(t_p, lo, up)[idx(tr.t_d - lo)];
            ok = true;
          }
        }
        break;
      }
      if (!done && dets[di].first <= hi) {
        const auto [s, y] = dets[di];
        const Candidates& c = eng.candidates(anchor, s);
        const int k = c.find(y);
        if (k < 0) break;
        lp += log_pm + c.log_w[idx(k)] - lse;
        eng.detect(anchor, s, y);
        t_p = s;
        anchor = s;
        ++di;
        continue;
      }
      lp += log_skip;
      if (t_d0 <= t_p + t_m + 1) {
        ok = done && tr.t_d == t_d0;
        break;
      }
      t_p += t_m;
    }
    if (ok) terms.push_back(lp);
  }
  return log_sum_exp(terms);
}

namespace {

// ---------------------------------------------------------------------------
// Shared helpers for state proposals.

struct SegmentFilter {
  std::vector<UkfStep> steps;
  std::optional<State> after;
};

// Filter for a new track's states on [from, to] given its observations.
SegmentFilter segment_filter(const MoveContext& ctx, const Track& shape, int from, int to,
                             const std::optional<State>& before, const std::optional<State>& after) {
  const auto obs = track_observations(shape, *ctx.scene, from, to);
  const Belief4 init = before ? point_mass_prediction(ctx.model, *before) : prior_belief(ctx.model);
  return {ukf_track_filter(ctx.model, obs, init, ctx.cfg.ut_scale), after};
}

bool all_free(const FreeObs& free, const Track& tr) {
  for (int t = tr.t_b; t < tr.t_d; ++t)
    if (tr.obs_at(t) > 0 && !free.is_free(t, tr.obs_at(t))) return false;
  return true;
}

PlanOutcome invalid_outcome() { return PlanOutcome{}; }

// ---------------------------------------------------------------------------
// Birth / death

PlanOutcome eval_birth(const MoveContext& ctx, std::span<const Track> tracks, const BirthPlan& p) {
  const Scene& sc = *ctx.scene;
  const Track& b = p.track;
  if (b.t_b < 1 || b.t_b > sc.n() || b.t_d <= b.t_b || b.t_d > sc.n() + 1) return invalid_outcome();
  if (static_cast<int>(b.y_idx.size()) != b.length() || static_cast<int>(b.states.size()) != b.length())
    return invalid_outcome();
  const FreeObs free(tracks, sc);
  for (int t = b.t_b; t < b.t_d; ++t)
    if (b.obs_at(t) < 0 || b.obs_at(t) > sc.k_y(t)) return invalid_outcome();
  if (!all_free(free, b)) return invalid_outcome();
  PlanOutcome out;
  out.valid = true;
  out.log_q = log_uniform(idx(sc.n())) + group_measurements_log_prob(ctx, free, b);
  if (std::isfinite(out.log_q)) {
    const SegmentFilter f = segment_filter(ctx, b, b.t_b, b.t_d - 1, std::nullopt, std::nullopt);
    out.log_q += gaussian_backward_log_density(f.steps, ctx.model, std::nullopt, b.states);
  }
  out.tracks.assign(tracks.begin(), tracks.end());
  out.tracks.push_back(b);
  out.reverse = DeathPlan{static_cast<int>(tracks.size())};
  return out;
}

PlanOutcome eval_death(const MoveContext&, std::span<const Track> tracks, const DeathPlan& p) {
  if (p.k < 0 || p.k >= static_cast<int>(tracks.size())) return invalid_outcome();
  PlanOutcome out;
  out.valid = true;
  out.log_q = log_uniform(tracks.size());
  out.tracks.assign(tracks.begin(), tracks.end());
  out.tracks.erase(out.tracks.begin() + p.k);
  out.reverse = BirthPlan{tracks[idx(p.k)]};
  return out;
}

std::optional<SampledPlan> sample_birth(const MoveContext& ctx, std::span<const Track> tracks, Rng& rng) {
  const Scene& sc = *ctx.scene;
  const FreeObs free(tracks, sc);
  const int t_b = 1 + rng.uniform_int(sc.n());
  BirthPlan p;
  p.track = group_measurements_sample(ctx, free, t_b, rng);
  const SegmentFilter f = segment_filter(ctx, p.track, p.track.t_b, p.track.t_d - 1, std::nullopt, std::nullopt);
  BackwardSample bs = gaussian_backward_sample(f.steps, ctx.model, std::nullopt, rng);
  p.track.states = std::move(bs.path);
  SampledPlan out;
  out.log_q = log_uniform(idx(sc.n())) + group_measurements_log_prob(ctx, free, p.track) + bs.log_density;
  out.plan = std::move(p);
  return out;
}

std::optional<SampledPlan> sample_death(std::span<const Track> tracks, Rng& rng) {
  if (tracks.empty()) return std::nullopt;
  SampledPlan out;
  out.plan = DeathPlan{rng.uniform_int(static_cast<int>(tracks.size()))};
  out.log_q = log_uniform(tracks.size());
  return out;
}

// ---------------------------------------------------------------------------
// Extension / reduction

int max_extension(const Track& tr, bool forward, int n) { return forward ? n + 1 - tr.t_d : tr.t_b - 1; }

// Belief sequence used to choose observations of an extension: forward from the
// last state, or backward (through F^-1) from the first state.
class ExtensionPredictor {
 public:
  ExtensionPredictor(const MoveContext& ctx, const Track& tr, bool forward)
      : ctx_(ctx), forward_(forward) {
    const Mat4& f = ctx.model.transition();
    finv_ = f.inverse();
    qb_ = finv_ * ctx.model.process_cov() * finv_.transpose();
    qb_ = 0.5 * (qb_ + qb_.transpose());
    if (forward) {
      pred_ = point_mass_prediction(ctx.model, tr.states.back());
      pred_.cov = clamp_psd<4>(pred_.cov);
    } else {
      pred_ = {finv_ * tr.states.front(), qb_};
    }
  }

  const Belief4& predicted() const { return pred_; }

  void advance(const std::optional<std::pair<ObservationPrediction, Obs>>& update) {
    Belief4 filt = update ? ukf_update(ctx_.model, pred_, update->first, update->second) : pred_;
    if (forward_) {
      pred_ = predict_state(ctx_.model, filt);
    } else {
      pred_.mean = finv_ * filt.mean;
      pred_.cov = finv_ * filt.cov * finv_.transpose() + qb_;
      pred_.cov = 0.5 * (pred_.cov + pred_.cov.transpose());
    }
  }

 private:
  const MoveContext& ctx_;
  bool forward_;
  Mat4 finv_, qb_;
  Belief4 pred_;
};

// Track with the extension segment attached.
Track extended_track(const Track& tr, const ExtensionPlan& p) {
  Track out = tr;
  const int len = static_cast<int>(p.y_idx.size());
  if (p.forward) {
    out.t_d += len;
    out.y_idx.insert(out.y_idx.end(), p.y_idx.begin(), p.y_idx.end());
    out.states.insert(out.states.end(), p.states.begin(), p.states.end());
  } else {
    out.t_b -= len;
    out.y_idx.insert(out.y_idx.begin(), p.y_idx.begin(), p.y_idx.end());
    out.states.insert(out.states.begin(), p.states.begin(), p.states.end());
  }
  return out;
}

PlanOutcome eval_extension(const MoveContext& ctx, std::span<const Track> tracks, const ExtensionPlan& p) {
  const Scene& sc = *ctx.scene;
  if (p.k < 0 || p.k >= static_cast<int>(tracks.size())) return invalid_outcome();
  const Track& tr = tracks[idx(p.k)];
  const int len = static_cast<int>(p.y_idx.size());
  const int lmax = max_extension(tr, p.forward, sc.n());
  if (len < 1 || len > lmax || static_cast<int>(p.states.size()) != len) return invalid_outcome();
  const int first = p.forward ? tr.t_d : tr.t_b - len;
  for (int s = 0; s < len; ++s)
    if (p.y_idx[idx(s)] < 0 || p.y_idx[idx(s)] > sc.k_y(first + s)) return invalid_outcome();
  const FreeObs free(tracks, sc);
  PlanOutcome out;
  out.valid = true;
  double lq = log_uniform(tracks.size()) - std::log(2.0) + log_length_prob(len, lmax, ctx.params.p_s);

  ExtensionPredictor pred(ctx, tr, p.forward);
  for (int step = 0; step < len && std::isfinite(lq); ++step) {
    const int s = p.forward ? first + step : tr.t_b - 1 - step;
    const int y = p.y_idx[idx(s - first)];
    const ObservationPrediction op = predict_observation(ctx.model, pred.predicted(), ctx.cfg.ut_scale);
    const Candidates c = gated_candidates(ctx, free, s, op);
    if (c.empty()) {
      if (y != 0) lq = kNegInf;
    } else if (y == 0) {
      lq += xlogy(1, 1.0 - ctx.params.p_d);
    } else {
      const int k = c.find(y);
      if (k < 0) lq = kNegInf;
      else lq += std::log(ctx.params.p_d) + c.log_w[idx(k)] - c.lse;
    }
    if (y > 0) pred.advance(std::make_pair(op, sc.y(s, y)));
    else pred.advance(std::nullopt);
  }

  const Track ext = extended_track(tr, p);
  if (std::isfinite(lq)) {
    if (p.forward) {
      const SegmentFilter f = segment_filter(ctx, ext, first, first + len - 1, tr.states.back(), std::nullopt);
      lq += gaussian_backward_log_density(f.steps, ctx.model, std::nullopt, p.states);
    } else {
      const SegmentFilter f = segment_filter(ctx, ext, first, first + len - 1, std::nullopt, tr.states.front());
      lq += gaussian_backward_log_density(f.steps, ctx.model, tr.states.front(), p.states);
    }
  }
  out.log_q = lq;
  out.tracks.assign(tracks.begin(), tracks.end());
  out.tracks[idx(p.k)] = ext;
  out.reverse = ReductionPlan{p.k, p.forward, p.forward ? tr.t_d : tr.t_b - 1};
  return out;
}

std::optional<SampledPlan> sample_extension(const MoveContext& ctx, std::span<const Track> tracks, Rng& rng) {
  if (tracks.empty()) return std::nullopt;
  const Scene& sc = *ctx.scene;
  ExtensionPlan p;
  p.k = rng.uniform_int(static_cast<int>(tracks.size()));
  p.forward = rng.bernoulli(0.5);
  const Track& tr = tracks[idx(p.k)];
  const int lmax = max_extension(tr, p.forward, sc.n());
  if (lmax < 1) return std::nullopt;
  const int len = sample_length(lmax, ctx.params.p_s, rng);
  double lq = log_uniform(tracks.size()) - std::log(2.0) + log_length_prob(len, lmax, ctx.params.p_s);
  const int first = p.forward ? tr.t_d : tr.t_b - len;
  p.y_idx.assign(idx(len), 0);
  const FreeObs free(tracks, sc);
  ExtensionPredictor pred(ctx, tr, p.forward);
  for (int step = 0; step < len; ++step) {
    const int s = p.forward ? first + step : tr.t_b - 1 - step;
    const ObservationPrediction op = predict_observation(ctx.model, pred.predicted(), ctx.cfg.ut_scale);
    const Candidates c = gated_candidates(ctx, free, s, op);
    int y = 0;
    if (!c.empty()) {
      if (rng.bernoulli(ctx.params.p_d)) {
        const int k = rng.categorical_log(c.log_w);
        y = c.obs[idx(k)];
        lq += std::log(ctx.params.p_d) + c.log_w[idx(k)] - c.lse;
      } else {
        lq += xlogy(1, 1.0 - ctx.params.p_d);
      }
    }
    p.y_idx[idx(s - first)] = y;
    if (y > 0) pred.advance(std::make_pair(op, sc.y(s, y)));
    else pred.advance(std::nullopt);
  }
  Track shape = tr;
  ExtensionPlan tmp = p;
  tmp.states.assign(idx(len), State::Zero());
  shape = extended_track(tr, tmp);
  BackwardSample bs;
  if (p.forward) {
    const SegmentFilter f = segment_filter(ctx, shape, first, first + len - 1, tr.states.back(), std::nullopt);
    bs = gaussian_backward_sample(f.steps, ctx.model, std::nullopt, rng);
  } else {
    const SegmentFilter f = segment_filter(ctx, shape, first, first + len - 1, std::nullopt, tr.states.front());
    bs = gaussian_backward_sample(f.steps, ctx.model, tr.states.front(), rng);
  }
  p.states = std::move(bs.path);
  SampledPlan out;
  out.log_q = lq + bs.log_density;
  out.plan = std::move(p);
  return out;
}

PlanOutcome eval_reduction(const MoveContext&, std::span<const Track> tracks, const ReductionPlan& p) {
  if (p.k < 0 || p.k >= static_cast<int>(tracks.size())) return invalid_outcome();
  const Track& tr = tracks[idx(p.k)];
  const int l = tr.length();
  if (l < 2) return invalid_outcome();
  if (p.tail ? (p.cut < tr.t_b + 1 || p.cut > tr.t_d - 1) : (p.cut < tr.t_b || p.cut > tr.t_d - 2))
    return invalid_outcome();
  PlanOutcome out;
  out.valid = true;
  out.log_q = log_uniform(tracks.size()) - std::log(2.0) - std::log(static_cast<double>(l - 1));
  ExtensionPlan rev;
  rev.k = p.k;
  rev.forward = p.tail;
  Track kept = tr;
  if (p.tail) {
    const auto keep = idx(p.cut - tr.t_b);
    rev.y_idx.assign(tr.y_idx.begin() + static_cast<long>(keep), tr.y_idx.end());
    rev.states.assign(tr.states.begin() + static_cast<long>(keep), tr.states.end());
    kept.t_d = p.cut;
    kept.y_idx.resize(keep);
    kept.states.resize(keep);
  } else {
    const auto drop = static_cast<long>(p.cut - tr.t_b + 1);
    rev.y_idx.assign(tr.y_idx.begin(), tr.y_idx.begin() + drop);
    rev.states.assign(tr.states.begin(), tr.states.begin() + drop);
    kept.t_b = p.cut + 1;
    kept.y_idx.erase(kept.y_idx.begin(), kept.y_idx.begin() + drop);
    kept.states.erase(kept.states.begin(), kept.states.begin() + drop);
  }
  out.tracks.assign(tracks.begin(), tracks.end());
  out.tracks[idx(p.k)] = std::move(kept);
  out.reverse = std::move(rev);
  return out;
}

std::optional<SampledPlan> sample_reduction(std::span<const Track> tracks, Rng& rng) {
  if (tracks.empty()) return std::nullopt;
  ReductionPlan p;
  p.k = rng.uniform_int(static_cast<int>(tracks.size()));
  p.tail = rng.bernoulli(0.5);
  const Track& tr = tracks[idx(p.k)];
  const int l = tr.length();
  if (l < 2) return std::nullopt;
  const int c = rng.uniform_int(l - 1);
  p.cut = p.tail ? tr.t_b + 1 + c : tr.t_b + c;
  SampledPlan out;
  out.log_q = log_uniform(tracks.size()) - std::log(2.0) - std::log(static_cast<double>(l - 1));
  out.plan = p;
  return out;
}

// ---------------------------------------------------------------------------
// State move

struct LinkSets {
  std::vector<int> heads;     // alive at t
  std::vector<int> newborns;  // born at t+1
  std::vector<char> has_tail; // by track index
};

LinkSets link_sets(std::span<const Track> tracks, int t) {
  LinkSets s;
  s.has_tail.assign(tracks.size(), 0);
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const Track& tr = tracks[k];
    if (tr.alive(t)) {
      s.heads.push_back(static_cast<int>(k));
      s.has_tail[k] = tr.t_d > t + 1;
    }
    if (tr.t_b == t + 1) s.newborns.push_back(static_cast<int>(k));
  }
  return s;
}

struct StateChoiceSets {
  std::vector<int> S, H, L;  // heads with tail (not i), newborns, heads without tail (not i)
  std::vector<int> applicable;
};

StateChoiceSets state_choice_sets(const LinkSets& ls, int i) {
  StateChoiceSets c;
  for (int a : ls.heads) {
    if (a == i) continue;
    if (ls.has_tail[idx(a)]) c.S.push_back(a);
    else c.L.push_back(a);
  }
  c.H = ls.newborns;
  const bool S = !c.S.empty(), H = !c.H.empty(), L = !c.L.empty();
  if (ls.has_tail[idx(i)]) {
    if (S) c.applicable.push_back(1);
    if (S) c.applicable.push_back(2);
    if (S && L) c.applicable.push_back(3);
    if (H) c.applicable.push_back(4);
    if (H && L) c.applicable.push_back(5);
    c.applicable.push_back(6);
  } else {
    if (H) c.applicable.push_back(7);
    if (S) c.applicable.push_back(8);
  }
  return c;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

struct Composition {
  int head = -1;  // source track of the head piece
  int tail = -1;  // source track of the tail piece (whole track for a new-born)
};

std::vector<Composition> compositions(const StatePlan& p) {
  switch (p.sub) {
    case 1: return {{p.i, p.j}, {p.j, -1}, {-1, p.i}};
    case 2: return {{p.i, p.j}, {p.j, p.i}};
    case 3: return {{p.i, p.j}, {p.j, -1}, {p.l, p.i}};
    case 4: return {{p.i, p.h}, {-1, p.i}};
    case 5: return {{p.i, p.h}, {p.l, p.i}};
    case 6: return {{p.i, -1}, {-1, p.i}};
    case 7: return {{p.i, p.h}};
    case 8: return {{p.i, p.j}, {p.j, -1}};
  }
  return {};
}

StatePlan reverse_state_plan(const StatePlan& p, std::span<const int> pos) {
  StatePlan r;
  r.t = p.t;
  r.i = pos[0];
  switch (p.sub) {
    case 1: r.sub = 5; r.h = pos[2]; r.l = pos[1]; break;
    case 2: r.sub = 2; r.j = pos[1]; break;
    case 3: r.sub = 3; r.j = pos[2]; r.l = pos[1]; break;
    case 4: r.sub = 4; r.h = pos[1]; break;
    case 5: r.sub = 1; r.j = pos[1]; break;
    case 6: r.sub = 7; r.h = pos[1]; break;
    case 7: r.sub = 6; break;
    case 8: r.sub = 8; r.i = pos[1]; r.j = pos[0]; break;
  }
  return r;
}

// Scan range of a piece inside the window around the link t -> t+1.
std::pair<int, int> piece_window(const Track& tr, bool tail, int t, int tau) {
  if (tail) return {std::max(tr.t_b, t + 1), std::min(tr.t_d - 1, t + tau)};
  return {std::max(tr.t_b, t - tau + 1), t};
}

struct Piece {
  int t_b, t_d;  // scans covered by the piece
  std::vector<State> states;
  std::vector<int> y_idx;
};

Piece cut_piece(const Track& tr, bool tail, int t) {
  Piece p;
  p.t_b = tail ? std::max(tr.t_b, t + 1) : tr.t_b;
  p.t_d = tail ? tr.t_d : t + 1;
  const auto a = idx(p.t_b - tr.t_b), b = idx(p.t_d - tr.t_b);
  p.states.assign(tr.states.begin() + static_cast<long>(a), tr.states.begin() + static_cast<long>(b));
  p.y_idx.assign(tr.y_idx.begin() + static_cast<long>(a), tr.y_idx.begin() + static_cast<long>(b));
  return p;
}

// Proposal for the window states of one composed track: UKF on the window plus
// backward sampling between the boundary states. Sample mode when rng != nullptr.
double window_states(const MoveContext& ctx, const Track& shape, int ws, int we, Rng* rng,
                     std::vector<State>& values) {
  std::optional<State> before, after;
  if (ws > shape.t_b) before = shape.state_at(ws - 1);
  if (we < shape.t_d - 1) after = shape.state_at(we + 1);
  const SegmentFilter f = segment_filter(ctx, shape, ws, we, before, after);
  if (rng) {
    BackwardSample bs = gaussian_backward_sample(f.steps, ctx.model, after, *rng);
    values = std::move(bs.path);
    return bs.log_density;
  }
  return gaussian_backward_log_density(f.steps, ctx.model, after, values);
}

// Builds the tracks of a state move. With rng, window values are drawn and stored
// into plan.window; otherwise they are read from it.
PlanOutcome run_state_plan(const MoveContext& ctx, std::span<const Track> tracks, StatePlan& p, Rng* rng) {
  const int n = ctx.scene->n();
  if (n < 2 || p.t < 1 || p.t > n - 1) return invalid_outcome();
  if (p.i < 0 || p.i >= static_cast<int>(tracks.size()) || !tracks[idx(p.i)].alive(p.t)) return invalid_outcome();
  const LinkSets ls = link_sets(tracks, p.t);
  const StateChoiceSets cs = state_choice_sets(ls, p.i);
  if (!contains(cs.applicable, p.sub)) return invalid_outcome();
  const bool needs_j = p.sub == 1 || p.sub == 2 || p.sub == 3 || p.sub == 8;
  const bool needs_h = p.sub == 4 || p.sub == 5 || p.sub == 7;
  const bool needs_l = p.sub == 3 || p.sub == 5;
  if (needs_j != (p.j >= 0) || needs_h != (p.h >= 0) || needs_l != (p.l >= 0)) return invalid_outcome();
  if (needs_j && !contains(cs.S, p.j)) return invalid_outcome();
  if (needs_h && !contains(cs.H, p.h)) return invalid_outcome();
  if (needs_l && !contains(cs.L, p.l)) return invalid_outcome();

  double lq = log_uniform(idx(n - 1)) + log_uniform(ls.heads.size()) + log_uniform(cs.applicable.size());
  if (needs_j) lq += log_uniform(cs.S.size());
  if (needs_h) lq += log_uniform(cs.H.size());
  if (needs_l) lq += log_uniform(cs.L.size());

  const int t = p.t;
  const int tau = ctx.cfg.tau;
  const std::vector<Composition> comps = compositions(p);
  std::vector<char> involved(tracks.size(), 0);
  for (const Composition& c : comps) {
    if (c.head >= 0) involved[idx(c.head)] = 1;
    if (c.tail >= 0) involved[idx(c.tail)] = 1;
  }

  PlanOutcome out;
  out.valid = true;
  for (std::size_t k = 0; k < tracks.size(); ++k)
    if (!involved[k]) out.tracks.push_back(tracks[k]);
  std::vector<int> pos;
  std::map<PieceKey, std::vector<State>> reverse_window;
  std::map<PieceKey, std::vector<State>> drawn;

  for (const Composition& c : comps) {
    Track nt;
    std::optional<Piece> hp, tp;
    if (c.head >= 0) hp = cut_piece(tracks[idx(c.head)], false, t);
    if (c.tail >= 0) tp = cut_piece(tracks[idx(c.tail)], true, t);
    nt.t_b = hp ? hp->t_b : tp->t_b;
    nt.t_d = tp ? tp->t_d : t + 1;
    for (const auto* pc : {hp ? &*hp : nullptr, tp ? &*tp : nullptr}) {
      if (!pc) continue;
      nt.states.insert(nt.states.end(), pc->states.begin(), pc->states.end());
      nt.y_idx.insert(nt.y_idx.end(), pc->y_idx.begin(), pc->y_idx.end());
    }
    const int new_pos = static_cast<int>(out.tracks.size());
    pos.push_back(new_pos);

    // Window of the composed track and the slots owned by each source piece.
    int ws = t + 1, we = t;
    std::pair<int, int> hw{0, -1}, tw{0, -1};
    if (hp) {
      hw = piece_window(tracks[idx(c.head)], false, t, tau);
      ws = hw.first;
      we = hw.second;
    }
    if (tp) {
      tw = piece_window(tracks[idx(c.tail)], true, t, tau);
      if (!hp) ws = tw.first;
      we = tw.second;
    }
    // Old values of each piece's window go to the reverse plan under the new owner.
    if (hp) {
      const Track& src = tracks[idx(c.head)];
      reverse_window[{new_pos, false}] = std::vector<State>(
          src.states.begin() + (hw.first - src.t_b), src.states.begin() + (hw.second - src.t_b + 1));
    }
    if (tp) {
      const Track& src = tracks[idx(c.tail)];
      reverse_window[{new_pos, true}] = std::vector<State>(
          src.states.begin() + (tw.first - src.t_b), src.states.begin() + (tw.second - src.t_b + 1));
    }

    std::vector<State> values;
    if (!rng) {
      if (hp) {
        auto it = p.window.find({c.head, false});
        if (it == p.window.end() || static_cast<int>(it->second.size()) != hw.second - hw.first + 1)
          return invalid_outcome();
        values.insert(values.end(), it->second.begin(), it->second.end());
      }
      if (tp) {
        auto it = p.window.find({c.tail, true});
        if (it == p.window.end() || static_cast<int>(it->second.size()) != tw.second - tw.first + 1)
          return invalid_outcome();
        values.insert(values.end(), it->second.begin(), it->second.end());
      }
    }
    lq += window_states(ctx, nt, ws, we, rng, values);
    for (int s = ws; s <= we; ++s) nt.state_at(s) = values[idx(s - ws)];
    if (rng) {
      const long hn = hp ? hw.second - hw.first + 1 : 0;
      if (hp) drawn[{c.head, false}] = std::vector<State>(values.begin(), values.begin() + hn);
      if (tp) drawn[{c.tail, true}] = std::vector<State>(values.begin() + hn, values.end());
    }
    out.tracks.push_back(std::move(nt));
  }
  if (rng) p.window = std::move(drawn);
  StatePlan rev = reverse_state_plan(p, pos);
  rev.window = std::move(reverse_window);
  out.reverse = std::move(rev);
  out.log_q = lq;
  return out;
}

std::optional<StatePlan> sample_state_structure(const MoveContext& ctx, std::span<const Track> tracks, Rng& rng) {
  const int n = ctx.scene->n();
  if (n < 2) return std::nullopt;
  StatePlan p;
  p.t = 1 + rng.uniform_int(n - 1);
  const LinkSets ls = link_sets(tracks, p.t);
  if (ls.heads.empty()) return std::nullopt;
  p.i = ls.heads[idx(rng.uniform_int(static_cast<int>(ls.heads.size())))];
  const StateChoiceSets cs = state_choice_sets(ls, p.i);
  if (cs.applicable.empty()) return std::nullopt;
  p.sub = cs.applicable[idx(rng.uniform_int(static_cast<int>(cs.applicable.size())))];
  auto pick = [&](const std::vector<int>& v) { return v[idx(rng.uniform_int(static_cast<int>(v.size())))]; };
  if (p.sub == 1 || p.sub == 2 || p.sub == 3 || p.sub == 8) p.j = pick(cs.S);
  if (p.sub == 4 || p.sub == 5 || p.sub == 7) p.h = pick(cs.H);
  if (p.sub == 3 || p.sub == 5) p.l = pick(cs.L);
  return p;
}

// ---------------------------------------------------------------------------
// Measurement move

struct MeasureSets {
  std::vector<int> clutter;   // free observations at t
  std::vector<int> detected;  // detected tracks alive at t, not i
  std::vector<int> missed;    // undetected tracks alive at t, not i
  std::vector<int> applicable;
  int k_x = 0;
};

MeasureSets measure_sets(std::span<const Track> tracks, const Scene& scene, int t, int i) {
  MeasureSets m;
  m.clutter = FreeObs(tracks, scene).at(t);
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    if (!tracks[k].alive(t)) continue;
    ++m.k_x;
    if (static_cast<int>(k) == i) continue;
    (tracks[k].obs_at(t) > 0 ? m.detected : m.missed).push_back(static_cast<int>(k));
  }
  const bool C = !m.clutter.empty(), D = !m.detected.empty(), U = !m.missed.empty();
  if (tracks[idx(i)].obs_at(t) > 0) {
    if (C && U) m.applicable.push_back(1);
    if (C) m.applicable.push_back(2);
    if (D) m.applicable.push_back(3);
    if (D && U) m.applicable.push_back(4);
    if (D) m.applicable.push_back(5);
    m.applicable.push_back(6);
    if (U) m.applicable.push_back(7);
  } else {
    if (C) m.applicable.push_back(8);
    if (D) m.applicable.push_back(9);
  }
  return m;
}

// log of the normalised weight of `pick` within `items`; weights from `lw(item)`.
template <class F>
double log_choice(const std::vector<int>& items, int pick, F&& lw, int* index = nullptr) {
  std::vector<double> w;
  int at = -1;
  for (std::size_t k = 0; k < items.size(); ++k) {
    w.push_back(lw(items[k]));
    if (items[k] == pick) at = static_cast<int>(k);
  }
  if (index) *index = at;
  if (at < 0) return kNegInf;
  return w[idx(at)] - log_sum_exp(w);
}

template <class F>
int sample_choice(const std::vector<int>& items, F&& lw, Rng& rng) {
  std::vector<double> w;
  for (int it : items) w.push_back(lw(it));
  return items[idx(rng.categorical_log(w))];
}

std::pair<int, int> measure_window(const Track& tr, int t, int tau) {
  return {std::max(tr.t_b, t - tau + 1), std::min(tr.t_d - 1, t + tau)};
}

PlanOutcome run_measurement_plan(const MoveContext& ctx, std::span<const Track> tracks, MeasurementPlan& p, Rng* rng) {
  const Scene& sc = *ctx.scene;
  if (p.t < 1 || p.t > sc.n()) return invalid_outcome();
  if (p.i < 0 || p.i >= static_cast<int>(tracks.size()) || !tracks[idx(p.i)].alive(p.t)) return invalid_outcome();
  const int t = p.t;
  const Track& ti = tracks[idx(p.i)];
  const MeasureSets ms = measure_sets(tracks, sc, t, p.i);
  if (rng) {
    if (ms.applicable.empty()) return invalid_outcome();
    p.sub = ms.applicable[idx(rng->uniform_int(static_cast<int>(ms.applicable.size())))];
  }
  if (!contains(ms.applicable, p.sub)) return invalid_outcome();
  double lq = log_uniform(idx(sc.n())) + log_uniform(idx(ms.k_x)) + log_uniform(ms.applicable.size());

  // Window states of i with its observation at t disregarded.
  const auto [ws, we] = measure_window(ti, t, ctx.cfg.tau);
  Track shape = ti;
  shape.obs_at(t) = 0;
  std::vector<State> values;
  if (!rng) {
    if (static_cast<int>(p.window.size()) != we - ws + 1) return invalid_outcome();
    values = p.window;
  }
  lq += window_states(ctx, shape, ws, we, rng, values);
  if (rng) p.window = values;
  const State& xi = values[idx(t - ws)];

  const int y_a = ti.obs_at(t);
  auto lw_obs_i = [&](int y) { return ctx.model.log_observation(sc.y(t, y), xi); };
  auto lw_track_i = [&](int j) { return ctx.model.log_observation(sc.y(t, tracks[idx(j)].obs_at(t)), xi); };
  auto lw_missed = [&](int m) { return ctx.model.log_observation(sc.y(t, y_a), tracks[idx(m)].state_at(t)); };

  const bool needs_yb = p.sub == 1 || p.sub == 2 || p.sub == 8;
  const bool needs_j = p.sub == 3 || p.sub == 4 || p.sub == 5 || p.sub == 9;
  const bool needs_m = p.sub == 1 || p.sub == 4 || p.sub == 7;
  if (rng) {
    p.y_b = needs_yb ? sample_choice(ms.clutter, lw_obs_i, *rng) : 0;
    p.j = needs_j ? sample_choice(ms.detected, lw_track_i, *rng) : -1;
    p.m = needs_m ? sample_choice(ms.missed, lw_missed, *rng) : -1;
  }
  if (needs_yb != (p.y_b > 0) || needs_j != (p.j >= 0) || needs_m != (p.m >= 0)) return invalid_outcome();
  if (needs_yb) lq += log_choice(ms.clutter, p.y_b, lw_obs_i);
  if (needs_j) lq += log_choice(ms.detected, p.j, lw_track_i);
  if (needs_m) lq += log_choice(ms.missed, p.m, lw_missed);
  if (!std::isfinite(lq) && (needs_yb || needs_j || needs_m)) {
    // A choice outside its candidate set makes the plan unrealisable.
    if ((needs_yb && !contains(ms.clutter, p.y_b)) || (needs_j && !contains(ms.detected, p.j)) ||
        (needs_m && !contains(ms.missed, p.m)))
      return invalid_outcome();
  }

  PlanOutcome out;
  out.valid = true;
  out.tracks.assign(tracks.begin(), tracks.end());
  Track& ni = out.tracks[idx(p.i)];
  for (int s = ws; s <= we; ++s) ni.state_at(s) = values[idx(s - ws)];
  const int y_j = p.j >= 0 ? tracks[idx(p.j)].obs_at(t) : 0;
  MeasurementPlan rev;
  rev.t = t;
  rev.i = p.i;
  rev.window.assign(ti.states.begin() + (ws - ti.t_b), ti.states.begin() + (we - ti.t_b + 1));
  switch (p.sub) {
    case 1:
      ni.obs_at(t) = p.y_b;
      out.tracks[idx(p.m)].obs_at(t) = y_a;
      rev.sub = 5;
      rev.j = p.m;
      break;
    case 2:
      ni.obs_at(t) = p.y_b;
      rev.sub = 2;
      rev.y_b = y_a;
      break;
    case 3:
      ni.obs_at(t) = y_j;
      out.tracks[idx(p.j)].obs_at(t) = y_a;
      rev.sub = 3;
      rev.j = p.j;
      break;
    case 4:
      ni.obs_at(t) = y_j;
      out.tracks[idx(p.j)].obs_at(t) = 0;
      out.tracks[idx(p.m)].obs_at(t) = y_a;
      rev.sub = 4;
      rev.j = p.m;
      rev.m = p.j;
      break;
    case 5:
      ni.obs_at(t) = y_j;
      out.tracks[idx(p.j)].obs_at(t) = 0;
      rev.sub = 1;
      rev.y_b = y_a;
      rev.m = p.j;
      break;
    case 6:
      ni.obs_at(t) = 0;
      rev.sub = 8;
      rev.y_b = y_a;
      break;
    case 7:
      ni.obs_at(t) = 0;
      out.tracks[idx(p.m)].obs_at(t) = y_a;
      rev.sub = 9;
      rev.j = p.m;
      break;
    case 8:
      ni.obs_at(t) = p.y_b;
      rev.sub = 6;
      break;
    case 9:
      ni.obs_at(t) = y_j;
      out.tracks[idx(p.j)].obs_at(t) = 0;
      rev.sub = 7;
      rev.m = p.j;
      break;
  }
  out.reverse = std::move(rev);
  out.log_q = lq;
  return out;
}

}  // namespace

PlanOutcome evaluate_plan(const MoveContext& ctx, std::span<const Track> tracks, const MovePlan& plan) {
  return std::visit(
      [&](const auto& p) -> PlanOutcome {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BirthPlan>) return eval_birth(ctx, tracks, p);
        else if constexpr (std::is_same_v<T, DeathPlan>) return eval_death(ctx, tracks, p);
        else if constexpr (std::is_same_v<T, ExtensionPlan>) return eval_extension(ctx, tracks, p);
        else if constexpr (std::is_same_v<T, ReductionPlan>) return eval_reduction(ctx, tracks, p);
        else if constexpr (std::is_same_v<T, StatePlan>) {
          StatePlan copy = p;
          return run_state_plan(ctx, tracks, copy, nullptr);
        } else {
          MeasurementPlan copy = p;
          return run_measurement_plan(ctx, tracks, copy, nullptr);
        }
      },
      plan);
}

namespace {

// Sample mode that also returns the constructed outcome (avoids a second pass).
struct SampledOutcome {
  SampledPlan sampled;
  std::optional<PlanOutcome> outcome;
};

std::optional<SampledOutcome> sample_with_outcome(const MoveContext& ctx, std::span<const Track> tracks,
                                                  MoveKind kind, Rng& rng) {
  switch (kind) {
    case MoveKind::birth: {
      auto s = sample_birth(ctx, tracks, rng);
      if (!s) return std::nullopt;
      return SampledOutcome{*s, std::nullopt};
    }
    case MoveKind::death: {
      auto s = sample_death(tracks, rng);
      if (!s) return std::nullopt;
      return SampledOutcome{*s, std::nullopt};
    }
    case MoveKind::extension: {
      auto s = sample_extension(ctx, tracks, rng);
      if (!s) return std::nullopt;
      return SampledOutcome{*s, std::nullopt};
    }
    case MoveKind::reduction: {
      auto s = sample_reduction(tracks, rng);
      if (!s) return std::nullopt;
      return SampledOutcome{*s, std::nullopt};
    }
    case MoveKind::state: {
      auto p = sample_state_structure(ctx, tracks, rng);
      if (!p) return std::nullopt;
      PlanOutcome o = run_state_plan(ctx, tracks, *p, &rng);
      if (!o.valid) return std::nullopt;
      return SampledOutcome{SampledPlan{*p, o.log_q}, std::move(o)};
    }
    case MoveKind::measurement: {
      const Scene& sc = *ctx.scene;
      MeasurementPlan p;
      p.t = 1 + rng.uniform_int(sc.n());
      std::vector<int> alive;
      for (std::size_t k = 0; k < tracks.size(); ++k)
        if (tracks[k].alive(p.t)) alive.push_back(static_cast<int>(k));
      if (alive.empty()) return std::nullopt;
      p.i = alive[idx(rng.uniform_int(static_cast<int>(alive.size())))];
      PlanOutcome o = run_measurement_plan(ctx, tracks, p, &rng);
      if (!o.valid) return std::nullopt;
      return SampledOutcome{SampledPlan{p, o.log_q}, std::move(o)};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<SampledPlan> sample_plan(const MoveContext& ctx, std::span<const Track> tracks, MoveKind kind,
                                       Rng& rng) {
  auto s = sample_with_outcome(ctx, tracks, kind, rng);
  if (!s) return std::nullopt;
  return s->sampled;
}

ProposalResult propose(const MoveContext& ctx, const ChainState& state, MoveKind kind, Rng& rng) {
  ProposalResult r;
  r.move = kind;
  r.log_target_old = state.log_density;
  auto s = sample_with_outcome(ctx, state.tracks, kind, rng);
  if (!s) return r;
  r.forward = s->sampled.plan;
  r.submove = plan_submove(r.forward);
  PlanOutcome fwd = s->outcome ? std::move(*s->outcome) : evaluate_plan(ctx, state.tracks, r.forward);
  if (!fwd.valid) return r;
  r.log_q_fwd = s->sampled.log_q;
  r.tracks = std::move(fwd.tracks);
  r.reverse = std::move(fwd.reverse);
  const PlanOutcome rev = evaluate_plan(ctx, r.tracks, r.reverse);
  if (!rev.valid) return r;
  r.valid = true;
  r.log_q_rev = rev.log_q;
  r.log_target_new = chain_log_density(ctx, r.tracks);
  const auto& mp = ctx.cfg.move_probs;
  const double log_pm = std::log(mp[idx(static_cast<int>(reverse_kind(kind)))]) - std::log(mp[idx(static_cast<int>(kind))]);
  r.log_acceptance_ratio = r.log_target_new - r.log_target_old + r.log_q_rev - r.log_q_fwd + log_pm;
  if (std::isnan(r.log_acceptance_ratio)) r.log_acceptance_ratio = kNegInf;
  return r;
}

long MoveStats::total_proposed() const { return std::accumulate(proposed.begin(), proposed.end(), 0L); }
long MoveStats::total_accepted() const { return std::accumulate(accepted.begin(), accepted.end(), 0L); }

double MoveStats::rate(MoveKind k) const {
  const auto i = idx(static_cast<int>(k));
  return proposed[i] ? static_cast<double>(accepted[i]) / static_cast<double>(proposed[i]) : 0.0;
}

double MoveStats::overall_rate() const {
  const long p = total_proposed();
  return p ? static_cast<double>(total_accepted()) / static_cast<double>(p) : 0.0;
}

MoveStats& MoveStats::operator+=(const MoveStats& o) {
  for (std::size_t i = 0; i < proposed.size(); ++i) {
    proposed[i] += o.proposed[i];
    accepted[i] += o.accepted[i];
  }
  return *this;
}

bool dispatch_move(const MoveContext& ctx, ChainState& state, Rng& rng, MoveStats* stats) {
  const int j = rng.categorical(ctx.cfg.move_probs);
  const auto kind = static_cast<MoveKind>(j);
  if (stats) stats->proposed[idx(j)] += 1;
  ProposalResult r = propose(ctx, state, kind, rng);
  if (!r.valid || !(r.log_acceptance_ratio > kNegInf)) return false;
  const bool accept = r.log_acceptance_ratio >= 0.0 || std::log(rng.uniform()) < r.log_acceptance_ratio;
  if (!accept) return false;
  state.tracks = std::move(r.tracks);
  state.log_density = r.log_target_new;
  if (stats) stats->accepted[idx(j)] += 1;
  return true;
}

}  // namespace mtt
