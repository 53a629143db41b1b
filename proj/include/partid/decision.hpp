#pragma once

// Choice among a finite set of actions when the true state is known only to
// lie in a state space S. Welfare w(c, s) is given as a matrix; criteria
// reduce each action to a scalar score and pick the optimum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "partid/errors.hpp"
#include "partid/types.hpp"

namespace partid {

/// Actions x states welfare table, row-major.
class WelfareMatrix {
 public:
  WelfareMatrix(std::vector<std::string> action_labels, std::vector<std::string> state_labels,
                std::vector<double> welfare)
      : actions_(std::move(action_labels)),
        states_(std::move(state_labels)),
        welfare_(std::move(welfare)) {
    if (actions_.empty() || states_.empty()) {
      throw ValidationError("welfare matrix needs at least one action and one state", "welfare");
    }
    if (welfare_.size() != actions_.size() * states_.size()) {
      throw ValidationError("welfare matrix has " + std::to_string(welfare_.size()) +
                                " entries, expected " + std::to_string(actions_.size()) + " x " +
                                std::to_string(states_.size()),
                            "welfare");
    }
    for (std::size_t i = 0; i < welfare_.size(); ++i) {
      if (!std::isfinite(welfare_[i])) {
        throw ValidationError("welfare entry (" + std::to_string(i / states_.size()) + ", " +
                                  std::to_string(i % states_.size()) + ") is not finite",
                              "welfare");
      }
    }
  }

  /// Rows are actions; labels default to a0.., s0...
  static WelfareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw ValidationError("welfare matrix needs at least one action and one state", "welfare");
    }
    const std::size_t ns = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * ns);
    for (std::size_t c = 0; c < rows.size(); ++c) {
      if (rows[c].size() != ns) {
        throw ValidationError("welfare row " + std::to_string(c) + " has " +
                                  std::to_string(rows[c].size()) + " entries, expected " +
                                  std::to_string(ns),
                              "welfare");
      }
      flat.insert(flat.end(), rows[c].begin(), rows[c].end());
    }
    return {default_labels("a", rows.size()), default_labels("s", ns), std::move(flat)};
  }

  static std::vector<std::string> default_labels(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
  }

  std::size_t action_count() const noexcept { return actions_.size(); }
  std::size_t state_count() const noexcept { return states_.size(); }
  const std::vector<std::string>& action_labels() const noexcept { return actions_; }
  const std::vector<std::string>& state_labels() const noexcept { return states_; }

  double operator()(std::size_t action, std::size_t state) const noexcept {
    return welfare_[action * states_.size() + state];
  }
  std::span<const double> row(std::size_t action) const noexcept {
    return {welfare_.data() + action * states_.size(), states_.size()};
  }

 private:
  std::vector<std::string> actions_;
  std::vector<std::string> states_;
  std::vector<double> welfare_;
};

/// Subjective distribution over states. Weights within 1e-9 of summing to one
/// are renormalized exactly.
class Prior {
 public:
  explicit Prior(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw ValidationError("prior needs at least one weight", "prior");
    double total = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) {
        throw ValidationError("prior weights must be finite and nonnegative", "prior");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("prior weights sum to " + detail::num(total) + ", expected 1", "prior");
    }
    for (double& w : weights_) w /= total;
  }

  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }

 private:
  std::vector<double> weights_;
};

enum class Criterion { bayes, maximin, minimax_regret };

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::bayes: return "bayes";
    case Criterion::maximin: return "maximin";
    case Criterion::minimax_regret: return "minimax_regret";
  }
  return "unknown";
}

struct CriterionResult {
  Criterion criterion;
  std::vector<double> scores;           // expected welfare, min welfare or max regret
  std::vector<std::size_t> optimal_set;  // ascending action indices
  std::size_t chosen = 0;               // lowest index in optimal_set
};

/// regret(c, s) = max_d w(d, s) - w(c, s).
class RegretMatrix {
 public:
  RegretMatrix(std::size_t actions, std::size_t states, std::vector<double> regret)
      : actions_(actions), states_(states), regret_(std::move(regret)) {}

  std::size_t action_count() const noexcept { return actions_; }
  std::size_t state_count() const noexcept { return states_; }
  double operator()(std::size_t action, std::size_t state) const noexcept {
    return regret_[action * states_ + state];
  }

 private:
  std::size_t actions_;
  std::size_t states_;
  std::vector<double> regret_;
};

struct DominanceResult {
  std::vector<std::size_t> surviving;
  std::vector<std::pair<std::size_t, std::size_t>> dominated_by;  // (dominated, dominator)
};

namespace detail {

// Builds the optimal set: every action whose score is within kTolerance of
// the best one.
inline CriterionResult select(Criterion criterion, std::vector<double> scores, bool maximize) {
  const auto best_it = maximize ? std::max_element(scores.begin(), scores.end())
                                : std::min_element(scores.begin(), scores.end());
  const double best = *best_it;
  CriterionResult r{criterion, std::move(scores), {}, 0};
  for (std::size_t c = 0; c < r.scores.size(); ++c) {
    if (std::abs(r.scores[c] - best) <= kTolerance) r.optimal_set.push_back(c);
  }
  r.chosen = r.optimal_set.front();
  return r;
}

}  // namespace detail

/// d weakly dominates c when w(d, s) >= w(c, s) everywhere and > somewhere.
/// Identical rows never dominate each other.
inline DominanceResult eliminate_dominated(const WelfareMatrix& w) {
  DominanceResult out;
  const std::size_t na = w.action_count();
  const std::size_t ns = w.state_count();
  std::vector<bool> dominated(na, false);
  for (std::size_t c = 0; c < na; ++c) {
    for (std::size_t d = 0; d < na; ++d) {
      if (d == c) continue;
      bool weakly = true;
      bool strict = false;
      for (std::size_t s = 0; s < ns && weakly; ++s) {
        if (w(d, s) < w(c, s)) weakly = false;
        if (w(d, s) > w(c, s)) strict = true;
      }
      if (weakly && strict) {
        dominated[c] = true;
        out.dominated_by.emplace_back(c, d);
      }
    }
  }
  for (std::size_t c = 0; c < na; ++c) {
    if (!dominated[c]) out.surviving.push_back(c);
  }
  return out;
}

inline CriterionResult bayes_rank(const WelfareMatrix& w, const Prior& prior) {
  if (prior.size() != w.state_count()) {
    throw ValidationError("prior has " + std::to_string(prior.size()) + " weights but the matrix has " +
                              std::to_string(w.state_count()) + " states",
                          "prior");
  }
  std::vector<double> scores(w.action_count());
  for (std::size_t c = 0; c < w.action_count(); ++c) {
    const auto row = w.row(c);
    scores[c] = std::inner_product(row.begin(), row.end(), prior.weights().begin(), 0.0);
  }
  return detail::select(Criterion::bayes, std::move(scores), true);
}

inline CriterionResult maximin_rank(const WelfareMatrix& w) {
  std::vector<double> scores(w.action_count());
  for (std::size_t c = 0; c < w.action_count(); ++c) {
    const auto row = w.row(c);
    scores[c] = *std::min_element(row.begin(), row.end());
  }
  return detail::select(Criterion::maximin, std::move(scores), true);
}

inline RegretMatrix regret_matrix(const WelfareMatrix& w) {
  const std::size_t na = w.action_count();
  const std::size_t ns = w.state_count();
  std::vector<double> regret(na * ns);
  for (std::size_t s = 0; s < ns; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < na; ++c) best = std::max(best, w(c, s));
    for (std::size_t c = 0; c < na; ++c) regret[c * ns + s] = best - w(c, s);
  }
  return {na, ns, std::move(regret)};
}

inline CriterionResult minimax_regret_rank(const WelfareMatrix& w) {
  const RegretMatrix r = regret_matrix(w);
  std::vector<double> scores(w.action_count(), 0.0);
  for (std::size_t c = 0; c < r.action_count(); ++c) {
    for (std::size_t s = 0; s < r.state_count(); ++s) scores[c] = std::max(scores[c], r(c, s));
  }
  return detail::select(Criterion::minimax_regret, std::move(scores), false);
}

// ---------------------------------------------------------------------------
// Point prediction of an interval-identified mean under square loss
// ---------------------------------------------------------------------------

struct PointPrediction {
  UnitValue predictor;
  double max_regret = 0.0;
};

/// Regret of predicting q when the mean is m is (m - q)^2. Maximum regret over
/// m in [lo, hi] is minimized at the midpoint, where it equals ((hi - lo)/2)^2.
inline PointPrediction mmr_point_prediction(const Interval& region) {
  const double half = 0.5 * region.width();
  return {UnitValue(std::clamp(region.midpoint(), region.lo(), region.hi())), half * half};
}

// ---------------------------------------------------------------------------
// Rectangular discretization of interval state spaces
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxGridStates = 10'000'000;

/// i-th of `points` evenly spaced values across `region`; the endpoints are
/// reproduced exactly.
inline double grid_value(const Interval& region, std::size_t i, std::size_t points) noexcept {
  if (i == 0) return region.lo();
  if (i + 1 == points) return region.hi();
  return region.lo() + region.width() * static_cast<double>(i) / static_cast<double>(points - 1);
}

/// Builds a welfare matrix whose states are the Cartesian grid over
/// `regions` (`grid_points` per region; the first region varies slowest).
/// `rule(action, state)` receives the state as a span with one coordinate
/// per region.
template <typename Rule>
WelfareMatrix discretize_interval_states(std::span<const Interval> regions, std::size_t grid_points,
                                         std::vector<std::string> action_labels, Rule&& rule) {
  if (grid_points < 2) throw ValidationError("grid_points must be at least 2", "grid_points");
  if (regions.empty()) throw ValidationError("need at least one region to discretize", "regions");
  if (action_labels.empty()) throw ValidationError("need at least one action", "actions");
  std::size_t states = 1;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (states > kMaxGridStates / grid_points) {
      throw LimitExceeded("discretized state space exceeds " + std::to_string(kMaxGridStates) +
                              " states (" + std::to_string(grid_points) + "^" +
                              std::to_string(regions.size()) + ")",
                          "grid_points");
    }
    states *= grid_points;
  }
  const std::size_t na = action_labels.size();
  const std::size_t dims = regions.size();
  std::vector<double> welfare(na * states);
  std::vector<std::string> state_labels;
  state_labels.reserve(states);
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> point(dims);
  for (std::size_t s = 0; s < states; ++s) {
    std::string label = "(";
    for (std::size_t k = 0; k < dims; ++k) {
      point[k] = grid_value(regions[k], idx[k], grid_points);
      if (k) label += ",";
      label += detail::num(point[k]);
    }
    label += ")";
    state_labels.push_back(std::move(label));
    for (std::size_t c = 0; c < na; ++c) {
      welfare[c * states + s] = rule(c, std::span<const double>(point));
    }
    for (std::size_t k = dims; k-- > 0;) {
      if (++idx[k] < grid_points) break;
      idx[k] = 0;
    }
  }
  return {std::move(action_labels), std::move(state_labels), std::move(welfare)};
}

}  // namespace partid
