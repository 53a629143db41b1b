#pragma once

// Treatment choice when counterfactual outcomes are unobserved. For each
// treatment t, E[y(t) | x] is interval-identified from the share receiving t
// and their mean realized outcome. The unknown vector of arm means ranges
// over the product of the per-arm intervals, and choosing arm a in state
// (m_1, ..., m_k) yields welfare m_a.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "partid/decision.hpp"
#include "partid/errors.hpp"
#include "partid/identification.hpp"
#include "partid/types.hpp"

namespace partid {

struct TreatmentArm {
  std::string label;
  double share = 0.0;                      // P(z = t | x)
  std::optional<UnitValue> observed_mean;  // E(y | x, z = t); absent iff share == 0
  Assumption assumption;                   // restricts E[y(t) | x, z != t]

  TreatmentArm() = default;
  TreatmentArm(std::string label_, double share_, std::optional<double> mean, Assumption a)
      : label(std::move(label_)), share(require_unit(share_, "share")), assumption(std::move(a)) {
    if (share > 0.0) {
      if (!mean) {
        throw ValidationError("arm '" + label + "': observed_mean is required when share > 0",
                              "observed_mean");
      }
      observed_mean = UnitValue(*mean, "observed_mean");
    } else if (mean) {
      throw ValidationError("arm '" + label + "': observed_mean must be absent when share is 0",
                            "observed_mean");
    }
  }
};

struct TreatmentProblem {
  std::string stratum_label;
  std::vector<TreatmentArm> arms;

  TreatmentProblem() = default;
  TreatmentProblem(std::string label, std::vector<TreatmentArm> arms_)
      : stratum_label(std::move(label)), arms(std::move(arms_)) {
    if (arms.size() < 2) {
      throw ValidationError("a treatment problem needs at least 2 arms, got " +
                                std::to_string(arms.size()),
                            "arms");
    }
    std::set<std::string> seen;
    double total = 0.0;
    for (const auto& a : arms) {
      if (!seen.insert(a.label).second) {
        throw ValidationError("duplicate arm label '" + a.label + "'", "arms");
      }
      total += a.share;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("arm shares sum to " + detail::num(total) +
                                "; treatments must be exhaustive (sum to 1)",
                            "arms");
    }
  }
};

/// One interval per arm; the state space is their product.
struct RectangularStateSpace {
  std::vector<std::string> labels;
  std::vector<Interval> regions;

  RectangularStateSpace() = default;
  RectangularStateSpace(std::vector<std::string> labels_, std::vector<Interval> regions_)
      : labels(std::move(labels_)), regions(std::move(regions_)) {
    if (labels.size() != regions.size()) {
      throw ValidationError("state space needs one label per region", "regions");
    }
    if (regions.empty()) throw ValidationError("state space needs at least one arm", "regions");
  }

  std::size_t size() const noexcept { return regions.size(); }
};

inline IdentificationRegion arm_region(const TreatmentArm& arm, const std::string& stratum_label = {}) {
  const ObservedStratum stratum(stratum_label,
                                arm.observed_mean ? std::optional<double>(*arm.observed_mean)
                                                  : std::nullopt,
                                arm.share);
  return identify(stratum, arm.assumption);
}

inline RectangularStateSpace problem_state_space(const TreatmentProblem& problem) {
  std::vector<std::string> labels;
  std::vector<Interval> regions;
  for (std::size_t i = 0; i < problem.arms.size(); ++i) {
    const auto& arm = problem.arms[i];
    try {
      regions.push_back(arm_region(arm, problem.stratum_label).region);
    } catch (const Error& e) {
      rethrow_with_context(e, "arm '" + arm.label + "': ", "/arms/" + std::to_string(i));
    }
    labels.push_back(arm.label);
  }
  return {std::move(labels), std::move(regions)};
}

namespace detail {

inline void require_arms(const RectangularStateSpace& space) {
  if (space.size() < 2) {
    throw ValidationError("treatment choice needs at least 2 arms", "arms");
  }
}

}  // namespace detail

/// Max regret of arm a is max(0, max_{b != a} hi_b - lo_a): a sits at its lower
/// endpoint while the best rival sits at its upper one.
inline CriterionResult mmr_treatment_choice(const RectangularStateSpace& space) {
  detail::require_arms(space);
  std::vector<double> scores(space.size(), 0.0);
  for (std::size_t a = 0; a < space.size(); ++a) {
    for (std::size_t b = 0; b < space.size(); ++b) {
      if (b == a) continue;
      scores[a] = std::max(scores[a], space.regions[b].hi() - space.regions[a].lo());
    }
  }
  return detail::select(Criterion::minimax_regret, std::move(scores), false);
}

inline CriterionResult maximin_treatment_choice(const RectangularStateSpace& space) {
  detail::require_arms(space);
  std::vector<double> scores;
  scores.reserve(space.size());
  for (const auto& r : space.regions) scores.push_back(r.lo());
  return detail::select(Criterion::maximin, std::move(scores), true);
}

/// Pairs (dominated, dominator). a dominates b iff lo_a >= hi_b, unless both
/// regions are the same single point.
inline std::vector<std::pair<std::size_t, std::size_t>> arm_dominance(
    const RectangularStateSpace& space) {
  detail::require_arms(space);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < space.size(); ++b) {
    for (std::size_t a = 0; a < space.size(); ++a) {
      if (a == b) continue;
      const Interval& ra = space.regions[a];
      const Interval& rb = space.regions[b];
      const bool weak = ra.lo() >= rb.hi();
      const bool same_point = ra.is_point() && rb.is_point() && ra.lo() == rb.lo();
      if (weak && !same_point) out.emplace_back(b, a);
    }
  }
  return out;
}

/// Welfare matrix of the treatment problem on a `grid_points`-per-arm grid.
inline WelfareMatrix treatment_welfare_matrix(const RectangularStateSpace& space,
                                              std::size_t grid_points) {
  return discretize_interval_states(std::span<const Interval>(space.regions), grid_points,
                                    space.labels,
                                    [](std::size_t action, std::span<const double> state) {
                                      return state[action];
                                    });
}

}  // namespace partid
