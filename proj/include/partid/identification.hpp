#pragma once

// Identification regions for a conditional mean E(y | x = xi) when some
// outcomes are unobserved. With m = E(y | x, z = 1) and p = P(z = 1 | x),
// the law of iterated expectations gives
//
//   E(y | x) = m p + E(y | x, z = 0) (1 - p),
//
// so every assumption about the missing mean that confines it to an interval
// Gamma yields the region [m p + Gamma.lo (1 - p), m p + Gamma.hi (1 - p)].

#include <charconv>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "partid/errors.hpp"
#include "partid/types.hpp"

namespace partid {

/// Point-identified summary of one covariate cell.
struct ObservedStratum {
  std::string label;
  std::optional<UnitValue> observed_mean;  // absent iff response_rate == 0
  double response_rate = 0.0;

  ObservedStratum() = default;
  ObservedStratum(std::string label_, std::optional<double> mean, double rate)
      : label(std::move(label_)), response_rate(require_unit(rate, "response_rate")) {
    if (response_rate > 0.0) {
      if (!mean) {
        throw ValidationError("observed_mean is required when response_rate > 0", "observed_mean");
      }
      observed_mean = UnitValue(*mean, "observed_mean");
    }
  }

  /// Observed mean, or 0 when nobody responded (it is then multiplied by 0).
  double mean_or_zero() const noexcept { return observed_mean ? observed_mean->value() : 0.0; }
};

struct IdentificationRegion {
  Interval region;
  Assumption assumption;
  std::string stratum_label;
};

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

inline UnitValue normalize(double value, const OutcomeScale& scale) {
  if (!(value >= scale.lo)) {
    throw ValidationError("value " + detail::num(value) + " is below the scale lower bound lo=" +
                              detail::num(scale.lo),
                          "lo");
  }
  if (!(value <= scale.hi)) {
    throw ValidationError("value " + detail::num(value) + " exceeds the scale upper bound hi=" +
                              detail::num(scale.hi),
                          "hi");
  }
  // Clamp guards the last ulp; the checks above already bound the input.
  return UnitValue(std::clamp((value - scale.lo) / scale.width(), 0.0, 1.0));
}

inline double denormalize(double unit, const OutcomeScale& scale) noexcept {
  return scale.lo + unit * scale.width();
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

inline UnitValue lie_mean(UnitValue observed_mean, double response_rate, UnitValue missing_mean) {
  const double p = require_unit(response_rate, "response_rate");
  return UnitValue(std::clamp(observed_mean * p + missing_mean * (1.0 - p), 0.0, 1.0));
}

inline double region_width(const Interval& region) noexcept { return region.width(); }

inline IdentificationRegion region_under_gamma(const ObservedStratum& stratum,
                                               const Interval& gamma) {
  const double p = stratum.response_rate;
  const double q = 1.0 - p;
  const double base = stratum.mean_or_zero() * p;
  return {Interval::from_computed(base + gamma.lo() * q, base + gamma.hi() * q),
          RestrictionSet{gamma}, stratum.label};
}

inline IdentificationRegion agnostic_region(const ObservedStratum& stratum) {
  auto r = region_under_gamma(stratum, Interval::unit());
  r.assumption = Agnostic{};
  return r;
}

inline IdentificationRegion mar_point(const ObservedStratum& stratum) {
  if (!stratum.observed_mean) {
    throw UndefinedMar("MAR is undefined for stratum '" + stratum.label +
                           "': response_rate is 0, so there are no respondents to anchor the point",
                       "response_rate");
  }
  return {Interval::point(stratum.observed_mean->value()), Mar{}, stratum.label};
}

/// Gamma implied by delta0 <= m - E(y | z = 0) <= delta1, intersected with
/// [0, 1]. Throws InfeasibleAssumption when the intersection is empty.
inline Interval bounded_variation_gamma(double observed_mean, double delta0, double delta1) {
  const BoundedVariation bv(delta0, delta1);
  const double lo = observed_mean - bv.delta1;
  const double hi = observed_mean - bv.delta0;
  if (hi < 0.0 || lo > 1.0) {
    throw InfeasibleAssumption(
        "assumption contradicts the logical outcome range: bounded variation [" +
            detail::num(delta0) + ", " + detail::num(delta1) + "] with observed mean " +
            detail::num(observed_mean) + " puts the missing mean in [" + detail::num(lo) + ", " +
            detail::num(hi) + "], outside [0, 1]",
        "delta");
  }
  return {std::max(lo, 0.0), std::min(hi, 1.0)};
}

inline IdentificationRegion bounded_variation_region(const ObservedStratum& stratum, double delta0,
                                                     double delta1) {
  if (!stratum.observed_mean) {
    throw UndefinedMar("bounded variation is undefined for stratum '" + stratum.label +
                           "': response_rate is 0, so the observed mean does not exist",
                       "response_rate");
  }
  const Interval gamma = bounded_variation_gamma(*stratum.observed_mean, delta0, delta1);
  auto r = region_under_gamma(stratum, gamma);
  r.assumption = BoundedVariation{delta0, delta1};
  return r;
}

/// Dispatches on the assumption kind.
inline IdentificationRegion identify(const ObservedStratum& stratum, const Assumption& assumption) {
  return std::visit(
      [&](const auto& a) -> IdentificationRegion {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Agnostic>) {
          return agnostic_region(stratum);
        } else if constexpr (std::is_same_v<T, Mar>) {
          return mar_point(stratum);
        } else if constexpr (std::is_same_v<T, RestrictionSet>) {
          return region_under_gamma(stratum, a.gamma);
        } else {
          return bounded_variation_region(stratum, a.delta0, a.delta1);
        }
      },
      assumption);
}

// ---------------------------------------------------------------------------
// Sensitivity sweeps
// ---------------------------------------------------------------------------

struct DeltaPair {
  double delta0 = 0.0;
  double delta1 = 0.0;
};

struct SweepEntry {
  DeltaPair deltas;
  std::optional<IdentificationRegion> region;  // empty when infeasible
  std::string reason;                          // why the pair is infeasible
  bool feasible() const noexcept { return region.has_value(); }
};

inline std::vector<SweepEntry> sweep_bounded_variation(const ObservedStratum& stratum,
                                                       std::span<const DeltaPair> deltas) {
  std::vector<SweepEntry> out;
  out.reserve(deltas.size());
  for (const auto& d : deltas) {
    BoundedVariation check(d.delta0, d.delta1);  // ordering is a precondition
    (void)check;
    SweepEntry e{d, std::nullopt, {}};
    try {
      e.region = bounded_variation_region(stratum, d.delta0, d.delta1);
    } catch (const InfeasibleAssumption& ex) {
      e.reason = ex.what();
    } catch (const UndefinedMar& ex) {
      e.reason = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Grid start, start + step, ..., stop (inclusive, up to round-off).
/// Symmetric grids produce pairs (-d, d); one-sided grids produce (0, d).
inline std::vector<DeltaPair> delta_grid(double start, double stop, double step, bool symmetric) {
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
    throw ValidationError("delta grid requires finite start <= stop and step > 0", "deltas");
  }
  if (start < 0.0) throw ValidationError("delta grid start must be >= 0", "deltas");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 1'000'000) throw LimitExceeded("delta grid has more than 10^6 points", "deltas");
  std::vector<DeltaPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Snap to 1e-12 so 3 * 0.05 prints as 0.15.
    const double d = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
    if (symmetric) {
      out.push_back({d == 0.0 ? 0.0 : -d, d});
    } else {
      out.push_back({0.0, d});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text forms used by the CLI: agnostic | mar | gamma:LO,HI | bv:D0,D1
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_double(std::string_view s, std::string_view field) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError("cannot parse '" + std::string(s) + "' as a number for " +
                              std::string(field),
                          std::string(field));
  }
  return v;
}

inline std::pair<double, double> parse_pair(std::string_view s, std::string_view field) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    throw ValidationError(std::string(field) + " expects two comma-separated numbers",
                          std::string(field));
  }
  return {parse_double(s.substr(0, comma), field), parse_double(s.substr(comma + 1), field)};
}

}  // namespace detail

inline Assumption parse_assumption(std::string_view text) {
  if (text == "agnostic") return Agnostic{};
  if (text == "mar") return Mar{};
  if (text.starts_with("gamma:")) {
    const auto [lo, hi] = detail::parse_pair(text.substr(6), "gamma");
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
      throw ValidationError("gamma must be a subinterval of [0, 1]", "gamma");
    }
    return RestrictionSet{Interval(lo, hi)};
  }
  if (text.starts_with("bv:")) {
    const auto [d0, d1] = detail::parse_pair(text.substr(3), "bv");
    return BoundedVariation(d0, d1);
  }
  throw ValidationError("unknown assumption '" + std::string(text) +
                            "'; expected agnostic, mar, gamma:LO,HI or bv:D0,D1",
                        "assumption");
}

}  // namespace partid
