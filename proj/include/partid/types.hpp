#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>

#include "partid/errors.hpp"

namespace partid {

// Absolute tolerance for equality of computed endpoints.
inline constexpr double kTolerance = 1e-12;

namespace detail {

/// Shortest decimal that round-trips to the same double.
inline std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
  return std::string(buf, ptr);
}

}  // namespace detail

/// Original-unit bounds of a bounded outcome. Everything else in the library
/// works on the normalized range [0, 1].
struct OutcomeScale {
  double lo = 0.0;
  double hi = 1.0;

  OutcomeScale() = default;
  OutcomeScale(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw ValidationError("outcome scale requires finite lo < hi, got lo=" + detail::num(lo) +
                                " hi=" + detail::num(hi),
                            "scale");
    }
  }

  double width() const noexcept { return hi - lo; }
  bool is_unit() const noexcept { return lo == 0.0 && hi == 1.0; }
};

/// A real number in [0, 1]. Converts implicitly to double for arithmetic;
/// construction from double is checked.
class UnitValue {
 public:
  constexpr UnitValue() = default;
  explicit UnitValue(double v, std::string_view field = "value") : v_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(std::string(field) + " must lie in [0, 1], got " + detail::num(v),
                            std::string(field));
    }
  }

  constexpr double value() const noexcept { return v_; }
  constexpr operator double() const noexcept { return v_; }

 private:
  double v_ = 0.0;
};

/// Checks a probability-like quantity without wrapping it.
inline double require_unit(double v, std::string_view field) {
  return UnitValue(v, field).value();
}

/// Closed subinterval [lo, hi] of [0, 1].
class Interval {
 public:
  Interval() : lo_(0.0), hi_(1.0) {}
  Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
      throw ValidationError("interval must satisfy 0 <= lo <= hi <= 1, got [" + detail::num(lo) +
                                ", " + detail::num(hi) + "]",
                            "interval");
    }
  }

  static Interval unit() { return {}; }
  static Interval point(double v) { return {v, v}; }

  /// Builds an interval from computed endpoints, absorbing round-off that
  /// pushes an endpoint past [0, 1] or past the other endpoint by at most
  /// kTolerance.
  static Interval from_computed(double lo, double hi) {
    auto snap = [](double v) {
      if (v < 0.0 && v >= -kTolerance) return 0.0;
      if (v > 1.0 && v <= 1.0 + kTolerance) return 1.0;
      return v;
    };
    lo = snap(lo);
    hi = snap(hi);
    if (lo > hi && lo - hi <= kTolerance) hi = lo;
    return {lo, hi};
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  double midpoint() const noexcept { return 0.5 * (lo_ + hi_); }
  bool is_point() const noexcept { return lo_ == hi_; }

  bool contains(double v, double tol = kTolerance) const noexcept {
    return v >= lo_ - tol && v <= hi_ + tol;
  }
  bool contains(const Interval& other, double tol = kTolerance) const noexcept {
    return other.lo_ >= lo_ - tol && other.hi_ <= hi_ + tol;
  }

  std::optional<Interval> intersect(const Interval& other) const {
    const double lo = std::max(lo_, other.lo_);
    const double hi = std::min(hi_, other.hi_);
    if (lo > hi) return std::nullopt;
    return Interval(lo, hi);
  }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_;
  double hi_;
};

inline std::string to_string(const Interval& iv) {
  return "[" + detail::num(iv.lo()) + ", " + detail::num(iv.hi()) + "]";
}

// ---------------------------------------------------------------------------
// Assumptions on the mean of the unobserved sub-population.
// ---------------------------------------------------------------------------

/// No restriction: the missing mean may be anywhere in [0, 1].
struct Agnostic {
  friend bool operator==(const Agnostic&, const Agnostic&) = default;
};

/// Missing at random: the missing mean equals the observed mean.
struct Mar {
  friend bool operator==(const Mar&, const Mar&) = default;
};

/// The missing mean is restricted to `gamma`.
struct RestrictionSet {
  Interval gamma;
  friend bool operator==(const RestrictionSet&, const RestrictionSet&) = default;
};

/// delta0 <= E(y | observed) - E(y | missing) <= delta1. Either sign is
/// accepted; only the ordering is enforced.
struct BoundedVariation {
  double delta0 = 0.0;
  double delta1 = 0.0;

  BoundedVariation() = default;
  BoundedVariation(double d0, double d1) : delta0(d0), delta1(d1) {
    if (!std::isfinite(d0) || !std::isfinite(d1)) {
      throw ValidationError("bounded variation deltas must be finite", "delta");
    }
    if (!(d0 <= d1)) {
      throw ValidationError("bounded variation requires delta0 <= delta1, got delta0=" +
                                detail::num(d0) + " delta1=" + detail::num(d1),
                            "delta0");
    }
  }
  friend bool operator==(const BoundedVariation&, const BoundedVariation&) = default;
};

using Assumption = std::variant<Agnostic, Mar, RestrictionSet, BoundedVariation>;

inline std::string to_string(const Assumption& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Agnostic>) {
          return "agnostic";
        } else if constexpr (std::is_same_v<T, Mar>) {
          return "mar";
        } else if constexpr (std::is_same_v<T, RestrictionSet>) {
          return "gamma:" + detail::num(v.gamma.lo()) + "," + detail::num(v.gamma.hi());
        } else {
          return "bv:" + detail::num(v.delta0) + "," + detail::num(v.delta1);
        }
      },
      a);
}

}  // namespace partid
