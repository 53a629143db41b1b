#pragma once

// Monte Carlo experiments on missing outcome data. A bounded outcome is drawn
// from a scaled Beta law and hidden by a missingness mechanism; each replicate
// is reduced to its plug-in stratum and pushed through the identification
// machinery, and the results are compared with the known true mean.
//
// Seeding scheme (version 1): replicate r of sample size index k uses a
// std::mt19937_64 seeded with splitmix64(seed ^ splitmix64(k << 32 | r)).
// Draws use the libstdc++ gamma and normal distributions, so bit-level
// reproducibility holds per standard library, not across them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "partid/decision.hpp"
#include "partid/errors.hpp"
#include "partid/identification.hpp"
#include "partid/types.hpp"

namespace partid {

inline constexpr int kSeedSchemeVersion = 1;

/// Beta(alpha, beta) scaled onto `scale`.
struct BetaLaw {
  double alpha = 2.0;
  double beta = 2.0;
  OutcomeScale scale;

  double unit_mean() const noexcept { return alpha / (alpha + beta); }
  double unit_cdf(double y) const { return boost::math::ibeta(alpha, beta, std::clamp(y, 0.0, 1.0)); }
  double unit_quantile(double q) const { return boost::math::ibeta_inv(alpha, beta, q); }
};

/// Observe with fixed probability, independent of y.
struct Mcar {
  double observe_prob = 1.0;
};

/// Observe y iff y > threshold (original units).
struct ReservationThreshold {
  double threshold = 0.0;
};

/// Observe iff correlation * g(y) + sqrt(1 - correlation^2) * e > c, where
/// g(y) = Phi^{-1}(F(y)) is the normal score of y, e ~ N(0, 1), and the
/// cutoff c = Phi^{-1}(1 - target_rate) makes the response rate target_rate.
struct LatentIndex {
  double correlation = 0.0;
  double target_rate = 0.5;
};

using MissingnessMechanism = std::variant<Mcar, ReservationThreshold, LatentIndex>;

inline std::string to_string(const MissingnessMechanism& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Mcar>) {
          return "mcar(" + detail::num(v.observe_prob) + ")";
        } else if constexpr (std::is_same_v<T, ReservationThreshold>) {
          return "reservation_threshold(" + detail::num(v.threshold) + ")";
        } else {
          return "latent_index(" + detail::num(v.correlation) + ", " + detail::num(v.target_rate) + ")";
        }
      },
      m);
}

struct SimConfig {
  BetaLaw outcome;
  MissingnessMechanism mechanism = Mcar{};
  std::vector<std::size_t> sample_sizes;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  std::vector<Assumption> assumptions;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (!(outcome.alpha > 0.0) || !(outcome.beta > 0.0) || !std::isfinite(outcome.alpha) ||
        !std::isfinite(outcome.beta)) {
      throw ValidationError("beta law parameters must be finite and positive", "outcome");
    }
    std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Mcar>) {
            require_unit(m.observe_prob, "observe_prob");
          } else if constexpr (std::is_same_v<T, ReservationThreshold>) {
            if (!std::isfinite(m.threshold)) throw ValidationError("threshold must be finite", "threshold");
          } else {
            if (!(m.correlation >= -1.0 && m.correlation <= 1.0)) {
              throw ValidationError("correlation must lie in [-1, 1]", "correlation");
            }
            if (!(m.target_rate > 0.0 && m.target_rate < 1.0)) {
              throw ValidationError("target_rate must lie in (0, 1)", "target_rate");
            }
          }
        },
        mechanism);
    if (replications < 1) throw ValidationError("replications must be at least 1", "replications");
    if (sample_sizes.empty()) throw ValidationError("sample_sizes must not be empty", "sample_sizes");
    for (auto n : sample_sizes) {
      if (n < 10) throw ValidationError("sample sizes must be at least 10", "sample_sizes");
    }
  }
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::size_t size_index, std::size_t replicate) {
  const std::uint64_t key = (static_cast<std::uint64_t>(size_index) << 32) ^ replicate;
  return splitmix64(seed ^ splitmix64(key));
}

/// y in normalized units; observed is z.
struct Draw {
  double y = 0.0;
  bool observed = false;
};

/// Sequential source of (y, z) draws for one replicate.
class SampleStream {
 public:
  SampleStream(const SimConfig& config, std::uint64_t seed)
      : law_(config.outcome),
        mechanism_(config.mechanism),
        rng_(seed),
        gamma_a_(config.outcome.alpha),
        gamma_b_(config.outcome.beta) {
    if (const auto* t = std::get_if<ReservationThreshold>(&mechanism_)) {
      threshold_ = (t->threshold - law_.scale.lo) / law_.scale.width();
    }
    if (const auto* li = std::get_if<LatentIndex>(&mechanism_)) {
      const boost::math::normal_distribution<double> std_normal;
      cutoff_ = boost::math::quantile(std_normal, 1.0 - li->target_rate);
      noise_scale_ = std::sqrt(std::max(0.0, 1.0 - li->correlation * li->correlation));
    }
  }

  Draw next() {
    const double a = gamma_a_(rng_);
    const double b = gamma_b_(rng_);
    const double y = a + b > 0.0 ? a / (a + b) : 0.5;
    return {y, observe(y)};
  }

 private:
  double uniform() noexcept { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  bool observe(double y) {
    if (const auto* m = std::get_if<Mcar>(&mechanism_)) return uniform() < m->observe_prob;
    if (std::holds_alternative<ReservationThreshold>(mechanism_)) return y > threshold_;
    const auto& li = std::get<LatentIndex>(mechanism_);
    const boost::math::normal_distribution<double> std_normal;
    const double f = std::clamp(law_.unit_cdf(y), 1e-300, 1.0 - 1e-16);
    const double score = boost::math::quantile(std_normal, f);
    return li.correlation * score + noise_scale_ * normal_(rng_) > cutoff_;
  }

  BetaLaw law_;
  MissingnessMechanism mechanism_;
  std::mt19937_64 rng_;
  std::gamma_distribution<double> gamma_a_;
  std::gamma_distribution<double> gamma_b_;
  std::normal_distribution<double> normal_;
  double threshold_ = 0.0;
  double cutoff_ = 0.0;
  double noise_scale_ = 1.0;
};

inline std::vector<Draw> generate_sample(const SimConfig& config, std::size_t n, std::uint64_t seed) {
  config.validate();
  SampleStream stream(config, seed);
  std::vector<Draw> out(n);
  for (auto& d : out) d = stream.next();
  return out;
}

inline ObservedStratum plug_in_stratum(std::span<const Draw> sample, std::string label = "sample") {
  if (sample.empty()) throw ValidationError("plug-in stratum needs a nonempty sample", "sample");
  double sum = 0.0;
  std::size_t observed = 0;
  for (const auto& d : sample) {
    if (d.observed) {
      sum += d.y;
      ++observed;
    }
  }
  const double rate = static_cast<double>(observed) / static_cast<double>(sample.size());
  return {std::move(label),
          observed ? std::optional<double>(std::clamp(sum / static_cast<double>(observed), 0.0, 1.0))
                   : std::nullopt,
          rate};
}

// ---------------------------------------------------------------------------
// Population quantities of the data-generating process
// ---------------------------------------------------------------------------

/// True mean E(y) in normalized units.
inline double true_unit_mean(const SimConfig& config) { return config.outcome.unit_mean(); }

/// Exact (m, p) of the DGP: mean among the observed and response rate.
inline ObservedStratum population_stratum(const SimConfig& config) {
  config.validate();
  const BetaLaw& law = config.outcome;
  const double a = law.alpha;
  const double b = law.beta;
  const double mu = law.unit_mean();
  auto make = [](double mean, double rate) {
    rate = std::clamp(rate, 0.0, 1.0);
    return ObservedStratum("population",
                           rate > 0.0 ? std::optional<double>(std::clamp(mean, 0.0, 1.0)) : std::nullopt,
                           rate);
  };
  // Observe iff y > t (upper) or y < t (lower), t normalized.
  auto upper_tail = [&](double t) {
    if (t <= 0.0) return make(mu, 1.0);
    if (t >= 1.0) return make(0.0, 0.0);
    const double p = boost::math::ibetac(a, b, t);
    return make(p > 0.0 ? mu * boost::math::ibetac(a + 1.0, b, t) / p : 0.0, p);
  };
  auto lower_tail = [&](double t) {
    if (t >= 1.0) return make(mu, 1.0);
    if (t <= 0.0) return make(0.0, 0.0);
    const double p = boost::math::ibeta(a, b, t);
    return make(p > 0.0 ? mu * boost::math::ibeta(a + 1.0, b, t) / p : 0.0, p);
  };

  if (const auto* m = std::get_if<Mcar>(&config.mechanism)) return make(mu, m->observe_prob);
  if (const auto* t = std::get_if<ReservationThreshold>(&config.mechanism)) {
    return upper_tail((t->threshold - law.scale.lo) / law.scale.width());
  }
  const auto& li = std::get<LatentIndex>(config.mechanism);
  if (li.correlation >= 1.0) return upper_tail(law.unit_quantile(1.0 - li.target_rate));
  if (li.correlation <= -1.0) return lower_tail(law.unit_quantile(li.target_rate));

  const boost::math::normal_distribution<double> std_normal;
  const double cutoff = boost::math::quantile(std_normal, 1.0 - li.target_rate);
  const double noise = std::sqrt(1.0 - li.correlation * li.correlation);
  auto observe_prob = [&](double y) {
    const double f = std::clamp(law.unit_cdf(y), 1e-300, 1.0 - 1e-16);
    const double score = boost::math::quantile(std_normal, f);
    return boost::math::cdf(std_normal, (li.correlation * score - cutoff) / noise);
  };
  auto density = [&](double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y)) / boost::math::beta(a, b);
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double p = Quad::integrate([&](double y) { return density(y) * observe_prob(y); }, 0.0, 1.0, 15, 1e-12);
  const double first = Quad::integrate([&](double y) { return y * density(y) * observe_prob(y); }, 0.0, 1.0, 15, 1e-12);
  return make(p > 0.0 ? first / p : 0.0, p);
}

struct PopulationCheck {
  Assumption assumption;
  std::optional<Interval> region;  // empty when the assumption cannot be applied
  bool covers = false;
};

/// Regions computed from the exact DGP quantities rather than a sample.
inline std::vector<PopulationCheck> population_regions(const SimConfig& config) {
  const ObservedStratum stratum = population_stratum(config);
  const double truth = true_unit_mean(config);
  std::vector<PopulationCheck> out;
  for (const auto& a : config.assumptions) {
    PopulationCheck c{a, std::nullopt, false};
    try {
      c.region = identify(stratum, a).region;
      c.covers = c.region->contains(truth, 1e-9);
    } catch (const InfeasibleAssumption&) {
    } catch (const UndefinedMar&) {
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Aggregates for one (sample size, assumption) cell, in original units.
/// Bias is that of the region midpoint (the minimax-regret point prediction);
/// under MAR the midpoint is the MAR estimate itself.
struct SimCell {
  std::size_t n = 0;
  Assumption assumption;
  double bias_mean = 0.0;
  double bias_se = 0.0;
  double lo_mean = 0.0;
  double hi_mean = 0.0;
  double coverage = 0.0;      // covered / replications; failed regions do not cover
  std::size_t feasible = 0;   // replicates where the assumption could be applied
  std::size_t replications = 0;
};

struct SimReport {
  double true_mean = 0.0;  // original units
  std::string mechanism;
  std::vector<SimCell> cells;  // sample-size major, assumption minor
};

namespace detail {

struct ReplicateResult {
  std::vector<std::optional<Interval>> regions;  // one per assumption
};

inline ReplicateResult run_replicate(const SimConfig& config, std::size_t n, std::uint64_t seed) {
  SampleStream stream(config, seed);
  double sum = 0.0;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Draw d = stream.next();
    if (d.observed) {
      sum += d.y;
      ++observed;
    }
  }
  const double rate = static_cast<double>(observed) / static_cast<double>(n);
  const ObservedStratum stratum(
      "replicate",
      observed ? std::optional<double>(std::clamp(sum / static_cast<double>(observed), 0.0, 1.0))
               : std::nullopt,
      rate);
  ReplicateResult r;
  for (const auto& a : config.assumptions) {
    try {
      r.regions.emplace_back(identify(stratum, a).region);
    } catch (const InfeasibleAssumption&) {
      r.regions.emplace_back(std::nullopt);
    } catch (const UndefinedMar&) {
      r.regions.emplace_back(std::nullopt);
    }
  }
  return r;
}

}  // namespace detail

inline SimReport run_study(const SimConfig& config) {
  config.validate();
  const OutcomeScale& scale = config.outcome.scale;
  const double truth = true_unit_mean(config);
  SimReport report{denormalize(truth, scale), to_string(config.mechanism), {}};

  const std::size_t reps = config.replications;
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));

  for (std::size_t k = 0; k < config.sample_sizes.size(); ++k) {
    const std::size_t n = config.sample_sizes[k];
    std::vector<detail::ReplicateResult> results(reps);
    auto work = [&](unsigned worker) {
      for (std::size_t r = worker; r < reps; r += threads) {
        results[r] = detail::run_replicate(config, n, derive_seed(config.seed, k, r));
      }
    };
    if (threads <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& t : pool) t.join();
    }

    // Aggregate in replicate order so the report does not depend on scheduling.
    for (std::size_t j = 0; j < config.assumptions.size(); ++j) {
      SimCell cell;
      cell.n = n;
      cell.assumption = config.assumptions[j];
      cell.replications = reps;
      double sum_bias = 0.0, sum_lo = 0.0, sum_hi = 0.0;
      std::size_t covered = 0;
      std::vector<double> biases;
      for (const auto& res : results) {
        const auto& region = res.regions[j];
        if (!region) continue;
        ++cell.feasible;
        const double bias = (region->midpoint() - truth) * scale.width();
        biases.push_back(bias);
        sum_bias += bias;
        sum_lo += denormalize(region->lo(), scale);
        sum_hi += denormalize(region->hi(), scale);
        if (region->contains(truth)) ++covered;
      }
      if (cell.feasible) {
        const double f = static_cast<double>(cell.feasible);
        cell.bias_mean = sum_bias / f;
        cell.lo_mean = sum_lo / f;
        cell.hi_mean = sum_hi / f;
        if (cell.feasible > 1) {
          double ss = 0.0;
          for (double b : biases) ss += (b - cell.bias_mean) * (b - cell.bias_mean);
          cell.bias_se = std::sqrt(ss / (f - 1.0)) / std::sqrt(f);
        }
      } else {
        cell.bias_mean = cell.bias_se = cell.lo_mean = cell.hi_mean = std::nan("");
      }
      cell.coverage = static_cast<double>(covered) / static_cast<double>(reps);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

inline constexpr const char* kSimCsvHeader = "n,assumption,bias_mean,bias_se,lo_mean,hi_mean,coverage";

inline void write_report_csv(std::ostream& out, const SimReport& report) {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  out << kSimCsvHeader << '\n';
  for (const auto& c : report.cells) {
    // gamma:/bv: labels contain a comma, so the field is quoted.
    const std::string label = to_string(c.assumption);
    out << c.n << ',';
    if (label.find(',') != std::string::npos) {
      out << '"' << label << '"';
    } else {
      out << label;
    }
    out << ',' << num(c.bias_mean) << ',' << num(c.bias_se) << ',' << num(c.lo_mean) << ','
        << num(c.hi_mean) << ',' << num(c.coverage) << '\n';
  }
}

inline std::string format_report_text(const SimReport& report) {
  std::ostringstream os;
  os << "mechanism: " << report.mechanism << "\n";
  os << "true mean: " << std::fixed << std::setprecision(6) << report.true_mean << "\n";
  os << std::left << std::setw(10) << "n" << std::setw(22) << "assumption" << std::right
     << std::setw(12) << "bias" << std::setw(12) << "bias_se" << std::setw(12) << "lo"
     << std::setw(12) << "hi" << std::setw(10) << "coverage" << std::setw(10) << "feasible\n";
  for (const auto& c : report.cells) {
    os << std::left << std::setw(10) << c.n << std::setw(22) << to_string(c.assumption) << std::right
       << std::setw(12) << c.bias_mean << std::setw(12) << c.bias_se << std::setw(12) << c.lo_mean
       << std::setw(12) << c.hi_mean << std::setw(10) << std::setprecision(3) << c.coverage
       << std::setprecision(6) << std::setw(10) << (std::to_string(c.feasible) + "/" + std::to_string(c.replications))
       << "\n";
  }
  return os.str();
}

}  // namespace partid
