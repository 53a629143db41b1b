#pragma once

// JSON encodings of the domain types. Readers are strict: unknown fields are
// rejected and every error carries the JSON path of the offending value.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "partid/decision.hpp"
#include "partid/errors.hpp"
#include "partid/identification.hpp"
#include "partid/polling.hpp"
#include "partid/simulation.hpp"
#include "partid/treatment.hpp"
#include "partid/types.hpp"

namespace partid::json_io {

using json = nlohmann::json;

/// Read-only view of a JSON object that checks field names and types.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(at(key), "unknown field '" + key + "'");
      }
    }
  }

  bool has(std::string_view key) const {
    const auto it = j_.find(std::string(key));
    return it != j_.end() && !it->is_null();
  }

  std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }

  const json& get(std::string_view key) const {
    if (!has(key)) fail(at(key), "missing required field '" + std::string(key) + "'");
    return j_.at(std::string(key));
  }

  double number(std::string_view key) const { return as_number(get(key), at(key)); }

  std::optional<double> opt_number(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::string text(std::string_view key) const {
    const json& v = get(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::string text_or(std::string_view key, std::string fallback) const {
    return has(key) ? text(key) : std::move(fallback);
  }

  bool boolean_or(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) fail(at(key), "expected a boolean");
    return v.get<bool>();
  }

  const std::string& path() const noexcept { return path_; }

  [[noreturn]] static void fail(const std::string& path, const std::string& message) {
    throw ValidationError(path + ": " + message, path);
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

 private:
  const json& j_;
  std::string path_;
};

/// Runs `f`, prefixing any ValidationError lacking a path with `path`.
template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    if (!e.detail().empty() && e.detail().front() == '/') throw;
    const std::string loc = e.detail().empty() ? path : path + "/" + e.detail();
    throw ValidationError(loc + ": " + e.what(), loc);
  }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

inline json to_json(const Interval& iv) {
  return {{"lo", iv.lo()}, {"hi", iv.hi()}, {"width", iv.width()}};
}

inline Interval interval_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path, {"lo", "hi"});
  const double lo = r.number("lo");
  const double hi = r.number("hi");
  return at_path(path, [&] { return Interval(lo, hi); });
}

inline OutcomeScale scale_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path, {"lo", "hi"});
  const double lo = r.number("lo");
  const double hi = r.number("hi");
  return at_path(path, [&] { return OutcomeScale(lo, hi); });
}

inline json to_json(const Assumption& a) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Agnostic>) {
          return {{"type", "agnostic"}};
        } else if constexpr (std::is_same_v<T, Mar>) {
          return {{"type", "mar"}};
        } else if constexpr (std::is_same_v<T, RestrictionSet>) {
          return {{"type", "restriction_set"}, {"gamma", {{"lo", v.gamma.lo()}, {"hi", v.gamma.hi()}}}};
        } else {
          return {{"type", "bounded_variation"}, {"delta0", v.delta0}, {"delta1", v.delta1}};
        }
      },
      a);
}

inline Assumption assumption_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) ObjectReader::fail(path, "expected an object");
  const auto it = j.find("type");
  if (it == j.end() || !it->is_string()) ObjectReader::fail(path + "/type", "expected a string");
  const std::string type = it->get<std::string>();
  if (type == "agnostic") {
    ObjectReader r(j, path, {"type"});
    return Agnostic{};
  }
  if (type == "mar") {
    ObjectReader r(j, path, {"type"});
    return Mar{};
  }
  if (type == "restriction_set") {
    ObjectReader r(j, path, {"type", "gamma"});
    return RestrictionSet{interval_from_json(r.get("gamma"), r.at("gamma"))};
  }
  if (type == "bounded_variation") {
    ObjectReader r(j, path, {"type", "delta0", "delta1"});
    const double d0 = r.number("delta0");
    const double d1 = r.number("delta1");
    return at_path(path, [&] { return Assumption(BoundedVariation(d0, d1)); });
  }
  ObjectReader::fail(path + "/type", "unknown assumption type '" + type +
                                         "'; expected agnostic, mar, restriction_set or bounded_variation");
}

inline std::vector<Assumption> assumptions_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) ObjectReader::fail(path, "expected an array");
  std::vector<Assumption> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(assumption_from_json(j[i], path + "/" + std::to_string(i)));
  }
  return out;
}

inline json error_json(const std::string& code, const std::string& message, const std::string& detail) {
  return {{"code", code}, {"message", message}, {"detail", detail}};
}

inline json error_json(const Error& e) { return error_json(to_string(e.code()), e.what(), e.detail()); }

/// Reads delta pairs from either {"deltas": [[d0, d1], ...]} or
/// {"grid": {"start", "stop", "step", "symmetric"}} members of `r`.
inline std::vector<DeltaPair> deltas_from_json(const ObjectReader& r) {
  if (r.has("deltas") && r.has("grid")) {
    ObjectReader::fail(r.path(), "give either 'deltas' or 'grid', not both");
  }
  std::vector<DeltaPair> out;
  if (r.has("deltas")) {
    const json& arr = r.get("deltas");
    if (!arr.is_array()) ObjectReader::fail(r.at("deltas"), "expected an array of [delta0, delta1] pairs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.at("deltas") + "/" + std::to_string(i);
      if (!arr[i].is_array() || arr[i].size() != 2) ObjectReader::fail(p, "expected [delta0, delta1]");
      const double d0 = ObjectReader::as_number(arr[i][0], p + "/0");
      const double d1 = ObjectReader::as_number(arr[i][1], p + "/1");
      at_path(p, [&] { return BoundedVariation(d0, d1); });
      out.push_back({d0, d1});
    }
  } else if (r.has("grid")) {
    ObjectReader g(r.get("grid"), r.at("grid"), {"start", "stop", "step", "symmetric"});
    const double start = g.number("start");
    const double stop = g.number("stop");
    const double step = g.number("step");
    const bool symmetric = g.boolean_or("symmetric", true);
    out = at_path(g.path(), [&] { return delta_grid(start, stop, step, symmetric); });
  }
  return out;
}

inline json sweep_rows_json(std::span<const SweepRow> rows, std::span<const SweepEntry> entries) {
  json out = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    json row = {{"delta0", r.delta0}, {"delta1", r.delta1}, {"feasible", r.feasible}};
    if (r.feasible) {
      row["lo"] = r.lo;
      row["hi"] = r.hi;
      row["width"] = r.width;
      row["mmr_predictor"] = r.mmr_predictor;
      row["max_regret"] = r.max_regret;
    } else {
      row["lo"] = nullptr;
      row["hi"] = nullptr;
      row["width"] = nullptr;
      row["mmr_predictor"] = nullptr;
      row["max_regret"] = nullptr;
      if (i < entries.size()) row["reason"] = entries[i].reason;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline TreatmentProblem treatment_problem_from_json(const json& j, const std::string& path = "") {
  ObjectReader r(j, path, {"stratum_label", "arms", "criterion"});
  const json& arms = r.get("arms");
  if (!arms.is_array()) ObjectReader::fail(r.at("arms"), "expected an array");
  if (arms.size() < 2) {
    ObjectReader::fail(r.at("arms"), "a treatment problem needs at least 2 arms, got " +
                                         std::to_string(arms.size()));
  }
  std::vector<TreatmentArm> out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const std::string p = r.at("arms") + "/" + std::to_string(i);
    ObjectReader a(arms[i], p, {"label", "share", "observed_mean", "assumption"});
    const std::string label = a.text("label");
    const double share = a.number("share");
    const auto mean = a.opt_number("observed_mean");
    const Assumption assumption =
        a.has("assumption") ? assumption_from_json(a.get("assumption"), a.at("assumption")) : Agnostic{};
    out.push_back(at_path(p, [&] { return TreatmentArm(label, share, mean, assumption); }));
  }
  return at_path(path.empty() ? "/arms" : path + "/arms",
                 [&] { return TreatmentProblem(r.text_or("stratum_label", "all"), std::move(out)); });
}

inline std::vector<PollSummary> load_polls_json(const json& j) {
  if (!j.is_array()) ObjectReader::fail("", "expected an array of poll objects");
  std::vector<PollSummary> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "/" + std::to_string(i);
    ObjectReader r(j[i], p, {"poll_id", "candidate", "respondent_share", "response_rate", "as_of"});
    out.push_back(make_poll(r.text("poll_id"), r.text("candidate"), r.number("respondent_share"),
                            r.number("response_rate"), r.text_or("as_of", ""), "row " + std::to_string(i)));
  }
  return out;
}

inline SimConfig sim_config_from_json(const json& j, const std::string& path = "") {
  ObjectReader r(j, path, {"outcome", "mechanism", "sample_sizes", "replications", "seed", "assumptions", "threads"});
  SimConfig c;
  if (r.has("outcome")) {
    ObjectReader o(r.get("outcome"), r.at("outcome"), {"law", "alpha", "beta", "scale"});
    const std::string law = o.text_or("law", "beta");
    if (law != "beta") ObjectReader::fail(o.at("law"), "unsupported outcome law '" + law + "'; expected beta");
    c.outcome.alpha = o.opt_number("alpha").value_or(2.0);
    c.outcome.beta = o.opt_number("beta").value_or(2.0);
    if (o.has("scale")) c.outcome.scale = scale_from_json(o.get("scale"), o.at("scale"));
  }
  {
    const json& m = r.get("mechanism");
    const std::string mp = r.at("mechanism");
    if (!m.is_object() || !m.contains("type") || !m["type"].is_string()) {
      ObjectReader::fail(mp + "/type", "expected a mechanism type string");
    }
    const std::string type = m["type"].get<std::string>();
    if (type == "mcar") {
      ObjectReader mr(m, mp, {"type", "observe_prob"});
      c.mechanism = Mcar{mr.number("observe_prob")};
    } else if (type == "reservation_threshold") {
      ObjectReader mr(m, mp, {"type", "threshold"});
      c.mechanism = ReservationThreshold{mr.number("threshold")};
    } else if (type == "latent_index") {
      ObjectReader mr(m, mp, {"type", "correlation", "target_rate"});
      c.mechanism = LatentIndex{mr.number("correlation"), mr.number("target_rate")};
    } else {
      ObjectReader::fail(mp + "/type", "unknown mechanism '" + type +
                                           "'; expected mcar, reservation_threshold or latent_index");
    }
  }
  const json& sizes = r.get("sample_sizes");
  if (!sizes.is_array()) ObjectReader::fail(r.at("sample_sizes"), "expected an array of integers");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!sizes[i].is_number_integer() || sizes[i].get<long long>() < 10) {
      ObjectReader::fail(r.at("sample_sizes") + "/" + std::to_string(i), "expected an integer >= 10");
    }
    c.sample_sizes.push_back(sizes[i].get<std::size_t>());
  }
  const json& reps = r.get("replications");
  if (!reps.is_number_integer() || reps.get<long long>() < 1) {
    ObjectReader::fail(r.at("replications"), "expected an integer >= 1");
  }
  c.replications = reps.get<std::size_t>();
  if (r.has("seed")) {
    const json& s = r.get("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0) {
      ObjectReader::fail(r.at("seed"), "expected a nonnegative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (r.has("threads")) {
    const json& t = r.get("threads");
    if (!t.is_number_integer() || t.get<long long>() < 0) ObjectReader::fail(r.at("threads"), "expected an integer >= 0");
    c.threads = t.get<unsigned>();
  }
  c.assumptions = r.has("assumptions") ? assumptions_from_json(r.get("assumptions"), r.at("assumptions"))
                                       : std::vector<Assumption>{Agnostic{}, Mar{}};
  at_path(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

inline json to_json(const SimReport& report) {
  json cells = json::array();
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& c : report.cells) {
    cells.push_back({{"n", c.n},
                     {"assumption", to_json(c.assumption)},
                     {"bias_mean", num(c.bias_mean)},
                     {"bias_se", num(c.bias_se)},
                     {"lo_mean", num(c.lo_mean)},
                     {"hi_mean", num(c.hi_mean)},
                     {"coverage", c.coverage},
                     {"feasible", c.feasible},
                     {"replications", c.replications}});
  }
  return {{"true_mean", report.true_mean}, {"mechanism", report.mechanism}, {"cells", std::move(cells)}};
}

}  // namespace partid::json_io
