#pragma once

// Request handlers shared by the HTTP service and the CLI's --json output.
// Each handler maps a validated JSON request body to a JSON result; domain
// errors propagate as partid::Error and are mapped to statuses by `handle`.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "partid/decision.hpp"
#include "partid/errors.hpp"
#include "partid/identification.hpp"
#include "partid/json_io.hpp"
#include "partid/polling.hpp"
#include "partid/simulation.hpp"
#include "partid/treatment.hpp"

namespace partid::service {

using json = nlohmann::json;
using json_io::ObjectReader;

inline constexpr const char* kSchemaVersion = "1";
inline constexpr double kMaxSimulationWork = 1e8;  // replications x largest sample size

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return 400;
    case ErrorCode::infeasible_assumption:
    case ErrorCode::undefined_mar:
    case ErrorCode::limit_exceeded: return 422;
  }
  return 500;
}

namespace detail {

inline json versioned(json body) {
  body["schema_version"] = kSchemaVersion;
  return body;
}

inline json region_body(const Interval& region) {
  const auto pred = mmr_point_prediction(region);
  return {{"lo", region.lo()},
          {"hi", region.hi()},
          {"width", region.width()},
          {"mmr_predictor", pred.predictor.value()},
          {"max_regret", pred.max_regret}};
}

inline void require_unit_field(const ObjectReader& r, std::string_view key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::string msg = "must lie in [0, 1], got " + partid::detail::num(v);
    if (v > 1.0 && v <= 100.0) msg += "; if it is a percentage, divide by 100";
    ObjectReader::fail(r.at(key), msg);
  }
}

inline json criterion_json(const CriterionResult& r, const std::vector<std::string>& labels) {
  json set = json::array();
  for (auto i : r.optimal_set) set.push_back(labels[i]);
  return {{"criterion", to_string(r.criterion)},
          {"scores", r.scores},
          {"optimal_set", r.optimal_set},
          {"optimal_labels", std::move(set)},
          {"chosen", r.chosen},
          {"chosen_label", labels[r.chosen]}};
}

}  // namespace detail

/// POST /v1/region
/// {"mean", "rate", "assumption", "scale"?, "label"?}; with a scale, mean is
/// in original units and the response adds an "original" block.
inline json region(const json& body) {
  ObjectReader r(body, "", {"mean", "rate", "assumption", "scale", "label"});
  const double rate = r.number("rate");
  std::optional<double> mean = r.opt_number("mean");
  std::optional<OutcomeScale> scale;
  if (r.has("scale")) scale = json_io::scale_from_json(r.get("scale"), r.at("scale"));
  if (mean && scale) {
    mean = json_io::at_path(r.at("mean"), [&] { return normalize(*mean, *scale).value(); });
  }
  const Assumption assumption = r.has("assumption")
                                    ? json_io::assumption_from_json(r.get("assumption"), r.at("assumption"))
                                    : Assumption(Agnostic{});
  const std::string label = r.text_or("label", "stratum");
  detail::require_unit_field(r, "rate", rate);
  if (mean) detail::require_unit_field(r, "mean", *mean);
  const ObservedStratum stratum = json_io::at_path("", [&] { return ObservedStratum(label, mean, rate); });
  const Interval region = identify(stratum, assumption).region;
  json out = detail::region_body(region);
  out["label"] = label;
  out["assumption"] = json_io::to_json(assumption);
  if (scale) {
    const auto pred = mmr_point_prediction(region);
    out["original"] = {{"lo", denormalize(region.lo(), *scale)},
                       {"hi", denormalize(region.hi(), *scale)},
                       {"width", region.width() * scale->width()},
                       {"mmr_predictor", denormalize(pred.predictor, *scale)}};
  }
  return detail::versioned(std::move(out));
}

/// POST /v1/decide
/// {"welfare": [[...]], "actions"?, "states"?, "prior"?, "criteria"?}
inline json decide(const json& body) {
  ObjectReader r(body, "", {"welfare", "actions", "states", "prior", "criteria"});
  const json& rows = r.get("welfare");
  if (!rows.is_array()) ObjectReader::fail(r.at("welfare"), "expected an array of rows");
  std::vector<std::vector<double>> values;
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const std::string p = r.at("welfare") + "/" + std::to_string(c);
    if (!rows[c].is_array()) ObjectReader::fail(p, "expected an array of numbers");
    std::vector<double> row;
    for (std::size_t s = 0; s < rows[c].size(); ++s) {
      row.push_back(ObjectReader::as_number(rows[c][s], p + "/" + std::to_string(s)));
    }
    values.push_back(std::move(row));
  }
  WelfareMatrix base = json_io::at_path(r.at("welfare"), [&] { return WelfareMatrix::from_rows(values); });
  auto labels = [&](std::string_view key, std::size_t n, const std::vector<std::string>& fallback) {
    if (!r.has(key)) return fallback;
    const json& arr = r.get(key);
    if (!arr.is_array() || arr.size() != n) {
      ObjectReader::fail(r.at(key), "expected an array of " + std::to_string(n) + " labels");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) ObjectReader::fail(r.at(key) + "/" + std::to_string(i), "expected a string");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  };
  std::vector<double> flat;
  for (const auto& row : values) flat.insert(flat.end(), row.begin(), row.end());
  const WelfareMatrix w(labels("actions", base.action_count(), base.action_labels()),
                        labels("states", base.state_count(), base.state_labels()), std::move(flat));

  std::vector<std::string> criteria;
  if (r.has("criteria")) {
    const json& arr = r.get("criteria");
    if (!arr.is_array()) ObjectReader::fail(r.at("criteria"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.at("criteria") + "/" + std::to_string(i);
      if (!arr[i].is_string()) ObjectReader::fail(p, "expected a string");
      const auto name = arr[i].get<std::string>();
      if (name != "bayes" && name != "maximin" && name != "minimax_regret") {
        ObjectReader::fail(p, "unknown criterion '" + name + "'; expected bayes, maximin or minimax_regret");
      }
      criteria.push_back(name);
    }
  } else {
    if (r.has("prior")) criteria.push_back("bayes");
    criteria.push_back("maximin");
    criteria.push_back("minimax_regret");
  }

  json results = json::object();
  for (const auto& name : criteria) {
    if (name == "bayes") {
      if (!r.has("prior")) ObjectReader::fail(r.at("prior"), "the bayes criterion needs a prior");
      const json& arr = r.get("prior");
      if (!arr.is_array()) ObjectReader::fail(r.at("prior"), "expected an array of weights");
      std::vector<double> weights;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        weights.push_back(ObjectReader::as_number(arr[i], r.at("prior") + "/" + std::to_string(i)));
      }
      const auto result = json_io::at_path(r.at("prior"), [&] { return bayes_rank(w, Prior(weights)); });
      results["bayes"] = detail::criterion_json(result, w.action_labels());
    } else if (name == "maximin") {
      results["maximin"] = detail::criterion_json(maximin_rank(w), w.action_labels());
    } else {
      results["minimax_regret"] = detail::criterion_json(minimax_regret_rank(w), w.action_labels());
    }
  }

  const auto dom = eliminate_dominated(w);
  json pairs = json::array();
  for (const auto& [c, d] : dom.dominated_by) pairs.push_back({{"dominated", c}, {"dominator", d}});
  const RegretMatrix reg = regret_matrix(w);
  json regret = json::array();
  for (std::size_t c = 0; c < reg.action_count(); ++c) {
    json row = json::array();
    for (std::size_t s = 0; s < reg.state_count(); ++s) row.push_back(reg(c, s));
    regret.push_back(std::move(row));
  }
  return detail::versioned({{"actions", w.action_labels()},
                            {"states", w.state_labels()},
                            {"dominance", {{"surviving", dom.surviving}, {"dominated_by", std::move(pairs)}}},
                            {"regret", std::move(regret)},
                            {"results", std::move(results)}});
}

/// POST /v1/treatment: body is a treatment problem document.
inline json treatment(const json& body) {
  const TreatmentProblem problem = json_io::treatment_problem_from_json(body);
  std::string criterion = "all";
  if (body.contains("criterion") && !body["criterion"].is_null()) {
    if (!body["criterion"].is_string()) ObjectReader::fail("/criterion", "expected a string");
    criterion = body["criterion"].get<std::string>();
    if (criterion != "all" && criterion != "minimax_regret" && criterion != "maximin") {
      ObjectReader::fail("/criterion", "unknown criterion '" + criterion +
                                           "'; expected minimax_regret, maximin or all");
    }
  }
  const RectangularStateSpace space = problem_state_space(problem);
  json regions = json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    json reg = json_io::to_json(space.regions[i]);
    reg["label"] = space.labels[i];
    reg["assumption"] = json_io::to_json(problem.arms[i].assumption);
    regions.push_back(std::move(reg));
  }
  json dominance = json::array();
  for (const auto& [b, a] : arm_dominance(space)) {
    dominance.push_back({{"dominated", space.labels[b]}, {"dominator", space.labels[a]}});
  }
  json out = {{"stratum_label", problem.stratum_label},
              {"regions", std::move(regions)},
              {"dominance", std::move(dominance)},
              {"criterion", criterion}};
  if (criterion == "all" || criterion == "minimax_regret") {
    out["minimax_regret"] = detail::criterion_json(mmr_treatment_choice(space), space.labels);
  }
  if (criterion == "all" || criterion == "maximin") {
    out["maximin"] = detail::criterion_json(maximin_treatment_choice(space), space.labels);
  }
  out["chosen"] = criterion == "maximin" ? out["maximin"]["chosen_label"]
                                         : out["minimax_regret"]["chosen_label"];
  return detail::versioned(std::move(out));
}

namespace detail {

inline ObservedStratum stratum_from(const ObjectReader& r) {
  const double rate = r.number("rate");
  const auto mean = r.opt_number("mean");
  require_unit_field(r, "rate", rate);
  if (mean) require_unit_field(r, "mean", *mean);
  return json_io::at_path("", [&] { return ObservedStratum(r.text_or("label", "stratum"), mean, rate); });
}

}  // namespace detail

/// POST /v1/sweep
/// {"mean", "rate", "label"?, "deltas": [[d0, d1], ...]} or with "grid".
inline json sweep(const json& body) {
  ObjectReader r(body, "", {"mean", "rate", "label", "deltas", "grid"});
  const ObservedStratum stratum = detail::stratum_from(r);
  const auto deltas = json_io::deltas_from_json(r);
  if (deltas.empty()) ObjectReader::fail("", "a sweep needs 'deltas' or 'grid'");
  PollReport pseudo{};
  pseudo.sweep = sweep_bounded_variation(stratum, deltas);
  const auto rows = emit_sweep_table(pseudo);
  return detail::versioned({{"label", stratum.label}, {"rows", json_io::sweep_rows_json(rows, pseudo.sweep)}});
}

/// Shared by the poll-audit endpoint and the `poll --json` CLI output.
inline json poll_report_json(const PollReport& report) {
  json regions = json::array();
  for (const auto& o : report.regions) {
    json entry = {{"assumption", json_io::to_json(o.assumption)}};
    if (o.region) {
      entry.update(detail::region_body(o.region->region));
    } else {
      entry["error"] = json_io::error_json(o.error_code, o.error, "");
    }
    regions.push_back(std::move(entry));
  }
  const auto rows = emit_sweep_table(report);
  const Interval presented = round_outward(report.agnostic.region, 3);
  return detail::versioned(
      {{"poll_id", report.summary.poll_id},
       {"candidate", report.summary.candidate_label},
       {"respondent_share", report.summary.respondent_share.value()},
       {"response_rate", report.summary.response_rate},
       {"as_of", report.summary.as_of},
       {"agnostic", json_io::to_json(report.agnostic.region)},
       {"agnostic_reported", {{"lo", presented.lo()}, {"hi", presented.hi()}, {"digits", 3}}},
       {"mar_point", report.mar_point ? json(*report.mar_point) : json(nullptr)},
       {"mmr_prediction",
        {{"predictor", report.mmr_prediction.predictor.value()}, {"max_regret", report.mmr_prediction.max_regret}}},
       {"regions", std::move(regions)},
       {"sweep", json_io::sweep_rows_json(rows, report.sweep)}});
}

/// POST /v1/poll-audit
/// A poll record plus optional "assumptions" and "deltas"/"grid".
inline json poll_audit(const json& body) {
  ObjectReader r(body, "", {"poll_id", "candidate", "respondent_share", "response_rate", "as_of",
                            "assumptions", "deltas", "grid"});
  const PollSummary summary = json_io::at_path("", [&] {
    return make_poll(r.text("poll_id"), r.text("candidate"), r.number("respondent_share"),
                     r.number("response_rate"), r.text_or("as_of", ""));
  });
  const std::vector<Assumption> assumptions =
      r.has("assumptions") ? json_io::assumptions_from_json(r.get("assumptions"), r.at("assumptions"))
                           : std::vector<Assumption>{Agnostic{}, Mar{}};
  const auto deltas = json_io::deltas_from_json(r);
  return poll_report_json(audit_poll(summary, assumptions, deltas));
}

/// POST /v1/simulate: a study config; refused when replications times the
/// largest sample size exceeds kMaxSimulationWork.
inline json simulate(const json& body) {
  const SimConfig config = json_io::sim_config_from_json(body);
  const std::size_t largest = *std::max_element(config.sample_sizes.begin(), config.sample_sizes.end());
  if (static_cast<double>(config.replications) * static_cast<double>(largest) > kMaxSimulationWork) {
    throw LimitExceeded("replications x largest sample size exceeds 1e8 for a single request",
                        "/replications");
  }
  return detail::versioned(json_io::to_json(run_study(config)));
}

inline json health() { return detail::versioned({{"status", "ok"}}); }

struct Response {
  int status = 200;
  json body;
};

inline json error_body(const json& error) { return detail::versioned({{"error", error}}); }

/// Parses `text` and runs the handler for `op`. Never throws.
template <typename Handler>
Response handle(const std::string& text, Handler&& handler) {
  try {
    const json body = json::parse(text);
    return {200, handler(body)};
  } catch (const json::parse_error& e) {
    return {400, error_body(json_io::error_json("validation_error", std::string("malformed JSON: ") + e.what(), ""))};
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(json_io::error_json(e))};
  } catch (const std::exception& e) {
    return {500, error_body(json_io::error_json("internal_error", e.what(), ""))};
  }
}

}  // namespace partid::service
