#pragma once

// Election-poll audits: what a poll's respondents reveal about support in the
// whole population when most sampled people do not respond.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "partid/decision.hpp"
#include "partid/errors.hpp"
#include "partid/identification.hpp"
#include "partid/types.hpp"

namespace partid {

struct PollSummary {
  std::string poll_id;
  std::string candidate_label;
  UnitValue respondent_share;  // fraction of respondents supporting the candidate
  double response_rate = 0.0;
  std::string as_of;

  ObservedStratum stratum() const {
    return {poll_id + ":" + candidate_label,
            response_rate > 0.0 ? std::optional<double>(respondent_share) : std::nullopt,
            response_rate};
  }
};

/// Validates one poll record. `where` prefixes error details (e.g. "row 3").
inline PollSummary make_poll(std::string poll_id, std::string candidate, double share, double rate,
                             std::string as_of, const std::string& where = {}) {
  auto field = [&](const char* name) { return where.empty() ? std::string(name) : where + ", field " + name; };
  auto check = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      std::string msg = field(name) + ": " + detail::num(v) + " is outside [0, 1]";
      if (v > 1.0 && v <= 100.0) msg += "; if it is a percentage, divide by 100";
      throw ValidationError(msg, field(name));
    }
  };
  if (poll_id.empty()) throw ValidationError(field("poll_id") + ": must not be empty", field("poll_id"));
  if (candidate.empty()) {
    throw ValidationError(field("candidate") + ": must not be empty", field("candidate"));
  }
  check(share, "respondent_share");
  check(rate, "response_rate");
  return {std::move(poll_id), std::move(candidate), UnitValue(share), rate, std::move(as_of)};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct AssumptionOutcome {
  Assumption assumption;
  std::optional<IdentificationRegion> region;  // empty when the assumption failed
  std::optional<PointPrediction> mmr;
  std::string error_code;
  std::string error;
};

struct PollReport {
  PollSummary summary;
  IdentificationRegion agnostic;
  std::optional<double> mar_point;  // absent when nobody responded
  PointPrediction mmr_prediction;   // for the agnostic region
  std::vector<AssumptionOutcome> regions;
  std::vector<SweepEntry> sweep;
};

inline PollReport audit_poll(const PollSummary& summary, std::span<const Assumption> assumptions,
                             std::span<const DeltaPair> sweep = {}) {
  const ObservedStratum stratum = summary.stratum();
  PollReport report{summary, agnostic_region(stratum), std::nullopt, {}, {}, {}};
  report.mmr_prediction = mmr_point_prediction(report.agnostic.region);
  if (stratum.observed_mean) report.mar_point = stratum.observed_mean->value();
  for (const auto& a : assumptions) {
    AssumptionOutcome o{a, std::nullopt, std::nullopt, {}, {}};
    try {
      o.region = identify(stratum, a);
      o.mmr = mmr_point_prediction(o.region->region);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::validation) throw;
      o.error_code = to_string(e.code());
      o.error = e.what();
    }
    report.regions.push_back(std::move(o));
  }
  report.sweep = sweep_bounded_variation(stratum, sweep);
  return report;
}

/// Rounds lo down and hi up to `digits` decimals, so the reported interval
/// still contains the exact one.
inline Interval round_outward(const Interval& region, int digits) {
  const double scale = std::pow(10.0, digits);
  const double lo = std::floor(region.lo() * scale + 1e-9) / scale;
  const double hi = std::ceil(region.hi() * scale - 1e-9) / scale;
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

struct SweepRow {
  double delta0 = 0.0;
  double delta1 = 0.0;
  bool feasible = false;
  double lo = 0.0, hi = 0.0, width = 0.0, mmr_predictor = 0.0, max_regret = 0.0;
};

inline std::vector<SweepRow> emit_sweep_table(const PollReport& report) {
  std::vector<SweepRow> rows;
  rows.reserve(report.sweep.size());
  for (const auto& e : report.sweep) {
    SweepRow r;
    r.delta0 = e.deltas.delta0;
    r.delta1 = e.deltas.delta1;
    if (e.region) {
      const auto pred = mmr_point_prediction(e.region->region);
      r.feasible = true;
      r.lo = e.region->region.lo();
      r.hi = e.region->region.hi();
      r.width = e.region->region.width();
      r.mmr_predictor = pred.predictor;
      r.max_regret = pred.max_regret;
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string shortest(double v) { return num(v); }

/// Splits one CSV record. Handles double-quoted fields with "" escapes; does
/// not handle quoted newlines.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace detail

inline constexpr const char* kPollCsvHeader = "poll_id,candidate,respondent_share,response_rate,as_of";
inline constexpr const char* kSweepCsvHeader =
    "delta0,delta1,lo,hi,width,mmr_predictor,max_regret,feasible";

/// Reads polls from CSV with the header
/// `poll_id,candidate,respondent_share,response_rate,as_of` (columns in any
/// order). Blank lines are skipped. Row numbers in errors count the header
/// as row 1.
inline std::vector<PollSummary> load_polls_csv(std::istream& in) {
  static const std::vector<std::string> required = {"poll_id", "candidate", "respondent_share",
                                                    "response_rate", "as_of"};
  std::vector<PollSummary> polls;
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> column;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty() || detail::trim(line) == "\r") continue;
    auto fields = detail::split_csv(line);
    for (auto& f : fields) f = detail::trim(f);
    if (column.empty()) {
      if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!column.emplace(fields[i], i).second) {
          throw ValidationError("row " + std::to_string(row) + ": duplicate column '" + fields[i] + "'",
                                "row " + std::to_string(row));
        }
      }
      for (const auto& name : required) {
        if (!column.count(name)) {
          throw ValidationError("row " + std::to_string(row) + ": header is missing column '" + name +
                                    "' (expected " + kPollCsvHeader + ")",
                                "row " + std::to_string(row) + ", field " + name);
        }
      }
      for (const auto& [name, idx] : column) {
        if (std::find(required.begin(), required.end(), name) == required.end()) {
          throw ValidationError("row " + std::to_string(row) + ": unknown column '" + name + "'",
                                "row " + std::to_string(row) + ", field " + name);
        }
      }
      width = fields.size();
      continue;
    }
    const std::string where = "row " + std::to_string(row);
    if (fields.size() != width) {
      throw ValidationError(where + ": expected " + std::to_string(width) + " fields, got " +
                                std::to_string(fields.size()),
                            where);
    }
    auto get = [&](const std::string& name) { return fields[column.at(name)]; };
    auto number = [&](const std::string& name) {
      try {
        return detail::parse_double(get(name), name);
      } catch (const ValidationError&) {
        throw ValidationError(where + ", field " + name + ": cannot parse '" + get(name) +
                                  "' as a number",
                              where + ", field " + name);
      }
    };
    polls.push_back(make_poll(get("poll_id"), get("candidate"), number("respondent_share"),
                              number("response_rate"), get("as_of"), where));
  }
  return polls;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << detail::shortest(r.delta0) << ',' << detail::shortest(r.delta1) << ',';
    if (r.feasible) {
      out << detail::shortest(r.lo) << ',' << detail::shortest(r.hi) << ','
          << detail::shortest(r.width) << ',' << detail::shortest(r.mmr_predictor) << ','
          << detail::shortest(r.max_regret) << ",true\n";
    } else {
      out << ",,,,,false\n";
    }
  }
}

}  // namespace partid
