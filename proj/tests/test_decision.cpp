#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "partid/decision.hpp"

using namespace partid;
using Catch::Matchers::WithinAbs;

namespace {

oracle::Matrix random_matrix(std::mt19937_64& rng, std::size_t na, std::size_t ns, int levels) {
  std::uniform_int_distribution<int> v(0, levels);
  oracle::Matrix m(na, std::vector<double>(ns));
  for (auto& row : m) {
    for (auto& x : row) x = v(rng);
  }
  return m;
}

std::vector<std::size_t> idx(std::initializer_list<std::size_t> v) { return v; }

}  // namespace

TEST_CASE("weak dominance elimination", "[decision][dominance]") {
  const auto a = eliminate_dominated(WelfareMatrix::from_rows({{1, 1}, {0, 1}}));
  CHECK(a.surviving == idx({0}));
  REQUIRE(a.dominated_by.size() == 1);
  CHECK(a.dominated_by[0] == std::pair<std::size_t, std::size_t>{1, 0});

  const auto b = eliminate_dominated(WelfareMatrix::from_rows({{1, 0}, {0, 1}}));
  CHECK(b.surviving == idx({0, 1}));
  CHECK(b.dominated_by.empty());

  // Duplicate rows never dominate each other.
  const auto c = eliminate_dominated(WelfareMatrix::from_rows({{2, 3}, {2, 3}, {1, 3}}));
  CHECK(c.surviving == idx({0, 1}));
  CHECK(c.dominated_by.size() == 2);
}

TEST_CASE("dominance matches pairwise brute force", "[decision][dominance][property]") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 500; ++t) {
    const auto m = random_matrix(rng, 4, 3, 3);
    const auto got = eliminate_dominated(WelfareMatrix::from_rows(m));
    auto want = oracle::dominance(m);
    auto have = got.dominated_by;
    std::sort(want.begin(), want.end());
    std::sort(have.begin(), have.end());
    REQUIRE(have == want);
  }
}

TEST_CASE("bayes criterion", "[decision][bayes]") {
  const auto w = WelfareMatrix::from_rows({{10, 0}, {4, 4}});
  const auto r = bayes_rank(w, Prior({0.9, 0.1}));
  CHECK_THAT(r.scores[0], WithinAbs(9.0, 1e-12));
  CHECK_THAT(r.scores[1], WithinAbs(4.0, 1e-12));
  CHECK(r.chosen == 0);
  CHECK(oracle::bayes({{10, 0}, {4, 4}}, {0.9, 0.1}) == idx({0}));

  const auto d = bayes_rank(w, Prior({0.0, 1.0}));
  CHECK(d.scores == std::vector<double>{0.0, 4.0});
  CHECK(d.chosen == 1);

  const auto single = bayes_rank(WelfareMatrix::from_rows({{3}, {7}, {5}}), Prior({1.0}));
  CHECK(single.chosen == 1);

  CHECK_THROWS_AS(bayes_rank(w, Prior({1.0})), ValidationError);
  CHECK_THROWS_AS(Prior({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(Prior({-0.1, 1.1}), ValidationError);
  // Within 1e-9 of one: renormalized.
  const Prior near({0.5, 0.5 + 5e-10});
  CHECK_THAT(near.weights()[0] + near.weights()[1], WithinAbs(1.0, 1e-15));
}

TEST_CASE("maximin criterion", "[decision][maximin]") {
  const auto r = maximin_rank(WelfareMatrix::from_rows({{10, 0}, {4, 4}}));
  CHECK(r.scores == std::vector<double>{0.0, 4.0});
  CHECK(r.chosen == 1);
  CHECK(oracle::maximin({{10, 0}, {4, 4}}) == idx({1}));

  CHECK(maximin_rank(WelfareMatrix::from_rows({{3, 1, 2}})).chosen == 0);

  const auto tie = maximin_rank(WelfareMatrix::from_rows({{5, 5}, {5, 5}}));
  CHECK(tie.optimal_set == idx({0, 1}));
  CHECK(tie.chosen == 0);
}

TEST_CASE("regret matrix", "[decision][regret]") {
  const auto r = regret_matrix(WelfareMatrix::from_rows({{10, 0}, {4, 4}}));
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 4.0);
  CHECK(r(1, 0) == 6.0);
  CHECK(r(1, 1) == 0.0);

  const auto same = regret_matrix(WelfareMatrix::from_rows({{1, 2, 3}, {1, 2, 3}}));
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t s = 0; s < 3; ++s) CHECK(same(c, s) == 0.0);
  }

  const auto sym = regret_matrix(WelfareMatrix::from_rows({{1, 0}, {0, 1}}));
  CHECK(sym(0, 1) == 1.0);
  CHECK(sym(1, 0) == 1.0);
  CHECK(sym(0, 0) == 0.0);
}

TEST_CASE("minimax-regret criterion", "[decision][mmr]") {
  const auto w = WelfareMatrix::from_rows({{10, 0}, {4, 4}});
  const auto r = minimax_regret_rank(w);
  CHECK(r.scores == std::vector<double>{4.0, 6.0});
  CHECK(r.chosen == 0);
  // The three criteria genuinely disagree here.
  CHECK(bayes_rank(w, Prior({0.9, 0.1})).chosen == 0);
  CHECK(maximin_rank(w).chosen == 1);

  const auto flat = minimax_regret_rank(WelfareMatrix::from_rows({{2, 2}, {2, 2}, {2, 2}}));
  CHECK(flat.optimal_set == idx({0, 1, 2}));
  CHECK(flat.scores == std::vector<double>{0.0, 0.0, 0.0});

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    oracle::Matrix m(5, std::vector<double>(5));
    for (auto& row : m) {
      for (auto& x : row) x = u(rng);
    }
    REQUIRE(minimax_regret_rank(WelfareMatrix::from_rows(m)).optimal_set == oracle::minimax_regret(m));
  }
}

TEST_CASE("welfare matrix validation", "[decision][matrix]") {
  CHECK_THROWS_AS(WelfareMatrix::from_rows({}), ValidationError);
  CHECK_THROWS_AS(WelfareMatrix::from_rows({{1, 2}, {3}}), ValidationError);
  CHECK_THROWS_AS(WelfareMatrix({"a"}, {"s", "t"}, {1.0}), ValidationError);
  CHECK_THROWS_AS(WelfareMatrix::from_rows({{1, std::nan("")}}), ValidationError);
}

TEST_CASE("minimax-regret point prediction", "[decision][prediction]") {
  // Frozen values checked against the grid oracle.
  const auto g = oracle::mmr_prediction_grid(0.2, 0.6);
  CHECK_THAT(g.predictor, WithinAbs(0.4, 1e-3));
  CHECK_THAT(g.max_regret, WithinAbs(0.04, 1e-6));
  const auto p = mmr_point_prediction(Interval(0.2, 0.6));
  CHECK_THAT(p.predictor.value(), WithinAbs(0.4, 1e-12));
  CHECK_THAT(p.max_regret, WithinAbs(0.04, 1e-12));

  const auto point = mmr_point_prediction(Interval::point(0.5));
  CHECK(point.predictor.value() == 0.5);
  CHECK(point.max_regret == 0.0);

  const auto all = mmr_point_prediction(Interval::unit());
  CHECK(all.predictor.value() == 0.5);
  CHECK(all.max_regret == 0.25);
}

TEST_CASE("point prediction regret is symmetric under reflection", "[decision][prediction][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto p = mmr_point_prediction(Interval(lo, hi));
    const double q = p.predictor;
    for (int k = 0; k <= 10; ++k) {
      const double m = lo + (hi - lo) * k / 10.0;
      const double reflected = lo + hi - m;
      REQUIRE_THAT((m - q) * (m - q), WithinAbs((reflected - q) * (reflected - q), 1e-12));
      REQUIRE((m - q) * (m - q) <= p.max_regret + 1e-12);
    }
  }
}

TEST_CASE("discretized interval states", "[decision][grid]") {
  const std::vector<Interval> two = {Interval(0.0, 1.0), Interval(0.2, 0.4)};
  const auto w = discretize_interval_states(std::span<const Interval>(two), 3, {"a", "b"},
                                            [](std::size_t a, std::span<const double> s) { return s[a]; });
  CHECK(w.state_count() == 9);
  CHECK(w.action_count() == 2);
  CHECK(w(0, 0) == 0.0);
  CHECK(w(1, 0) == 0.2);
  CHECK(w(1, 2) == 0.4);
  CHECK(w(0, 8) == 1.0);

  const std::vector<Interval> one = {Interval(0.3, 0.7)};
  const auto e = discretize_interval_states(std::span<const Interval>(one), 2, {"x"},
                                            [](std::size_t, std::span<const double> s) { return s[0]; });
  CHECK(e.state_count() == 2);
  CHECK(e(0, 0) == 0.3);
  CHECK(e(0, 1) == 0.7);

  const std::vector<Interval> many(4, Interval::unit());
  CHECK_THROWS_AS(discretize_interval_states(std::span<const Interval>(many), 101, {"a"},
                                             [](std::size_t, std::span<const double>) { return 0.0; }),
                  LimitExceeded);
  CHECK_THROWS_AS(discretize_interval_states(std::span<const Interval>(one), 1, {"x"},
                                             [](std::size_t, std::span<const double>) { return 0.0; }),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST_CASE("criteria agree with exhaustive enumeration", "[decision][property]") {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_int_distribution<int> eighths(0, 8);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t na = dim(rng), ns = dim(rng);
    const auto m = random_matrix(rng, na, ns, 4);
    // Dyadic prior weights keep expected welfare exact, so ties are real ties.
    std::vector<double> prior(ns, 0.0);
    int left = 8;
    for (std::size_t s = 0; s + 1 < ns; ++s) {
      const int k = std::min(left, eighths(rng));
      prior[s] = k / 8.0;
      left -= k;
    }
    prior[ns - 1] = left / 8.0;
    const auto w = WelfareMatrix::from_rows(m);
    REQUIRE(bayes_rank(w, Prior(prior)).optimal_set == oracle::bayes(m, prior));
    REQUIRE(maximin_rank(w).optimal_set == oracle::maximin(m));
    REQUIRE(minimax_regret_rank(w).optimal_set == oracle::minimax_regret(m));
  }
}

TEST_CASE("regret matrix invariants", "[decision][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 300; ++t) {
    oracle::Matrix m(4, std::vector<double>(5));
    for (auto& row : m) {
      for (auto& x : row) x = u(rng);
    }
    const auto r = regret_matrix(WelfareMatrix::from_rows(m));
    for (std::size_t s = 0; s < 5; ++s) {
      bool zero = false;
      for (std::size_t c = 0; c < 4; ++c) {
        REQUIRE(r(c, s) >= 0.0);
        zero = zero || r(c, s) == 0.0;
      }
      REQUIRE(zero);
    }
  }
}

TEST_CASE("optimal sets are invariant under positive affine maps", "[decision][property]") {
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<int> shift(-3, 3);
  for (int t = 0; t < 300; ++t) {
    const auto m = random_matrix(rng, 4, 4, 4);
    // Powers of two keep the transformed entries exact.
    const double a = std::ldexp(1.0, shift(rng));
    const double b = shift(rng);
    oracle::Matrix x = m;
    for (auto& row : x) {
      for (auto& v : row) v = a * v + b;
    }
    const Prior prior({0.25, 0.25, 0.25, 0.25});
    const auto w = WelfareMatrix::from_rows(m);
    const auto wx = WelfareMatrix::from_rows(x);
    REQUIRE(bayes_rank(w, prior).optimal_set == bayes_rank(wx, prior).optimal_set);
    REQUIRE(maximin_rank(w).optimal_set == maximin_rank(wx).optimal_set);
    REQUIRE(minimax_regret_rank(w).optimal_set == minimax_regret_rank(wx).optimal_set);

    // State-wise shifts leave regret, hence MMR, unchanged.
    oracle::Matrix y = m;
    for (std::size_t s = 0; s < 4; ++s) {
      const double bs = shift(rng);
      for (auto& row : y) row[s] += bs;
    }
    REQUIRE(minimax_regret_rank(w).optimal_set == minimax_regret_rank(WelfareMatrix::from_rows(y)).optimal_set);
  }
}

TEST_CASE("strictly dominated actions are never optimal", "[decision][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    oracle::Matrix m(4, std::vector<double>(3));
    for (auto& row : m) {
      for (auto& x : row) x = u(rng);
    }
    // Row 3 is strictly worse than row 0 in every state.
    for (std::size_t s = 0; s < 3; ++s) m[3][s] = m[0][s] - 0.01 - 0.5 * u(rng);
    const auto w = WelfareMatrix::from_rows(m);
    auto excluded = [](const CriterionResult& r) {
      return std::find(r.optimal_set.begin(), r.optimal_set.end(), 3u) == r.optimal_set.end();
    };
    REQUIRE(excluded(bayes_rank(w, Prior({0.2, 0.3, 0.5}))));
    REQUIRE(excluded(maximin_rank(w)));
    REQUIRE(excluded(minimax_regret_rank(w)));
  }
}
