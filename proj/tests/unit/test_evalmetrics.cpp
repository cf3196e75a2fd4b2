#include <doctest.h>

#include <cmath>
#include <random>

#include "cellprob/evalmetrics.hpp"
#include "helpers.hpp"
#include "scenarios.hpp"

using namespace cellprob;

namespace {

double total_distance(const std::vector<MatchPair>& pairs) {
  double s = 0;
  for (const auto& p : pairs) s += p.distance;
  return s;
}

CoordSet line(std::initializer_list<double> xs) {
  CoordSet c;
  for (double x : xs) c.push_back({0, 0, x});
  return c;
}

}  // namespace

TEST_SUITE("evalmetrics") {
  TEST_CASE("assignment solver agrees with permutations on random rectangles") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> dim(0, 7);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 200; ++trial) {
      const auto r = static_cast<std::size_t>(dim(rng)), c = static_cast<std::size_t>(dim(rng));
      std::vector<double> cost(r * c);
      std::vector<std::vector<double>> rows(r, std::vector<double>(c));
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) rows[i][j] = cost[i * c + j] = std::round(u(rng));
      const auto a = solve_assignment(r, c, cost);
      REQUIRE(a.size() == r);
      double total = 0;
      std::size_t assigned = 0;
      std::vector<int> used(c, 0);
      for (std::size_t i = 0; i < r; ++i) {
        if (a[i] < 0) continue;
        ++assigned;
        CHECK(used[static_cast<std::size_t>(a[i])]++ == 0);
        total += rows[i][static_cast<std::size_t>(a[i])];
      }
      CHECK(assigned == std::min(r, c));
      CHECK(total == oracle::best_assignment(rows));
    }
  }

  TEST_CASE("Hungarian matching is optimal on random point sets") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> n(0, 7);
    for (int trial = 0; trial < 100; ++trial) {
      const CoordSet gt = testing_support::random_points(static_cast<std::size_t>(n(rng)), {20, 20, 20}, rng);
      const CoordSet pred = testing_support::random_points(static_cast<std::size_t>(n(rng)), {20, 20, 20}, rng);
      std::vector<std::vector<double>> cost(gt.size(), std::vector<double>(pred.size()));
      for (std::size_t i = 0; i < gt.size(); ++i)
        for (std::size_t j = 0; j < pred.size(); ++j) cost[i][j] = distance(gt.points[i], pred.points[j]);
      const auto pairs = hungarian_match(gt, pred);
      CHECK(pairs.size() == std::min(gt.size(), pred.size()));
      CHECK(total_distance(pairs) == doctest::Approx(oracle::best_assignment(cost)).epsilon(1e-12));
      for (std::size_t k = 1; k < pairs.size(); ++k) CHECK(pairs[k - 1].gt < pairs[k].gt);
    }
  }

  TEST_CASE("identical sets give the identity assignment") {
    std::mt19937_64 rng(3);
    const CoordSet c = testing_support::random_points(6, {30, 30, 30}, rng);
    const auto pairs = hungarian_match(c, c);
    REQUIRE(pairs.size() == 6);
    for (const auto& p : pairs) {
      CHECK(p.gt == p.pred);
      CHECK(p.distance == 0.0);
    }
  }

  TEST_CASE("the five matching scenarios") {
    for (const auto& s : testing_support::matching_scenarios()) {
      CAPTURE(s.name);
      const MatchReport r = score_detection(s.gt, s.pred, 4.0);
      CHECK(r.tp == s.tp);
      CHECK(r.fp == s.fp);
      CHECK(r.fn == s.fn);
    }
    // in (c) the closer prediction is the partner
    const auto c = testing_support::matching_scenarios()[2];
    const MatchReport r = score_detection(c.gt, c.pred, 4.0);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].pred == 0);
    CHECK(r.unmatched_pred == std::vector<std::size_t>{1});
  }

  TEST_CASE("two TP, one FP and one FN give two thirds everywhere") {
    const MatchReport r = score_detection(line({0, 20, 40}), line({1, 21, 60}), 4.0);
    CHECK(r.tp == 2);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.precision == doctest::Approx(2.0 / 3));
    CHECK(r.recall == doctest::Approx(2.0 / 3));
    CHECK(r.f1 == doctest::Approx(2.0 / 3));
  }

  TEST_CASE("empty sides") {
    const MatchReport r = score_detection(line({0, 10, 20}), CoordSet{}, 4.0);
    CHECK(r.tp == 0);
    CHECK(r.fn == 3);
    CHECK(r.fp == 0);
    CHECK(r.recall == 0.0);
    CHECK(r.precision == 0.0);
    CHECK_FALSE(r.precision_defined);
    CHECK(r.f1 == 0.0);
    const MatchReport e = score_detection(CoordSet{}, CoordSet{}, 4.0);
    CHECK(e.tp + e.fp + e.fn == 0);
    CHECK(hungarian_match(CoordSet{}, line({1})).empty());
  }

  TEST_CASE("swapping gt and predictions swaps precision and recall") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      const CoordSet a = testing_support::random_points(8, {15, 15, 15}, rng);
      const CoordSet b = testing_support::random_points(5, {15, 15, 15}, rng);
      const MatchReport ab = score_detection(a, b, 4.0);
      const MatchReport ba = score_detection(b, a, 4.0);
      CHECK(ab.tp == ba.tp);
      CHECK(ab.fp == ba.fn);
      CHECK(ab.fn == ba.fp);
      CHECK(ab.precision == doctest::Approx(ba.recall));
      CHECK(ab.f1 == doctest::Approx(ba.f1));
    }
  }

  TEST_CASE("report counts are consistent") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const CoordSet gt = testing_support::random_points(10, {20, 20, 20}, rng);
      const CoordSet pred = testing_support::random_points(12, {20, 20, 20}, rng);
      const MatchReport r = score_detection(gt, pred, 3.0);
      CHECK(r.tp + r.fn == gt.size());
      CHECK(r.tp + r.fp == pred.size());
      CHECK(r.unmatched_gt.size() == r.fn);
      CHECK(r.unmatched_pred.size() == r.fp);
      for (const auto& p : r.pairs) CHECK(p.distance <= 3.0);
    }
  }

  TEST_CASE("calibration examples") {
    // one GT matched with p = 0.7
    CoordSet pred = line({1});
    pred.prob = {0.7};
    const CalibrationScore s = score_calibration(line({0}), pred, 4.0);
    CHECK(s.terms == 1);
    CHECK(s.brier == doctest::Approx(0.09));
    CHECK(s.nll == doctest::Approx(-std::log(0.7)));

    // deterministic: one TP and one FP over two terms
    const CalibrationScore d = score_calibration(line({0}), line({1, 50}), 4.0);
    CHECK(d.terms == 2);
    CHECK(d.brier == doctest::Approx(0.5));
    CHECK(d.nll == doctest::Approx(-std::log(kNllEpsilon) / 2));

    // a perfect deterministic detector
    const CalibrationScore p = score_calibration(line({0, 10}), line({0, 10}), 4.0);
    CHECK(p.brier == 0.0);
    CHECK(p.nll == doctest::Approx(-std::log1p(-kNllEpsilon)));

    // a missed cell scores zero against one
    const CalibrationScore m = score_calibration(line({0, 30}), line({0}), 4.0);
    CHECK(m.terms == 2);
    CHECK(m.brier == doctest::Approx(0.5));
  }

  TEST_CASE("constant calibrated probability gives Brier p(1 - p)") {
    // 10^5 predictions pooled over 1000 scenes of 100, keeping the dense
    // assignment matrices small
    std::mt19937_64 rng(6);
    const double p = 0.3;
    std::bernoulli_distribution real(p);
    double sum = 0;
    std::size_t terms = 0;
    for (int scene = 0; scene < 1000; ++scene) {
      CoordSet gt, pred;
      for (int i = 0; i < 100; ++i) {
        const Vec3 at{0, 0, 10.0 * i};
        pred.push_back(at);
        pred.prob.push_back(p);
        if (real(rng)) gt.push_back(at);
      }
      const CalibrationScore s = score_calibration(gt, pred, 4.0);
      CHECK(s.terms == 100);
      sum += s.brier * static_cast<double>(s.terms);
      terms += s.terms;
    }
    CHECK(std::abs(sum / static_cast<double>(terms) - p * (1 - p)) < 0.01);
  }

  TEST_CASE("larger t_match never loses true positives") {
    std::mt19937_64 rng(7);
    const CoordSet gt = testing_support::random_points(15, {20, 20, 20}, rng);
    const CoordSet pred = testing_support::random_points(15, {20, 20, 20}, rng);
    std::size_t last = 0;
    for (double t = 0.5; t < 20; t += 0.5) {
      const auto tp = score_detection(gt, pred, t).tp;
      CHECK(tp >= last);
      last = tp;
    }
  }
}
