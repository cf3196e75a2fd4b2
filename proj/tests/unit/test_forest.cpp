#include <doctest.h>

#include <cmath>
#include <random>

#include "cellprob/forest.hpp"
#include "helpers.hpp"

using namespace cellprob;

namespace {

FeatureMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix X(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) X(r, c) = rows[r][c];
  return X;
}

// Walks the trained tree and re-derives every internal split with the
// exhaustive search on the samples reaching that node.
void check_against_oracle(const DecisionTree& t, int node, const std::vector<std::vector<double>>& X,
                          const std::vector<int>& y) {
  const auto n = static_cast<std::size_t>(node);
  double pos = 0;
  for (int v : y) pos += v;
  CHECK(t.total[n] == doctest::Approx(static_cast<double>(y.size())));
  CHECK(t.positive[n] == doctest::Approx(pos));
  const oracle::Split s = oracle::best_gini_split(X, y);
  const bool pure = pos == 0 || pos == static_cast<double>(y.size());
  if (pure || s.feature < 0) {
    CHECK(t.feature[n] == -1);
    return;
  }
  REQUIRE(t.feature[n] == s.feature);
  CHECK(t.threshold[n] == doctest::Approx(s.threshold).epsilon(1e-12));
  std::vector<std::vector<double>> XL, XR;
  std::vector<int> yL, yR;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i][static_cast<std::size_t>(s.feature)] <= t.threshold[n]) {
      XL.push_back(X[i]);
      yL.push_back(y[i]);
    } else {
      XR.push_back(X[i]);
      yR.push_back(y[i]);
    }
  }
  check_against_oracle(t, t.left[n], XL, yL);
  check_against_oracle(t, t.right[n], XR, yR);
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("single tree without bootstrap matches the exhaustive gini search") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> small(0, 4);
    std::uniform_int_distribution<int> size(2, 8);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = size(rng);
      std::vector<std::vector<double>> rows;
      std::vector<int> y;
      for (int i = 0; i < n; ++i) {
        rows.push_back({static_cast<double>(small(rng)), static_cast<double>(small(rng)) * 0.5});
        y.push_back(small(rng) % 2);
      }
      int pos = 0;
      for (int v : y) pos += v;
      if (pos == 0 || pos == n) continue;
      const ForestModel m = train_forest(to_matrix(rows), y, {1, 2, false, static_cast<std::uint64_t>(trial)});
      REQUIRE(m.trees.size() == 1);
      m.validate();
      check_against_oracle(m.trees[0], 0, rows, y);
      ++checked;
    }
    CHECK(checked > 100);
  }

  TEST_CASE("separable data is classified perfectly") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
      const int label = i % 2;
      rows.push_back({label * 5.0 + noise(rng), noise(rng), noise(rng)});
      y.push_back(label);
    }
    const FeatureMatrix X = to_matrix(rows);
    const ForestModel m = train_forest(X, y, {32, 0, true, 5});
    const auto p = m.predict_proba(X);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((p[i] >= 0.5) == (y[i] == 1));
    const auto q = m.predict_proba(to_matrix({{5.0, 0, 0}, {0.0, 0, 0}}));
    CHECK(q[0] > 0.9);
    CHECK(q[1] < 0.1);
  }

  TEST_CASE("identical rows with both labels give probability one half") {
    std::vector<std::vector<double>> rows(10, {1.0, 2.0});
    std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const ForestModel m = train_forest(to_matrix(rows), y, {1, 0, false, 0});
    CHECK(m.trees[0].node_count() == 1);
    CHECK(m.predict_proba(to_matrix({{1.0, 2.0}}))[0] == doctest::Approx(0.5));
    // with bootstrap the leaf fraction is the resample's, which averages near 0.5
    const ForestModel b = train_forest(to_matrix(rows), y, {200, 0, true, 0});
    CHECK(b.predict_proba(to_matrix({{1.0, 2.0}}))[0] == doctest::Approx(0.5).epsilon(0.1));
  }

  TEST_CASE("probabilities lie in [0, 1]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
      rows.push_back({u(rng), u(rng), u(rng), u(rng)});
      y.push_back(u(rng) < 0.3 ? 1 : 0);
    }
    y[0] = 1;
    y[1] = 0;
    const ForestModel m = train_forest(to_matrix(rows), y, {16, 0, true, 1});
    for (double p : m.predict_proba(to_matrix(rows))) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }

  TEST_CASE("errors") {
    const FeatureMatrix X = to_matrix({{1, 2}, {3, 4}, {5, 6}});
    std::vector<int> ones{1, 1, 1};
    CHECK_THROWS_CODE(train_forest(X, ones, {}), SingleClass);
    std::vector<int> zeros{0, 0, 0};
    CHECK_THROWS_CODE(train_forest(X, zeros, {}), SingleClass);
    CHECK_THROWS_CODE(train_forest(FeatureMatrix(0, 2), std::vector<int>{}, {}), SingleClass);
    std::vector<int> short_labels{0, 1};
    CHECK_THROWS_CODE(train_forest(X, short_labels, {}), DimensionMismatch);
    std::vector<int> bad{0, 2, 1};
    CHECK_THROWS_CODE(train_forest(X, bad, {}), InvalidArgument);
    std::vector<int> y{0, 1, 1};
    CHECK_THROWS_CODE(train_forest(X, y, {0, 0, true, 0}), InvalidArgument);
    const ForestModel m = train_forest(X, y, {4, 0, true, 0});
    CHECK_THROWS_CODE(m.predict_proba(FeatureMatrix(2, 3)), DimensionMismatch);
  }

  TEST_CASE("training is deterministic for a seed") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    FeatureMatrix X(80, 5);
    std::vector<int> y(80);
    for (std::size_t r = 0; r < 80; ++r) {
      for (std::size_t c = 0; c < 5; ++c) X(r, c) = u(rng);
      y[r] = X(r, 0) + 0.3 * u(rng) > 0.6 ? 1 : 0;
    }
    const auto a = train_forest(X, y, {20, 0, true, 9});
    const auto b = train_forest(X, y, {20, 0, true, 9});
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
      CHECK(a.trees[t].feature == b.trees[t].feature);
      CHECK(a.trees[t].threshold == b.trees[t].threshold);
      CHECK(a.trees[t].positive == b.trees[t].positive);
    }
    CHECK(a.predict_proba(X) == b.predict_proba(X));
  }

  TEST_CASE("predictions are invariant to a monotone feature transform") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    FeatureMatrix X(60, 3), Xt(60, 3);
    std::vector<int> y(60);
    for (std::size_t r = 0; r < 60; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        X(r, c) = u(rng);
        Xt(r, c) = std::exp(2.0 * X(r, c)) + 7.0;
      }
      y[r] = X(r, 1) > 1.0 ? 1 : 0;
      if (r % 9 == 0) y[r] = 1 - y[r];
    }
    // without bootstrap every row is a training row, so no row falls between
    // a split's two neighbouring values where the midpoints could disagree
    const auto a = train_forest(X, y, {10, 0, false, 2});
    const auto b = train_forest(Xt, y, {10, 0, false, 2});
    const auto pa = a.predict_proba(X);
    const auto pb = b.predict_proba(Xt);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pb[i]));
    for (std::size_t t = 0; t < a.trees.size(); ++t) CHECK(a.trees[t].feature == b.trees[t].feature);
  }

  TEST_CASE("validate rejects malformed trees") {
    ForestModel m;
    m.n_features = 1;
    DecisionTree t;
    t.feature = {0, -1, -1};
    t.threshold = {0.5, 0, 0};
    t.left = {1, -1, -1};
    t.right = {5, -1, -1};
    t.positive = {0, 1, 0};
    t.total = {0, 1, 1};
    m.trees.push_back(t);
    CHECK_THROWS_CODE(m.validate(), InvalidArgument);
    m.trees[0].right[0] = 2;
    m.validate();
    m.trees[0].total[2] = 0;
    CHECK_THROWS_CODE(m.validate(), InvalidArgument);
  }
}
