#include <doctest.h>

#include <cmath>
#include <random>

#include "cellprob/mlp.hpp"
#include "helpers.hpp"

using namespace cellprob;

namespace {

struct Data {
  FeatureMatrix X;
  std::vector<int> y;
};

// Two gaussian clusters in d dimensions, separated along every axis.
Data clusters(std::size_t n, std::size_t d, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Data out{FeatureMatrix(n, d), std::vector<int>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    out.y[r] = static_cast<int>(r % 2);
    for (std::size_t c = 0; c < d; ++c) out.X(r, c) = g(rng) + (out.y[r] ? gap : 0.0) + 10.0 * c;
  }
  return out;
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("analytic gradient matches central differences") {
    const Data data = clusters(12, 3, 1.0, 1);
    MlpConfig cfg;
    cfg.hidden = {5, 4};
    cfg.seed = 7;
    MlpModel m = init_mlp(data.X, cfg);
    std::vector<double> grad;
    m.loss_and_gradient(data.X, data.y, grad);
    const std::vector<double> params = m.flatten();
    REQUIRE(grad.size() == params.size());
    REQUIRE(params.size() == m.parameter_count());
    const double h = 1e-6;
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> p = params;
      std::vector<double> tmp;
      p[k] = params[k] + h;
      m.assign(p);
      const double up = m.loss_and_gradient(data.X, data.y, tmp);
      p[k] = params[k] - h;
      m.assign(p);
      const double down = m.loss_and_gradient(data.X, data.y, tmp);
      const double fd = (up - down) / (2 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
    }
  }

  TEST_CASE("loss is the mean cross-entropy of the predicted probabilities") {
    const Data data = clusters(10, 2, 0.5, 2);
    MlpConfig cfg;
    cfg.hidden = {3};
    const MlpModel m = init_mlp(data.X, cfg);
    const auto p = m.predict_proba(data.X);
    double ref = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ref -= data.y[i] ? std::log(p[i]) : std::log(1 - p[i]);
    ref /= static_cast<double>(p.size());
    std::vector<double> grad;
    CHECK(m.loss_and_gradient(data.X, data.y, grad) == doctest::Approx(ref).epsilon(1e-10));
  }

  TEST_CASE("zero epochs keeps the initialization") {
    const Data data = clusters(40, 2, 3.0, 3);
    MlpConfig cfg;
    cfg.hidden = {4};
    cfg.epochs = 0;
    cfg.seed = 5;
    const MlpModel init = init_mlp(data.X, cfg);
    const MlpModel m = train_mlp(data.X, data.y, data.X, data.y, cfg);
    CHECK(m.selected_epoch == 0);
    CHECK(m.flatten() == init.flatten());
  }

  TEST_CASE("separable clusters are learned") {
    const Data train = clusters(300, 4, 4.0, 4);
    const Data val = clusters(100, 4, 4.0, 40);
    MlpConfig cfg;
    cfg.hidden = {16, 8};
    cfg.epochs = 30;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-2;
    cfg.seed = 1;
    const MlpModel m = train_mlp(train.X, train.y, val.X, val.y, cfg);
    m.validate();
    const auto p = m.predict_proba(val.X);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      CHECK(p[i] <= 1.0);
      hit += (p[i] >= 0.5) == (val.y[i] == 1);
    }
    CHECK(hit >= 98);
    CHECK(m.selected_epoch >= 1);
  }

  TEST_CASE("the held-out overload is deterministic") {
    const Data data = clusters(100, 3, 2.0, 6);
    MlpConfig cfg;
    cfg.hidden = {6};
    cfg.epochs = 5;
    cfg.seed = 3;
    const MlpModel a = train_mlp(data.X, data.y, cfg);
    const MlpModel b = train_mlp(data.X, data.y, cfg);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.selected_epoch == b.selected_epoch);
  }

  TEST_CASE("errors") {
    const Data data = clusters(10, 2, 1.0, 8);
    MlpConfig cfg;
    cfg.hidden = {3};
    std::vector<int> ones(10, 1);
    CHECK_THROWS_CODE(train_mlp(data.X, ones, cfg), SingleClass);
    CHECK_THROWS_CODE(train_mlp(FeatureMatrix(0, 2), std::vector<int>{}, cfg), SingleClass);
    const MlpModel m = init_mlp(data.X, cfg);
    CHECK_THROWS_CODE(m.predict_proba(FeatureMatrix(1, 3)), DimensionMismatch);
    CHECK_THROWS_CODE(train_mlp(data.X, data.y, FeatureMatrix(2, 5), std::vector<int>{0, 1}, cfg), DimensionMismatch);
    std::vector<double> few(3);
    MlpModel c = m;
    CHECK_THROWS_CODE(c.assign(few), DimensionMismatch);
    cfg.learning_rate = 1e300;
    cfg.epochs = 3;
    const Data wide = clusters(40, 2, 50.0, 9);
    CHECK_THROWS_CODE(train_mlp(wide.X, wide.y, wide.X, wide.y, cfg), NonFiniteLoss);
  }
}
