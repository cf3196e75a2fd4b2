#include <doctest.h>

#include <random>

#include "cellprob/classifier.hpp"
#include "helpers.hpp"

using namespace cellprob;

namespace {

struct Scene {
  Volume3D dm, ua, ue;
  CoordSet proposals;
  std::vector<int> labels;
};

Scene make_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scene s{testing_support::random_volume({20, 20, 20}, rng, 0.0, 1.0),
          testing_support::random_volume({20, 20, 20}, rng, 0.0, 0.1),
          testing_support::random_volume({20, 20, 20}, rng, 0.0, 0.1), {}, {}};
  s.proposals = testing_support::random_points(40, {20, 20, 20}, rng);
  for (std::size_t i = 0; i < s.proposals.size(); ++i) {
    const Vec3 p = s.proposals.points[i];
    const int label = static_cast<int>(i % 2);
    s.labels.push_back(label);
    // brighten positives so the classes differ
    if (label) s.dm(static_cast<std::int64_t>(p.z), static_cast<std::int64_t>(p.y), static_cast<std::int64_t>(p.x)) = 5.0f;
  }
  return s;
}

FeatureSpec small_spec() {
  FeatureSpec spec;
  spec.window_sides = {1, 4};
  spec.threshold_ranges = {{"dm", {0.1, 0.9}}, {"ua", {0.01, 0.09}}, {"ue", {0.09, 0.01}}};
  return spec;
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("forest and MLP models round-trip through JSON bit-identically") {
    const Scene s = make_scene(1);
    const FeatureSpec spec = small_spec();
    const std::vector<NamedMap> maps{{"dm", &s.dm}, {"ua", &s.ua}, {"ue", &s.ue}};
    const FeatureMatrix X = extract_features(maps, s.proposals, spec);
    const std::vector<std::string> names{"dm", "ua", "ue"};

    MlpConfig mc;
    mc.hidden = {8, 4};
    mc.epochs = 3;
    const std::vector<Classifier> models{train_forest(X, s.labels, {8, 0, true, 2}), train_mlp(X, s.labels, mc)};
    for (const Classifier& model : models) {
      const std::string text = model_to_json(model, names, spec);
      const LoadedModel loaded = model_from_json(text);
      CHECK(loaded.map_names == names);
      CHECK(loaded.spec.window_sides == spec.window_sides);
      CHECK(loaded.spec.threshold_ranges == spec.threshold_ranges);
      CHECK(loaded.model.index() == model.index());
      CHECK(predict_proba(loaded.model, X) == predict_proba(model, X));
      CHECK(model_to_json(loaded.model, loaded.map_names, loaded.spec) == text);
    }
  }

  TEST_CASE("classify_proposals attaches probabilities") {
    const Scene s = make_scene(2);
    const FeatureSpec spec = small_spec();
    const std::vector<NamedMap> maps{{"dm", &s.dm}, {"ua", &s.ua}, {"ue", &s.ue}};
    const FeatureMatrix X = extract_features(maps, s.proposals, spec);
    const Classifier model = train_forest(X, s.labels, {16, 0, true, 1});
    const CoordSet out = classify_proposals(model, maps, s.proposals, spec);
    REQUIRE(out.prob.size() == s.proposals.size());
    CHECK(out.points == s.proposals.points);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < out.size(); ++i) hit += (out.prob[i] >= 0.5) == (s.labels[i] == 1);
    CHECK(hit == out.size());

    const CoordSet none = classify_proposals(model, maps, CoordSet{}, spec);
    CHECK(none.empty());
    CHECK(none.prob.empty());
  }

  TEST_CASE("feature width mismatches are rejected") {
    const Scene s = make_scene(3);
    const FeatureSpec spec = small_spec();
    const std::vector<NamedMap> maps{{"dm", &s.dm}, {"ua", &s.ua}, {"ue", &s.ue}};
    const FeatureMatrix X = extract_features(maps, s.proposals, spec);
    const Classifier model = train_forest(X, s.labels, {4, 0, true, 1});
    const std::vector<NamedMap> two{{"dm", &s.dm}, {"ua", &s.ua}};
    CHECK_THROWS_CODE(classify_proposals(model, two, s.proposals, spec), DimensionMismatch);
    CHECK_THROWS_CODE(predict_proba(model, FeatureMatrix(1, 3)), DimensionMismatch);
  }

  TEST_CASE("malformed JSON is a format error") {
    CHECK_THROWS_CODE(model_from_json("not json"), Format);
    CHECK_THROWS_CODE(model_from_json("{\"version\": 99}"), Format);
    CHECK_THROWS_CODE(model_from_json("{}"), Format);
  }
}
