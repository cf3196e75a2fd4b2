#include "cellprob/classifier.hpp"

#include <json.hpp>

#include "cellprob/error.hpp"

namespace cellprob {

using nlohmann::json;

std::size_t n_features(const Classifier& model) {
  return std::visit([](const auto& m) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ForestModel>) return m.n_features;
    else return m.n_features();
  }, model);
}

std::vector<double> predict_proba(const Classifier& model, const FeatureMatrix& X) {
  return std::visit([&](const auto& m) { return m.predict_proba(X); }, model);
}

CoordSet classify_proposals(const Classifier& model, const std::vector<NamedMap>& maps, const CoordSet& proposals,
                            const FeatureSpec& spec) {
  const std::size_t d = spec.dimension(maps.size());
  if (d != n_features(model))
    throw Error(ErrorCode::DimensionMismatch, "classifier expects " + std::to_string(n_features(model)) +
                                                  " features but the maps give " + std::to_string(d));
  CoordSet out = proposals;
  out.prob.clear();
  if (proposals.empty()) return out;
  const FeatureMatrix X = extract_features(maps, proposals, spec);
  out.prob = predict_proba(model, X);
  return out;
}

namespace {

constexpr int kFormatVersion = 1;

json spec_to_json(const std::vector<std::string>& map_names, const FeatureSpec& spec) {
  json ranges = json::object();
  for (const auto& [k, v] : spec.threshold_ranges) ranges[k] = {v.first, v.second};
  return {{"maps", map_names},
          {"window_sides_um", spec.window_sides},
          {"percentile_range", {spec.percentile_lo, spec.percentile_hi}},
          {"threshold_ranges", ranges}};
}

FeatureSpec spec_from_json(const json& j) {
  FeatureSpec spec;
  spec.window_sides = j.at("window_sides_um").get<std::vector<double>>();
  spec.percentile_lo = j.at("percentile_range").at(0).get<double>();
  spec.percentile_hi = j.at("percentile_range").at(1).get<double>();
  spec.threshold_ranges.clear();
  for (const auto& [k, v] : j.at("threshold_ranges").items())
    spec.threshold_ranges[k] = {v.at(0).get<double>(), v.at(1).get<double>()};
  spec.validate();
  return spec;
}

}  // namespace

std::string model_to_json(const Classifier& model, const std::vector<std::string>& map_names,
                          const FeatureSpec& spec) {
  json j;
  j["version"] = kFormatVersion;
  j["features"] = spec_to_json(map_names, spec);
  if (const auto* f = std::get_if<ForestModel>(&model)) {
    j["kind"] = "forest";
    j["n_features"] = f->n_features;
    j["seed"] = f->config.seed;
    j["bootstrap"] = f->config.bootstrap;
    j["max_features"] = f->config.max_features;
    json trees = json::array();
    for (const auto& t : f->trees)
      trees.push_back({{"feature", t.feature},
                       {"threshold", t.threshold},
                       {"left", t.left},
                       {"right", t.right},
                       {"positive", t.positive},
                       {"total", t.total}});
    j["trees"] = std::move(trees);
  } else {
    const auto& m = std::get<MlpModel>(model);
    j["kind"] = "mlp";
    j["input_mean"] = m.input_mean;
    j["input_scale"] = m.input_scale;
    j["selected_epoch"] = m.selected_epoch;
    json layers = json::array();
    for (const auto& L : m.layers)
      layers.push_back({{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
    j["layers"] = std::move(layers);
  }
  return j.dump();
}

LoadedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::Format, "unsupported model version " + j.at("version").dump());
    LoadedModel out;
    out.map_names = j.at("features").at("maps").get<std::vector<std::string>>();
    out.spec = spec_from_json(j.at("features"));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "forest") {
      ForestModel f;
      f.n_features = j.at("n_features").get<std::size_t>();
      f.config.seed = j.at("seed").get<std::uint64_t>();
      f.config.bootstrap = j.at("bootstrap").get<bool>();
      f.config.max_features = j.at("max_features").get<std::size_t>();
      for (const auto& t : j.at("trees")) {
        DecisionTree tree;
        tree.feature = t.at("feature").get<std::vector<int>>();
        tree.threshold = t.at("threshold").get<std::vector<double>>();
        tree.left = t.at("left").get<std::vector<int>>();
        tree.right = t.at("right").get<std::vector<int>>();
        tree.positive = t.at("positive").get<std::vector<double>>();
        tree.total = t.at("total").get<std::vector<double>>();
        f.trees.push_back(std::move(tree));
      }
      f.config.n_trees = f.trees.size();
      f.validate();
      out.model = std::move(f);
    } else if (kind == "mlp") {
      MlpModel m;
      m.input_mean = j.at("input_mean").get<std::vector<double>>();
      m.input_scale = j.at("input_scale").get<std::vector<double>>();
      m.selected_epoch = j.at("selected_epoch").get<std::size_t>();
      for (const auto& l : j.at("layers")) {
        DenseLayer L;
        L.in = l.at("in").get<std::size_t>();
        L.out = l.at("out").get<std::size_t>();
        L.weights = l.at("weights").get<std::vector<double>>();
        L.bias = l.at("bias").get<std::vector<double>>();
        m.layers.push_back(std::move(L));
      }
      m.validate();
      out.model = std::move(m);
    } else {
      throw Error(ErrorCode::Format, "unknown model kind '" + kind + "'");
    }
    if (out.spec.dimension(out.map_names.size()) != n_features(out.model))
      throw Error(ErrorCode::Format, "model width does not match its feature description");
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace cellprob
