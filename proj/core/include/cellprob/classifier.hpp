#pragma once

#include <string>
#include <variant>
#include <vector>

#include "cellprob/coords.hpp"
#include "cellprob/features.hpp"
#include "cellprob/forest.hpp"
#include "cellprob/mlp.hpp"

namespace cellprob {

/// A trained probabilistic proposal classifier.
using Classifier = std::variant<ForestModel, MlpModel>;

std::size_t n_features(const Classifier& model);
std::vector<double> predict_proba(const Classifier& model, const FeatureMatrix& X);

/// Extracts features for `proposals` from `maps` and attaches p to each
/// proposal. Proposals with p >= 0.5 are the positive detections.
CoordSet classify_proposals(const Classifier& model, const std::vector<NamedMap>& maps, const CoordSet& proposals,
                            const FeatureSpec& spec);

/// Versioned JSON. Forests store their node arrays; MLPs store the input
/// standardization, layer shapes, and row-major weights. Doubles round-trip
/// exactly, so predictions after a reload are bit-identical.
std::string model_to_json(const Classifier& model, const std::vector<std::string>& map_names, const FeatureSpec& spec);
struct LoadedModel {
  Classifier model;
  std::vector<std::string> map_names;
  FeatureSpec spec;
};
LoadedModel model_from_json(const std::string& text);

}  // namespace cellprob
