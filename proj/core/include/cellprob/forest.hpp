#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cellprob/matrix.hpp"

namespace cellprob {

struct ForestConfig {
  std::size_t n_trees = 128;
  std::size_t max_features = 0;  ///< features tried per node; 0 means ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;        ///< tree t uses seed + t
};

/// One gini-split classification tree in flat node arrays. Leaves have
/// feature == -1 and store the (bootstrap-weighted) positive count and total.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> positive;
  std::vector<double> total;

  std::size_t node_count() const { return feature.size(); }
  /// Leaf positive fraction for one sample; samples with x <= threshold go left.
  double predict(std::span<const double> x) const;
};

struct ForestModel {
  std::size_t n_features = 0;
  ForestConfig config;
  std::vector<DecisionTree> trees;

  /// Mean over trees of the leaf positive fraction. Throws DimensionMismatch.
  std::vector<double> predict_proba(const FeatureMatrix& X) const;
  /// Throws InvalidArgument if a child index is out of range or a leaf is empty.
  void validate() const;
};

/// Trains a forest on {0,1} labels. Each tree sees a bootstrap resample of
/// the rows and searches ceil(sqrt(d)) random non-constant features per node
/// (more if fewer are informative), picking the largest weighted gini
/// decrease; ties go to the lower feature index, then the lower threshold.
/// Thresholds are midpoints between consecutive distinct values. Nodes
/// split until pure or no split exists. Throws SingleClass.
ForestModel train_forest(const FeatureMatrix& X, std::span<const int> labels, const ForestConfig& cfg);

}  // namespace cellprob
