#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cellprob/matrix.hpp"

namespace cellprob {

struct MlpConfig {
  std::vector<std::size_t> hidden{50, 50, 20, 20};
  std::size_t epochs = 200;
  std::size_t batch_size = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.2;  ///< used only when no explicit validation set is given
  std::uint64_t seed = 0;
};

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;  ///< row-major [out][in]
  std::vector<double> bias;
};

/// Fully connected network: standardized input, ReLU hidden layers, one
/// logistic output unit.
struct MlpModel {
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  std::vector<DenseLayer> layers;
  std::size_t selected_epoch = 0;  ///< 0 means the initialization was kept

  std::size_t n_features() const { return input_mean.size(); }
  std::size_t parameter_count() const;

  /// Throws DimensionMismatch.
  std::vector<double> predict_proba(const FeatureMatrix& X) const;

  /// Mean binary cross-entropy over rows and its gradient with respect to
  /// all parameters, flattened layer by layer as (weights, bias).
  double loss_and_gradient(const FeatureMatrix& X, std::span<const int> labels, std::vector<double>& grad) const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
  void validate() const;
};

/// Glorot-uniform initialization with standardization statistics from X.
MlpModel init_mlp(const FeatureMatrix& X, const MlpConfig& cfg);

/// Adam on binary cross-entropy with minibatches; returns the parameters
/// of the epoch with the best validation accuracy (the initialization
/// counts as epoch 0). Throws SingleClass and NonFiniteLoss.
MlpModel train_mlp(const FeatureMatrix& X_train, std::span<const int> y_train, const FeatureMatrix& X_val,
                   std::span<const int> y_val, const MlpConfig& cfg);

/// Same, holding out a seeded validation_fraction of the rows.
MlpModel train_mlp(const FeatureMatrix& X, std::span<const int> labels, const MlpConfig& cfg);

}  // namespace cellprob
