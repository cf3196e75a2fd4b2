#include "cellprob/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cellprob/error.hpp"

namespace cellprob {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_labels(std::span<const int> labels, std::size_t rows) {
  if (labels.size() != rows) throw Error(ErrorCode::DimensionMismatch, "one label per feature row is required");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size())
    throw Error(ErrorCode::SingleClass, "training labels contain a single class");
}

// Per-sample activations for one forward pass.
struct Trace {
  std::vector<std::vector<double>> act;  // act[0] = standardized input, act[l+1] = output of layer l
};

double forward(const MlpModel& m, std::span<const double> x, Trace& tr) {
  tr.act.resize(m.layers.size() + 1);
  auto& in = tr.act[0];
  in.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) in[j] = (x[j] - m.input_mean[j]) / m.input_scale[j];
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const DenseLayer& L = m.layers[l];
    const auto& a = tr.act[l];
    auto& z = tr.act[l + 1];
    z.resize(L.out);
    const bool last = l + 1 == m.layers.size();
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = L.bias[o];
      const double* w = &L.weights[o * L.in];
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * a[i];
      z[o] = last ? s : std::max(0.0, s);
    }
  }
  return tr.act.back()[0];  // logit
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers) n += L.weights.size() + L.bias.size();
  return n;
}

std::vector<double> MlpModel::predict_proba(const FeatureMatrix& X) const {
  if (X.cols() != n_features())
    throw Error(ErrorCode::DimensionMismatch, "MLP expects " + std::to_string(n_features()) + " features, got " +
                                                  std::to_string(X.cols()));
  std::vector<double> p(X.rows());
  Trace tr;
  for (std::size_t r = 0; r < X.rows(); ++r) p[r] = sigmoid(forward(*this, X.row(r), tr));
  return p;
}

double MlpModel::loss_and_gradient(const FeatureMatrix& X, std::span<const int> labels,
                                   std::vector<double>& grad) const {
  if (X.cols() != n_features()) throw Error(ErrorCode::DimensionMismatch, "MLP input width mismatch");
  grad.assign(parameter_count(), 0.0);
  std::vector<std::size_t> base(layers.size());
  for (std::size_t l = 0, off = 0; l < layers.size(); ++l) {
    base[l] = off;
    off += layers[l].weights.size() + layers[l].bias.size();
  }
  Trace tr;
  double loss = 0.0;
  std::vector<double> delta, prev;
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const double logit = forward(*this, X.row(r), tr);
    const int y = labels[r];
    // BCE with logits: y*softplus(-z) + (1-y)*softplus(z)
    loss += y ? softplus(-logit) : softplus(logit);
    delta.assign(1, (sigmoid(logit) - y) * inv_n);
    for (std::size_t l = layers.size(); l-- > 0;) {
      const DenseLayer& L = layers[l];
      const auto& a = tr.act[l];
      double* gw = &grad[base[l]];
      double* gb = gw + L.weights.size();
      for (std::size_t o = 0; o < L.out; ++o) {
        gb[o] += delta[o];
        for (std::size_t i = 0; i < L.in; ++i) gw[o * L.in + i] += delta[o] * a[i];
      }
      if (l == 0) break;
      prev.assign(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o)
        for (std::size_t i = 0; i < L.in; ++i) prev[i] += L.weights[o * L.in + i] * delta[o];
      for (std::size_t i = 0; i < L.in; ++i)
        if (!(a[i] > 0)) prev[i] = 0.0;  // ReLU derivative
      delta.swap(prev);
    }
  }
  return loss * inv_n;
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> out;
  for (const auto& L : layers) {
    out.insert(out.end(), L.weights.begin(), L.weights.end());
    out.insert(out.end(), L.bias.begin(), L.bias.end());
  }
  return out;
}

void MlpModel::assign(std::span<const double> params) {
  if (params.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "parameter vector length");
  std::size_t k = 0;
  for (auto& L : layers) {
    for (auto& w : L.weights) w = params[k++];
    for (auto& b : L.bias) b = params[k++];
  }
}

void MlpModel::validate() const {
  if (layers.empty() || input_scale.size() != input_mean.size())
    throw Error(ErrorCode::InvalidArgument, "malformed MLP");
  std::size_t width = input_mean.size();
  for (const auto& L : layers) {
    if (L.in != width || L.weights.size() != L.in * L.out || L.bias.size() != L.out)
      throw Error(ErrorCode::InvalidArgument, "MLP layer shapes do not chain");
    width = L.out;
  }
  if (width != 1) throw Error(ErrorCode::InvalidArgument, "MLP must end in a single unit");
  for (double v : flatten())
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "MLP has non-finite weights");
  for (double s : input_scale)
    if (!(s > 0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "MLP has invalid input scaling");
}

MlpModel init_mlp(const FeatureMatrix& X, const MlpConfig& cfg) {
  MlpModel m;
  const std::size_t d = X.cols();
  m.input_mean.assign(d, 0.0);
  m.input_scale.assign(d, 1.0);
  if (X.rows() > 0) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0;
      for (std::size_t r = 0; r < X.rows(); ++r) mean += X(r, j);
      mean /= static_cast<double>(X.rows());
      double var = 0;
      for (std::size_t r = 0; r < X.rows(); ++r) var += (X(r, j) - mean) * (X(r, j) - mean);
      var /= static_cast<double>(X.rows());
      m.input_mean[j] = mean;
      m.input_scale[j] = var > 0 ? std::sqrt(var) : 1.0;
    }
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> widths{d};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer L;
    L.in = widths[l];
    L.out = widths[l + 1];
    const bool last = l + 2 == widths.size();
    const double bound = std::sqrt((last ? 2.0 : 6.0) / static_cast<double>(L.in + L.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    L.weights.resize(L.in * L.out);
    for (auto& w : L.weights) w = u(rng);
    L.bias.resize(L.out);
    for (auto& b : L.bias) b = u(rng);
    m.layers.push_back(std::move(L));
  }
  return m;
}

namespace {

double accuracy(const MlpModel& m, const FeatureMatrix& X, std::span<const int> y) {
  if (X.rows() == 0) return 0.0;
  const auto p = m.predict_proba(X);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hit += (p[i] >= 0.5 ? 1 : 0) == y[i];
  return static_cast<double>(hit) / static_cast<double>(p.size());
}

}  // namespace

MlpModel train_mlp(const FeatureMatrix& X_train, std::span<const int> y_train, const FeatureMatrix& X_val,
                   std::span<const int> y_val, const MlpConfig& cfg) {
  check_labels(y_train, X_train.rows());
  if (y_val.size() != X_val.rows()) throw Error(ErrorCode::DimensionMismatch, "one label per validation row");
  if (X_val.rows() > 0 && X_val.cols() != X_train.cols())
    throw Error(ErrorCode::DimensionMismatch, "validation width differs from training width");

  MlpModel model = init_mlp(X_train, cfg);
  MlpModel best = model;
  double best_acc = accuracy(model, X_val, y_val);

  std::vector<double> params = model.flatten();
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(X_train.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, X_train.rows()));
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      const FeatureMatrix Xb = X_train.select_rows(idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y_train[idx[i]];
      const double loss = model.loss_and_gradient(Xb, yb, grad);
      if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "MLP loss diverged");
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        m1[k] = cfg.beta1 * m1[k] + (1 - cfg.beta1) * grad[k];
        m2[k] = cfg.beta2 * m2[k] + (1 - cfg.beta2) * grad[k] * grad[k];
        params[k] -= cfg.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + cfg.epsilon);
      }
      model.assign(params);
    }
    const double acc = accuracy(model, X_val, y_val);
    if (acc > best_acc) {
      best_acc = acc;
      best = model;
      best.selected_epoch = epoch;
    }
  }
  return best;
}

MlpModel train_mlp(const FeatureMatrix& X, std::span<const int> labels, const MlpConfig& cfg) {
  check_labels(labels, X.rows());
  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(X.rows())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<int> yt, yv;
  for (auto i : train) yt.push_back(labels[i]);
  for (auto i : val) yv.push_back(labels[i]);
  return train_mlp(X.select_rows(train), yt, X.select_rows(val), yv, cfg);
}

}  // namespace cellprob
