#include "cellprob/bayescore.hpp"

#include <algorithm>
#include <cmath>

#include "cellprob/error.hpp"

namespace cellprob {

void RegressorOutput::validate() const {
  if (!dm.same_grid(aleatoric) || !dm.same_grid(epistemic))
    throw Error(ErrorCode::ShapeMismatch, "regressor maps must share one grid");
  for (float v : aleatoric.data())
    if (!(v >= 0)) throw Error(ErrorCode::InvalidArgument, "aleatoric uncertainty must be nonnegative");
  for (float v : epistemic.data())
    if (!(v >= 0)) throw Error(ErrorCode::InvalidArgument, "epistemic uncertainty must be nonnegative");
}

double l2_loss(std::span<const double> y, std::span<const double> pred, std::span<double> grad_pred) {
  if (y.size() != pred.size() || (!grad_pred.empty() && grad_pred.size() != y.size()))
    throw Error(ErrorCode::ShapeMismatch, "l2_loss operands differ in size");
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double r = y[k] - pred[k];
    loss += r * r;
    if (!grad_pred.empty()) grad_pred[k] = -2.0 * r;
  }
  return loss;
}

double bayes_loss(std::span<const double> y, std::span<const double> pred, std::span<const double> ua,
                  std::span<double> grad_pred, std::span<double> grad_ua) {
  if (y.size() != pred.size() || y.size() != ua.size() || (!grad_pred.empty() && grad_pred.size() != y.size()) ||
      (!grad_ua.empty() && grad_ua.size() != y.size()))
    throw Error(ErrorCode::ShapeMismatch, "bayes_loss operands differ in size");
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(ua[k] > 0)) throw Error(ErrorCode::NonPositiveAleatoric, "aleatoric uncertainty must be > 0");
    const double r = y[k] - pred[k];
    loss += r * r / (2.0 * ua[k]) + 0.5 * std::log(ua[k]);
    if (!grad_pred.empty()) grad_pred[k] = -r / ua[k];
    if (!grad_ua.empty()) grad_ua[k] = -r * r / (2.0 * ua[k] * ua[k]) + 0.5 / ua[k];
  }
  return loss;
}

namespace {

std::vector<double> widen(const Volume3D& v) { return {v.data().begin(), v.data().end()}; }

}  // namespace

double l2_loss(const Volume3D& y, const Volume3D& pred) {
  if (!y.same_grid(pred)) throw Error(ErrorCode::ShapeMismatch, "l2_loss volumes differ in grid");
  return l2_loss(widen(y), widen(pred));
}

double bayes_loss(const Volume3D& y, const Volume3D& pred, const Volume3D& ua) {
  if (!y.same_grid(pred) || !y.same_grid(ua)) throw Error(ErrorCode::ShapeMismatch, "bayes_loss volumes differ");
  return bayes_loss(widen(y), widen(pred), widen(ua));
}

RegressorOutput mc_aggregate(const std::vector<McSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptySampleList, "no Monte-Carlo samples to aggregate");
  const Volume3D& ref = samples.front().dm;
  for (const auto& s : samples)
    if (!s.dm.same_grid(ref) || !s.aleatoric.same_grid(ref))
      throw Error(ErrorCode::ShapeMismatch, "Monte-Carlo samples must share one grid");

  RegressorOutput out{Volume3D(ref.shape(), ref.voxel_size()), Volume3D(ref.shape(), ref.voxel_size()),
                      Volume3D(ref.shape(), ref.voxel_size())};
  const double t = static_cast<double>(samples.size());
  std::vector<float> dm(samples.size()), ua(samples.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      dm[s] = samples[s].dm.data()[k];
      ua[s] = samples[s].aleatoric.data()[k];
    }
    std::sort(dm.begin(), dm.end());
    std::sort(ua.begin(), ua.end());
    double mean = 0.0, mean_ua = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      mean += dm[s];
      mean_ua += ua[s];
    }
    mean /= t;
    mean_ua /= t;
    double var = 0.0;
    for (float v : dm) var += (v - mean) * (v - mean);
    out.dm.data()[k] = static_cast<float>(mean);
    out.aleatoric.data()[k] = static_cast<float>(mean_ua);
    out.epistemic.data()[k] = static_cast<float>(std::sqrt(var / t));
  }
  return out;
}

}  // namespace cellprob
