#include "cellprob/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cellprob/error.hpp"
#include "cellprob/parallel.hpp"

namespace cellprob {

double DecisionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (feature[static_cast<std::size_t>(node)] >= 0) {
    const auto n = static_cast<std::size_t>(node);
    node = x[static_cast<std::size_t>(feature[n])] <= threshold[n] ? left[n] : right[n];
  }
  const auto n = static_cast<std::size_t>(node);
  return positive[n] / total[n];
}

std::vector<double> ForestModel::predict_proba(const FeatureMatrix& X) const {
  if (X.cols() != n_features)
    throw Error(ErrorCode::DimensionMismatch, "forest expects " + std::to_string(n_features) + " features, got " +
                                                  std::to_string(X.cols()));
  std::vector<double> p(X.rows(), 0.0);
  if (trees.empty()) return p;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double acc = 0.0;
    for (const auto& t : trees) acc += t.predict(X.row(r));
    p[r] = acc / static_cast<double>(trees.size());
  }
  return p;
}

void ForestModel::validate() const {
  for (const auto& t : trees) {
    const int n = static_cast<int>(t.node_count());
    if (n == 0 || t.threshold.size() != t.feature.size() || t.left.size() != t.feature.size() ||
        t.right.size() != t.feature.size() || t.positive.size() != t.feature.size() ||
        t.total.size() != t.feature.size())
      throw Error(ErrorCode::InvalidArgument, "malformed tree arrays");
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (t.feature[k] >= 0) {
        if (static_cast<std::size_t>(t.feature[k]) >= n_features || t.left[k] <= i || t.left[k] >= n ||
            t.right[k] <= i || t.right[k] >= n)
          throw Error(ErrorCode::InvalidArgument, "tree node has an invalid child or feature index");
      } else if (!(t.total[k] >= 1.0) || t.positive[k] < 0 || t.positive[k] > t.total[k]) {
        throw Error(ErrorCode::InvalidArgument, "tree leaf has invalid counts");
      }
    }
  }
}

namespace {

struct Sample {
  std::size_t row;
  double weight;
  int label;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double cost = 0.0;  // sum over children of weight * gini
  std::size_t left_count = 0;
};

double weighted_gini(double pos, double total) {
  if (total <= 0) return 0.0;
  return 2.0 * pos * (total - pos) / total;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, std::size_t max_features, std::mt19937_64& rng)
      : X_(X), max_features_(max_features), rng_(rng) {}

  DecisionTree build(std::vector<Sample> samples) {
    samples_ = std::move(samples);
    struct Task {
      std::size_t begin, end;
      int node;
    };
    std::vector<Task> stack;
    stack.push_back({0, samples_.size(), new_node()});
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      double pos = 0, tot = 0;
      for (std::size_t i = task.begin; i < task.end; ++i) {
        tot += samples_[i].weight;
        pos += samples_[i].weight * samples_[i].label;
      }
      const auto n = static_cast<std::size_t>(task.node);
      tree_.positive[n] = pos;
      tree_.total[n] = tot;
      if (pos == 0 || pos == tot || task.end - task.begin < 2) continue;
      const Split split = find_split(task.begin, task.end);
      if (split.feature < 0) continue;

      const auto f = static_cast<std::size_t>(split.feature);
      auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                samples_.begin() + static_cast<std::ptrdiff_t>(task.end),
                                [&](const Sample& s) { return X_(s.row, f) <= split.threshold; });
      const auto m = static_cast<std::size_t>(mid - samples_.begin());
      const int l = new_node();
      const int r = new_node();
      tree_.feature[n] = split.feature;
      tree_.threshold[n] = split.threshold;
      tree_.left[n] = l;
      tree_.right[n] = r;
      stack.push_back({m, task.end, r});
      stack.push_back({task.begin, m, l});
    }
    return std::move(tree_);
  }

 private:
  int new_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.positive.push_back(0.0);
    tree_.total.push_back(0.0);
    return static_cast<int>(tree_.feature.size() - 1);
  }

  Split find_split(std::size_t begin, std::size_t end) {
    const std::size_t d = X_.cols();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);

    Split best;
    std::size_t informative = 0;
    std::vector<std::pair<double, const Sample*>> column(end - begin);
    for (std::size_t f : order) {
      if (informative >= max_features_) break;
      for (std::size_t i = begin; i < end; ++i) column[i - begin] = {X_(samples_[i].row, f), &samples_[i]};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;
      ++informative;

      double tot = 0, pos = 0;
      for (const auto& c : column) {
        tot += c.second->weight;
        pos += c.second->weight * c.second->label;
      }
      double lw = 0, lp = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        lw += column[i].second->weight;
        lp += column[i].second->weight * column[i].second->label;
        const double a = column[i].first, b = column[i + 1].first;
        if (a == b) continue;
        const double cost = weighted_gini(lp, lw) + weighted_gini(pos - lp, tot - lw);
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        const bool better = best.feature < 0 || cost < best.cost ||
                            (cost == best.cost && (static_cast<int>(f) < best.feature ||
                                                   (static_cast<int>(f) == best.feature && thr < best.threshold)));
        if (better) {
          best.feature = static_cast<int>(f);
          best.threshold = thr;
          best.cost = cost;
        }
      }
    }
    return best;
  }

  const FeatureMatrix& X_;
  std::size_t max_features_;
  std::mt19937_64& rng_;
  std::vector<Sample> samples_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const FeatureMatrix& X, std::span<const int> labels, const ForestConfig& cfg) {
  if (labels.size() != X.rows()) throw Error(ErrorCode::DimensionMismatch, "one label per feature row is required");
  if (X.rows() == 0) throw Error(ErrorCode::SingleClass, "no training examples");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size())
    throw Error(ErrorCode::SingleClass, "training labels contain a single class");
  if (cfg.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "a forest needs at least one tree");

  ForestModel model;
  model.n_features = X.cols();
  model.config = cfg;
  const std::size_t mtry = cfg.max_features > 0
                               ? std::min(cfg.max_features, X.cols())
                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  model.trees.resize(cfg.n_trees);
  parallel_for(cfg.n_trees, [&](std::size_t t) {
    std::mt19937_64 rng(cfg.seed + t);
    std::vector<Sample> samples;
    if (cfg.bootstrap) {
      std::vector<double> counts(X.rows(), 0.0);
      std::uniform_int_distribution<std::size_t> pick(0, X.rows() - 1);
      for (std::size_t i = 0; i < X.rows(); ++i) counts[pick(rng)] += 1.0;
      for (std::size_t i = 0; i < X.rows(); ++i)
        if (counts[i] > 0) samples.push_back({i, counts[i], labels[i]});
    } else {
      for (std::size_t i = 0; i < X.rows(); ++i) samples.push_back({i, 1.0, labels[i]});
    }
    TreeBuilder builder(X, mtry, rng);
    model.trees[t] = builder.build(std::move(samples));
  });
  return model;
}

}  // namespace cellprob
