#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellprob/classifier.hpp"
#include "cellprob/coords.hpp"
#include "cellprob/detect.hpp"
#include "cellprob/evalmetrics.hpp"
#include "cellprob/features.hpp"
#include "cellprob/spatial.hpp"
#include "cellprob/stats.hpp"
#include "cellprob/synth.hpp"
#include "cellprob/tiling.hpp"

namespace cellprob {

/// SplitMix64 mixing of (master, stream, index); stable across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Tiled proposal detection: each patch's output window is cropped from
/// `dm` (zero outside the volume), NMS runs per patch, and the results are
/// stitched with reconstruct_coordinates. Returned in patch order.
CoordSet detect_tiled(const Volume3D& dm, const TilingConfig& tiling, const NmsConfig& nms);

/// 1 for proposals that are a true positive of the Hungarian matching
/// against `gt` within t_match, else 0.
std::vector<int> match_labels(const CoordSet& gt, const CoordSet& proposals, double t_match);

/// Scene indices of the dataset partitions. `test` holds test_fraction of
/// the scenes (at least one); the rest split into train/val by
/// val_fraction (val gets at least one when two or more remain), and a
/// second shuffle gives the classifier split.
struct DatasetSplit {
  std::vector<std::size_t> test, train, val, clf_train, clf_val;
};
DatasetSplit split_dataset(std::size_t scenes, double test_fraction, double val_fraction, std::uint64_t seed);

/// Feature threshold ranges matched to a synthetic scene's intensity scale.
FeatureSpec synthetic_feature_spec(const SynthSpec& spec);

/// Threshold-based detection is equivalent to keeping the threshold-free
/// proposals whose DM value exceeds the threshold.
CoordSet filter_by_value(const CoordSet& proposals, double threshold);

struct ThresholdSweep {
  std::vector<double> thresholds;
  std::vector<double> f1;  ///< pooled over scenes
  double best_threshold = 0;
  double best_f1 = 0;
};
/// Pooled F1 of filter_by_value(proposals[i], t) against gt[i] for each t;
/// the best threshold is the lowest one reaching the maximum.
ThresholdSweep sweep_thresholds(const std::vector<CoordSet>& proposals, const std::vector<CoordSet>& gt,
                                const std::vector<double>& thresholds, double t_match);

enum class ClassifierKind { Forest, Mlp, Both };

struct PipelineConfig {
  SynthSpec scene{};  ///< template; each scene gets a derived seed
  std::size_t scenes = 5;
  double test_fraction = 0.2;
  double val_fraction = 0.2;
  TilingConfig tiling{{48, 48, 48}, {8, 8, 8}, {4, 4, 4}, TilingStrategy::PeakMargin};
  NmsConfig nms{};
  std::optional<FeatureSpec> features;  ///< defaults to synthetic_feature_spec(scene)
  ClassifierKind classifier = ClassifierKind::Forest;
  ForestConfig forest{};
  MlpConfig mlp{};
  double t_match = 4.0;
  std::vector<double> threshold_fractions;  ///< of the kernel peak; empty means 0.05, 0.10, ..., 0.95
  std::size_t replicates = 50;
  SpatialOptions spatial{};
  bool run_spatial = true;
  std::uint64_t seed = 0;

  void validate() const;
  FeatureSpec feature_spec() const;
  std::vector<double> thresholds() const;
};

std::string classifier_kind_name(ClassifierKind k);
ClassifierKind parse_classifier_kind(std::string_view s);

/// Config as a JSON document (the "config" block of the report).
std::string pipeline_config_json(const PipelineConfig& cfg);

struct DetectionMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, proposals = 0;
  double precision = 0, recall = 0, f1 = 0, brier = 0, nll = 0;
};

struct SceneEvaluation {
  std::size_t scene = 0;
  DetectionMetrics deterministic;
  std::optional<DetectionMetrics> forest, mlp;
};

struct SceneSpatial {
  std::size_t scene = 0;
  SpatialReport deterministic, probabilistic;
  TestResult ks_deterministic{0, 1};  ///< deterministic cell distances vs the ESD pool
};

struct PipelineResult {
  DatasetSplit split;
  ThresholdSweep sweep;
  std::vector<SceneEvaluation> evaluations;  ///< one per test scene
  std::vector<SceneSpatial> spatial;         ///< one per test scene when enabled
  std::string report;                        ///< consolidated JSON report
};

struct PipelineOutputs {
  std::filesystem::path dir;  ///< per-test-scene CSVs are written here when non-empty
};

using ProgressFn = std::function<void(std::string_view)>;

/// Runs the full synthetic pipeline: oracle regression, tiled threshold-free
/// detection, feature extraction, classifier training, evaluation against
/// the deterministic baseline and spatial analysis of the test scenes.
/// Identical configs give byte-identical reports.
PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineOutputs& outputs = {},
                            const ProgressFn& progress = {});

/// Metric means and SDs (n - 1 denominator; 0 for one scene).
MeanSd summarize(const std::vector<double>& values);

/// Detection scores for a prediction set; predictions without p count as
/// deterministic. F1 uses the positives (p >= 0.5), Brier and NLL all of them.
DetectionMetrics evaluate_detections(const CoordSet& gt, const CoordSet& pred, double t_match);

std::string detection_metrics_json(const DetectionMetrics& m);
/// Scalars, and with `curves` the grid, CDFs and envelopes.
std::string spatial_report_json(const SpatialReport& r, bool curves);
/// Plot-ready columns: distance_um, esd_cdf, cell_cdf, cell_cdf_raw, and
/// for probabilistic reports cell_lower, cell_upper, esd_lower, esd_upper.
std::string spatial_report_csv(const SpatialReport& r);

}  // namespace cellprob
