#include "cellprob/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "cellprob/error.hpp"
#include "cellprob/io.hpp"
#include "cellprob/parallel.hpp"

namespace cellprob {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum SeedStream : std::uint64_t { kSceneSeed = 1, kSplitSeed = 2, kClfSplitSeed = 3, kReplicateSeed = 4 };

json index3_json(Index3 v) { return json::array({v.z, v.y, v.x}); }
json vec3_json(Vec3 v) { return json::array({v.z, v.y, v.x}); }

std::string strategy_name(TilingStrategy s) { return s == TilingStrategy::PeakMargin ? "peak_margin" : "conv_margin"; }

ordered_json metrics_json(const DetectionMetrics& m) {
  return ordered_json{{"proposals", m.proposals}, {"tp", m.tp},     {"fp", m.fp},   {"fn", m.fn},
                      {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"brier", m.brier},
                      {"nll", m.nll}};
}

ordered_json mean_sd_json(const MeanSd& m) { return ordered_json{{"mean", m.mean}, {"sd", m.sd}}; }

ordered_json spatial_json(const SpatialReport& r, bool curves) {
  ordered_json j{{"mode", r.mode},
                 {"cell_count", r.cell_count},
                 {"density_per_mm3", r.density},
                 {"pct_cells_adjacent", r.pct_cells_adjacent},
                 {"pct_volume_adjacent", r.pct_volume_adjacent},
                 {"empty_cells", r.empty_cells}};
  if (r.mode == "probabilistic") {
    j["replicates"] = r.replicates;
    j["alpha"] = r.alpha;
    j["seed"] = r.seed;
    j["empty_replicates"] = r.empty_replicates;
    j["cell_count_stats"] = mean_sd_json(r.cell_count_stats);
    j["density_stats"] = mean_sd_json(r.density_stats);
    j["pct_cells_adjacent_stats"] = mean_sd_json(r.pct_cells_adjacent_stats);
    j["pct_volume_adjacent_stats"] = mean_sd_json(r.pct_volume_adjacent_stats);
  }
  if (curves) {
    j["grid_um"] = r.grid;
    j["esd_cdf"] = r.esd_cdf;
    j["cell_cdf"] = r.cell_cdf;
    j["cell_cdf_raw"] = r.cell_cdf_raw;
    if (r.mode == "probabilistic") {
      j["cell_envelope"] = {{"lower", r.cell_envelope.lower}, {"upper", r.cell_envelope.upper}};
      j["esd_envelope"] = {{"lower", r.esd_envelope.lower}, {"upper", r.esd_envelope.upper}};
    }
  }
  return j;
}

std::string volume_hash(const Volume3D& v) {
  const auto bytes = std::as_bytes(v.data());
  return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
}

// Everything kept from a scene once its volumes are dropped.
struct SceneRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  CoordSet gt;
  CoordSet proposals;  // with dm value
  FeatureMatrix features;
  std::vector<int> labels;
  std::string dm_hash, ua_hash, ue_hash;
};

CoordSet with_prob(const CoordSet& c, std::vector<double> p) {
  CoordSet out = c;
  out.prob = std::move(p);
  return out;
}

CoordSet inside_mask(const CoordSet& cells, const Volume3D& mask) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Index3 v = mask.voxel_of(cells.points[i]);
    if (mask.in_bounds(v) && mask.at(v) > 0.5f) keep.push_back(i);
  }
  return cells.select(keep);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

CoordSet detect_tiled(const Volume3D& dm, const TilingConfig& tiling, const NmsConfig& nms) {
  nms.validate();
  const PatchGrid grid = plan_tiling(dm.shape(), tiling);
  std::vector<CoordSet> per_patch(grid.patches.size());
  parallel_for(grid.patches.size(), [&](std::size_t i) {
    const Volume3D window = dm.crop(grid.output_in_original(grid.patches[i]), 0.0f);
    per_patch[i] = detect_peaks(window, nms);
  });
  return reconstruct_coordinates(per_patch, grid, dm.voxel_size());
}

std::vector<int> match_labels(const CoordSet& gt, const CoordSet& proposals, double t_match) {
  std::vector<int> labels(proposals.size(), 0);
  if (gt.empty() || proposals.empty()) return labels;
  const MatchReport r = score_detection(gt, proposals, t_match);
  for (const MatchPair& p : r.pairs) labels[p.pred] = 1;
  return labels;
}

DatasetSplit split_dataset(std::size_t scenes, double test_fraction, double val_fraction, std::uint64_t seed) {
  if (scenes < 2) throw Error(ErrorCode::InvalidArgument, "the dataset needs at least two scenes");
  if (!(test_fraction > 0 && test_fraction < 1) || !(val_fraction > 0 && val_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "split ratios must lie in (0, 1)");
  std::vector<std::size_t> order(scenes);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, kSplitSeed, 0));
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(scenes))), 1, scenes - 1);
  DatasetSplit s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());

  auto split_rest = [&](std::vector<std::size_t> pool, std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
    if (pool.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, pool.size() - 1);
    else n_val = 0;
    val.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
  };
  split_rest(rest, s.train, s.val);
  std::mt19937_64 rng2(derive_seed(seed, kClfSplitSeed, 0));
  std::shuffle(rest.begin(), rest.end(), rng2);
  split_rest(rest, s.clf_train, s.clf_val);
  std::sort(s.test.begin(), s.test.end());
  return s;
}

FeatureSpec synthetic_feature_spec(const SynthSpec& spec) {
  const double peak = spec.kernel.peak();
  const double a = std::max(spec.noise_sd, 1e-3) * peak;
  FeatureSpec f;
  f.threshold_ranges = {{"dm", {0.1 * peak, 0.9 * peak}},
                        {"ua", {(1.0 - spec.noise_gradient) * a, (1.0 + spec.noise_gradient) * a}},
                        {"ue", {a, 0.1 * a}}};
  return f;
}

CoordSet filter_by_value(const CoordSet& proposals, double threshold) {
  if (!proposals.has_value() && !proposals.empty())
    throw Error(ErrorCode::InvalidArgument, "proposals need a dm_value column");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < proposals.size(); ++i)
    if (proposals.value[i] > threshold) keep.push_back(i);
  return proposals.select(keep);
}

ThresholdSweep sweep_thresholds(const std::vector<CoordSet>& proposals, const std::vector<CoordSet>& gt,
                                const std::vector<double>& thresholds, double t_match) {
  if (proposals.size() != gt.size()) throw Error(ErrorCode::InvalidArgument, "one GT set per proposal set");
  if (thresholds.empty()) throw Error(ErrorCode::InvalidArgument, "the threshold grid is empty");
  ThresholdSweep s;
  s.thresholds = thresholds;
  s.f1.resize(thresholds.size());
  parallel_for(thresholds.size(), [&](std::size_t k) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const MatchReport r = score_detection(gt[i], filter_by_value(proposals[i], thresholds[k]), t_match);
      tp += r.tp;
      fp += r.fp;
      fn += r.fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    s.f1[k] = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  });
  s.best_threshold = thresholds.front();
  s.best_f1 = -1;
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (s.f1[k] > s.best_f1 || (s.f1[k] == s.best_f1 && thresholds[k] < s.best_threshold)) {
      s.best_f1 = s.f1[k];
      s.best_threshold = thresholds[k];
    }
  return s;
}

void PipelineConfig::validate() const {
  scene.validate();
  if (scenes < 2) throw Error(ErrorCode::InvalidArgument, "the pipeline needs at least two scenes");
  if (!(test_fraction > 0 && test_fraction < 1) || !(val_fraction > 0 && val_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "split ratios must lie in (0, 1)");
  tiling.validate();
  nms.validate();
  feature_spec().validate();
  if (!(t_match > 0)) throw Error(ErrorCode::InvalidArgument, "t_match must be > 0");
  if (run_spatial && replicates < 2) throw Error(ErrorCode::InvalidArgument, "at least two replicates are required");
  for (double f : threshold_fractions)
    if (!(f >= 0)) throw Error(ErrorCode::InvalidArgument, "threshold fractions must be nonnegative");
}

FeatureSpec PipelineConfig::feature_spec() const { return features ? *features : synthetic_feature_spec(scene); }

std::vector<double> PipelineConfig::thresholds() const {
  const double peak = scene.kernel.peak();
  std::vector<double> out;
  if (threshold_fractions.empty()) {
    for (int k = 1; k <= 19; ++k) out.push_back(static_cast<double>(k) / 20.0 * peak);
  } else {
    for (double f : threshold_fractions) out.push_back(f * peak);
  }
  return out;
}

std::string classifier_kind_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Forest: return "forest";
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::Both: return "both";
  }
  return "forest";
}

ClassifierKind parse_classifier_kind(std::string_view s) {
  if (s == "forest") return ClassifierKind::Forest;
  if (s == "mlp") return ClassifierKind::Mlp;
  if (s == "both") return ClassifierKind::Both;
  throw Error(ErrorCode::InvalidArgument, "classifier must be forest, mlp or both");
}

namespace {

ordered_json config_json(const PipelineConfig& c) {
  const SynthSpec& s = c.scene;
  const FeatureSpec f = c.feature_spec();
  ordered_json ranges;
  for (const auto& [name, r] : f.threshold_ranges) ranges[name] = {r.first, r.second};
  ordered_json hidden = json::array();
  for (auto h : c.mlp.hidden) hidden.push_back(h);
  return ordered_json{
      {"seed", c.seed},
      {"scenes", c.scenes},
      {"test_fraction", c.test_fraction},
      {"val_fraction", c.val_fraction},
      {"scene",
       {{"shape", index3_json(s.shape)},
        {"voxel_size_um", vec3_json(s.voxel_size)},
        {"cell_count", s.cell_count},
        {"min_separation_um", s.min_separation},
        {"sigma_um", s.kernel.sigma},
        {"kernel_cutoff_um", s.kernel.cutoff},
        {"noise_sd", s.noise_sd},
        {"noise_gradient", s.noise_gradient},
        {"noise_smoothing", s.noise_smoothing},
        {"background_floor", s.background_floor},
        {"distractor_count", s.distractor_count},
        {"distractor_amplitude", {s.distractor_min, s.distractor_max}},
        {"tube_count", s.tube_count},
        {"tube_radius_um", s.tube_radius},
        {"tube_step_um", s.tube_step},
        {"tube_length_um", s.tube_length},
        {"tube_turn", s.tube_turn},
        {"tissue_fraction", s.tissue_fraction}}},
      {"tiling",
       {{"strategy", strategy_name(c.tiling.strategy)},
        {"l_in", index3_json(c.tiling.l_in)},
        {"conv_margin", index3_json(c.tiling.conv_margin)},
        {"peak_margin", index3_json(c.tiling.peak_margin)}}},
      {"nms", {{"min_distance_um", c.nms.min_distance}, {"threshold", c.nms.threshold}}},
      {"features",
       {{"window_sides_um", f.window_sides},
        {"percentile_range", {f.percentile_lo, f.percentile_hi}},
        {"threshold_ranges", ranges}}},
      {"classifier", classifier_kind_name(c.classifier)},
      {"forest",
       {{"n_trees", c.forest.n_trees},
        {"max_features", c.forest.max_features},
        {"bootstrap", c.forest.bootstrap},
        {"seed", c.forest.seed}}},
      {"mlp",
       {{"hidden", hidden},
        {"epochs", c.mlp.epochs},
        {"batch_size", c.mlp.batch_size},
        {"learning_rate", c.mlp.learning_rate},
        {"seed", c.mlp.seed}}},
      {"t_match_um", c.t_match},
      {"thresholds", c.thresholds()},
      {"spatial",
       {{"enabled", c.run_spatial},
        {"replicates", c.replicates},
        {"adjacency_um", c.spatial.adjacency_um},
        {"grid_points", c.spatial.grid_points},
        {"lookup", c.spatial.lookup == DistanceLookup::Trilinear ? "trilinear" : "nearest"},
        {"cdf_mode", c.spatial.cdf_mode == CdfMode::Kde ? "kde" : "empirical"}}}};
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& cfg) { return config_json(cfg).dump(2); }

MeanSd summarize(const std::vector<double>& values) {
  MeanSd r;
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

DetectionMetrics evaluate_detections(const CoordSet& gt, const CoordSet& pred, double t_match) {
  pred.validate();
  DetectionMetrics m;
  m.proposals = pred.size();
  const bool probabilistic = !pred.prob.empty();
  const CoordSet positives = probabilistic ? pred.positives(0.5) : pred;
  const MatchReport det = score_detection(gt, positives, t_match);
  m.tp = det.tp;
  m.fp = det.fp;
  m.fn = det.fn;
  m.precision = det.precision;
  m.recall = det.recall;
  m.f1 = det.f1;
  const CalibrationScore cal =
      probabilistic ? score_calibration(gt, pred, t_match) : score_calibration(det, gt, pred);
  m.brier = cal.brier;
  m.nll = cal.nll;
  return m;
}

std::string detection_metrics_json(const DetectionMetrics& m) { return metrics_json(m).dump(2); }

std::string spatial_report_json(const SpatialReport& r, bool curves) { return spatial_json(r, curves).dump(2); }

std::string spatial_report_csv(const SpatialReport& r) {
  const bool prob = r.mode == "probabilistic";
  std::string s = "distance_um,esd_cdf,cell_cdf,cell_cdf_raw";
  if (prob) s += ",cell_lower,cell_upper,esd_lower,esd_upper";
  s += '\n';
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    s += format_double(r.grid[i]) + ',' + format_double(r.esd_cdf[i]) + ',' +
         format_double(r.cell_cdf.empty() ? 0.0 : r.cell_cdf[i]) + ',' +
         format_double(r.cell_cdf_raw.empty() ? 0.0 : r.cell_cdf_raw[i]);
    if (prob) {
      auto at = [&](const std::vector<double>& v) { return format_double(v.empty() ? 0.0 : v[i]); };
      s += ',' + at(r.cell_envelope.lower) + ',' + at(r.cell_envelope.upper) + ',' + at(r.esd_envelope.lower) + ',' +
           at(r.esd_envelope.upper);
    }
    s += '\n';
  }
  return s;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineOutputs& outputs, const ProgressFn& progress) {
  cfg.validate();
  auto log = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  const FeatureSpec fspec = cfg.feature_spec();
  const std::vector<std::string> map_names{"dm", "ua", "ue"};

  PipelineResult result;
  result.split = split_dataset(cfg.scenes, cfg.test_fraction, cfg.val_fraction, cfg.seed);

  // Scenes are generated one at a time; only proposals and features are kept.
  std::vector<SceneRecord> scenes(cfg.scenes);
  for (std::size_t i = 0; i < cfg.scenes; ++i) {
    SceneRecord& rec = scenes[i];
    rec.index = i;
    rec.seed = derive_seed(cfg.seed, kSceneSeed, i);
    SynthSpec spec = cfg.scene;
    spec.seed = rec.seed;
    rec.gt = generate_coords(spec);
    const RegressorOutput reg = oracle_regress(rec.gt, spec);
    rec.dm_hash = volume_hash(reg.dm);
    rec.ua_hash = volume_hash(reg.aleatoric);
    rec.ue_hash = volume_hash(reg.epistemic);
    rec.proposals = detect_tiled(reg.dm, cfg.tiling, cfg.nms);
    const std::vector<NamedMap> maps{{"dm", &reg.dm}, {"ua", &reg.aleatoric}, {"ue", &reg.epistemic}};
    rec.features = extract_features(maps, rec.proposals, fspec);
    rec.labels = match_labels(rec.gt, rec.proposals, cfg.t_match);
    log("scene " + std::to_string(i) + ": " + std::to_string(rec.gt.size()) + " cells, " +
        std::to_string(rec.proposals.size()) + " proposals");
  }

  // Deterministic baseline: threshold chosen on the validation scenes.
  {
    std::vector<CoordSet> props, gts;
    for (std::size_t i : result.split.val) {
      props.push_back(scenes[i].proposals);
      gts.push_back(scenes[i].gt);
    }
    result.sweep = sweep_thresholds(props, gts, cfg.thresholds(), cfg.t_match);
    log("deterministic threshold " + format_double(result.sweep.best_threshold) + " (validation F1 " +
        format_double(result.sweep.best_f1) + ")");
  }

  auto stack = [&](const std::vector<std::size_t>& idx, FeatureMatrix& X, std::vector<int>& y) {
    for (std::size_t i : idx) {
      X.append_rows(scenes[i].features);
      y.insert(y.end(), scenes[i].labels.begin(), scenes[i].labels.end());
    }
  };

  std::optional<ForestModel> forest;
  std::optional<MlpModel> mlp;
  if (cfg.classifier != ClassifierKind::Mlp) {
    std::vector<std::size_t> idx = result.split.train;
    idx.insert(idx.end(), result.split.val.begin(), result.split.val.end());
    std::sort(idx.begin(), idx.end());
    FeatureMatrix X;
    std::vector<int> y;
    stack(idx, X, y);
    forest = train_forest(X, y, cfg.forest);
    log("forest trained on " + std::to_string(X.rows()) + " proposals");
  }
  if (cfg.classifier != ClassifierKind::Forest) {
    FeatureMatrix Xtr, Xval;
    std::vector<int> ytr, yval;
    stack(result.split.clf_train, Xtr, ytr);
    stack(result.split.clf_val, Xval, yval);
    mlp = Xval.rows() > 0 ? train_mlp(Xtr, ytr, Xval, yval, cfg.mlp) : train_mlp(Xtr, ytr, cfg.mlp);
    log("mlp trained on " + std::to_string(Xtr.rows()) + " proposals (epoch " + std::to_string(mlp->selected_epoch) +
        ")");
  }

  ordered_json scene_json = json::array();
  ordered_json eval_json = json::array();
  ordered_json spatial_out = json::array();
  ordered_json files = ordered_json::object();
  std::vector<double> agg[3][5];  // [det|forest|mlp][f1, precision, recall, brier, nll]
  auto push_agg = [&](int k, const DetectionMetrics& m) {
    agg[k][0].push_back(m.f1);
    agg[k][1].push_back(m.precision);
    agg[k][2].push_back(m.recall);
    agg[k][3].push_back(m.brier);
    agg[k][4].push_back(m.nll);
  };
  std::vector<double> adj_det, adj_prob;

  for (const SceneRecord& rec : scenes) {
    std::string role = "train";
    if (std::binary_search(result.split.test.begin(), result.split.test.end(), rec.index)) role = "test";
    else if (std::binary_search(result.split.val.begin(), result.split.val.end(), rec.index)) role = "val";
    scene_json.push_back({{"index", rec.index},
                          {"seed", rec.seed},
                          {"role", role},
                          {"cells", rec.gt.size()},
                          {"proposals", rec.proposals.size()},
                          {"true_proposals", std::accumulate(rec.labels.begin(), rec.labels.end(), 0)},
                          {"sha256", {{"dm", rec.dm_hash}, {"ua", rec.ua_hash}, {"ue", rec.ue_hash},
                                      {"gt_csv", sha256_hex(coords_to_csv(rec.gt))},
                                      {"proposals_csv", sha256_hex(coords_to_csv(rec.proposals))}}}});
  }

  for (std::size_t i : result.split.test) {
    const SceneRecord& rec = scenes[i];
    SceneEvaluation ev;
    ev.scene = i;
    ev.deterministic = evaluate_detections(rec.gt, filter_by_value(rec.proposals, result.sweep.best_threshold),
                                           cfg.t_match);
    push_agg(0, ev.deterministic);
    CoordSet primary;
    if (forest) {
      primary = with_prob(rec.proposals, forest->predict_proba(rec.features));
      ev.forest = evaluate_detections(rec.gt, primary, cfg.t_match);
      push_agg(1, *ev.forest);
    }
    if (mlp) {
      CoordSet c = with_prob(rec.proposals, mlp->predict_proba(rec.features));
      ev.mlp = evaluate_detections(rec.gt, c, cfg.t_match);
      push_agg(2, *ev.mlp);
      if (!forest) primary = std::move(c);
    }
    ordered_json ej{{"scene", i}, {"deterministic", metrics_json(ev.deterministic)}};
    if (ev.forest) ej["forest"] = metrics_json(*ev.forest);
    if (ev.mlp) ej["mlp"] = metrics_json(*ev.mlp);
    eval_json.push_back(ej);
    result.evaluations.push_back(ev);

    if (!outputs.dir.empty()) {
      const std::string name = "scene" + std::to_string(i) + "_classified.csv";
      const std::string text = coords_to_csv(primary);
      write_text(outputs.dir / name, text);
      files[name] = sha256_hex(text);
    }

    if (cfg.run_spatial) {
      SynthSpec spec = cfg.scene;
      spec.seed = rec.seed;
      const StructureMasks masks = generate_structures(spec);
      const SpatialContext ctx = build_spatial_context(masks.structure, masks.tissue, cfg.spatial);
      const CoordSet cells = inside_mask(primary, masks.tissue);
      SceneSpatial sp;
      sp.scene = i;
      sp.deterministic = analyze_deterministic(cells, ctx, cfg.spatial);
      sp.probabilistic = analyze_probabilistic(cells, ctx, cfg.replicates, derive_seed(cfg.seed, kReplicateSeed, i),
                                               cfg.spatial);
      const std::vector<double> det_dist =
          cell_distances(cells.positives(cfg.spatial.positive_cut), ctx.edt, cfg.spatial.lookup);
      if (!det_dist.empty()) sp.ks_deterministic = ks_2sample(det_dist, ctx.esd);
      adj_det.push_back(sp.deterministic.pct_cells_adjacent);
      adj_prob.push_back(sp.probabilistic.pct_cells_adjacent_stats.mean);
      spatial_out.push_back({{"scene", i},
                             {"cells_in_tissue", cells.size()},
                             {"structure_hash", volume_hash(masks.structure)},
                             {"tissue_hash", volume_hash(masks.tissue)},
                             {"deterministic", spatial_json(sp.deterministic, false)},
                             {"probabilistic", spatial_json(sp.probabilistic, false)},
                             {"ks_cells_vs_esd",
                              {{"statistic", sp.ks_deterministic.statistic}, {"p_value", sp.ks_deterministic.p_value}}}});
      if (!outputs.dir.empty()) {
        for (const SpatialReport* r : {&sp.deterministic, &sp.probabilistic}) {
          const std::string name = "scene" + std::to_string(i) + "_spatial_" + r->mode + ".csv";
          const std::string text = spatial_report_csv(*r);
          write_text(outputs.dir / name, text);
          files[name] = sha256_hex(text);
        }
      }
      log("scene " + std::to_string(i) + ": spatial analysis done");
      result.spatial.push_back(std::move(sp));
    }
  }

  static const char* const kMetricNames[5] = {"f1", "precision", "recall", "brier", "nll"};
  static const char* const kMethodNames[3] = {"deterministic", "forest", "mlp"};
  ordered_json aggregate = ordered_json::object();
  for (int k = 0; k < 3; ++k) {
    if (agg[k][0].empty()) continue;
    ordered_json a = ordered_json::object();
    for (int m = 0; m < 5; ++m) a[kMetricNames[m]] = mean_sd_json(summarize(agg[k][m]));
    aggregate[kMethodNames[k]] = a;
  }

  ordered_json sweep{{"selected_threshold", result.sweep.best_threshold},
                     {"validation_f1", result.sweep.best_f1},
                     {"thresholds", result.sweep.thresholds},
                     {"f1", result.sweep.f1}};

  ordered_json report{{"version", 1},
                      {"seed", cfg.seed},
                      {"config", config_json(cfg)},
                      {"config_sha256", sha256_hex(config_json(cfg).dump())},
                      {"split",
                       {{"test", result.split.test},
                        {"train", result.split.train},
                        {"val", result.split.val},
                        {"classifier_train", result.split.clf_train},
                        {"classifier_val", result.split.clf_val}}},
                      {"scenes", scene_json},
                      {"deterministic_threshold", sweep}};
  if (mlp) report["mlp_selected_epoch"] = mlp->selected_epoch;
  report["evaluation"] = {{"per_scene", eval_json}, {"aggregate", aggregate}};
  if (cfg.run_spatial) {
    ordered_json sp{{"per_scene", spatial_out}};
    std::vector<double> diffs;
    for (std::size_t k = 0; k < adj_det.size(); ++k) diffs.push_back(adj_prob[k] - adj_det[k]);
    try {
      const TestResult w = wilcoxon_signed_rank(diffs);
      sp["wilcoxon_pct_cells_adjacent"] = {{"statistic", w.statistic}, {"p_value", w.p_value}};
    } catch (const Error&) {
      sp["wilcoxon_pct_cells_adjacent"] = nullptr;
    }
    report["spatial"] = sp;
  }
  if (!files.empty()) report["files_sha256"] = files;
  result.report = report.dump(2) + "\n";
  return result;
}

}  // namespace cellprob
