// Command-line front end: one subcommand per pipeline stage plus the
// end-to-end synthetic `pipeline` run.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cellprob/classifier.hpp"
#include "cellprob/densitymap.hpp"
#include "cellprob/detect.hpp"
#include "cellprob/error.hpp"
#include "cellprob/evalmetrics.hpp"
#include "cellprob/features.hpp"
#include "cellprob/io.hpp"
#include "cellprob/pipeline.hpp"
#include "cellprob/spatial.hpp"
#include "cellprob/synth.hpp"
#include "cellprob/tiling.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using namespace cellprob;
using nlohmann::ordered_json;

namespace {

struct Triple {
  std::vector<double> v;
  Vec3 vec() const { return {v[0], v[1], v[2]}; }
  Index3 idx() const {
    return {static_cast<std::int64_t>(v[0]), static_cast<std::int64_t>(v[1]), static_cast<std::int64_t>(v[2])};
  }
};

CLI::Option* add_triple(CLI::App* app, const std::string& name, Triple& t, const std::string& help) {
  return app->add_option(name, t.v, help)->expected(3)->capture_default_str();
}

// --config lives on the root app (CLI11 only reads the root's config file);
// fallthrough lets it follow the subcommand name.
CLI::App* with_config(CLI::App* sub) {
  sub->fallthrough();
  return sub;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_text(path, text);
}

// Options shared by subcommands that render or synthesize a kernel.
struct KernelOpts {
  double sigma = 2.0;
  double cutoff = 16.0;
  std::string compounding = "max";
  std::string amplitude = "unit";

  void add(CLI::App* app) {
    app->add_option("--sigma", sigma, "kernel sigma, micrometers")->capture_default_str();
    app->add_option("--cutoff", cutoff, "kernel support radius, micrometers")->capture_default_str();
    app->add_option("--compounding", compounding, "max or sum")
        ->check(CLI::IsMember({"max", "sum"}))
        ->capture_default_str();
    app->add_option("--amplitude", amplitude, "unit (peak 1) or normalized")
        ->check(CLI::IsMember({"unit", "normalized"}))
        ->capture_default_str();
  }
  KernelSpec spec() const {
    KernelSpec k;
    k.sigma = sigma;
    k.cutoff = cutoff;
    k.compounding = compounding == "sum" ? Compounding::Sum : Compounding::Max;
    k.amplitude = amplitude == "normalized" ? Amplitude::Normalized : Amplitude::UnitPeak;
    return k;
  }
};

struct SceneOpts {
  Triple shape{{64, 64, 64}};
  Triple voxel{{1, 1, 1}};
  SynthSpec base;
  KernelOpts kernel;

  void add(CLI::App* app) {
    add_triple(app, "--shape", shape, "volume shape nz ny nx");
    add_triple(app, "--voxel-size", voxel, "voxel size sz sy sx, micrometers");
    app->add_option("--cells", base.cell_count, "number of cells")->capture_default_str();
    app->add_option("--min-separation", base.min_separation, "minimum cell separation, micrometers")
        ->capture_default_str();
    kernel.add(app);
    app->add_option("--noise-sd", base.noise_sd, "noise SD as a fraction of the kernel peak")->capture_default_str();
    app->add_option("--noise-gradient", base.noise_gradient, "relative noise variation along x")
        ->capture_default_str();
    app->add_option("--noise-smoothing", base.noise_smoothing, "noise correlation length, voxels")
        ->capture_default_str();
    app->add_option("--background-floor", base.background_floor, "zero values below this many noise SDs")
        ->capture_default_str();
    app->add_option("--distractors", base.distractor_count, "number of distractor blobs")->capture_default_str();
    app->add_option("--distractor-min", base.distractor_min, "lowest distractor amplitude, fraction of peak")
        ->capture_default_str();
    app->add_option("--distractor-max", base.distractor_max, "highest distractor amplitude, fraction of peak")
        ->capture_default_str();
    app->add_option("--tubes", base.tube_count, "number of random-walk tubes")->capture_default_str();
    app->add_option("--tube-radius", base.tube_radius, "tube radius, micrometers")->capture_default_str();
    app->add_option("--tube-length", base.tube_length, "tube length in micrometers (0: largest extent)")
        ->capture_default_str();
    app->add_option("--tissue-fraction", base.tissue_fraction, "ellipsoid semi-axes relative to the half extent")
        ->capture_default_str();
  }
  SynthSpec spec(std::uint64_t seed) const {
    SynthSpec s = base;
    s.shape = shape.idx();
    s.voxel_size = voxel.vec();
    s.kernel = kernel.spec();
    s.seed = seed;
    return s;
  }
};

struct TilingOpts {
  std::string strategy = "peak";
  Triple l_in{{48, 48, 48}};
  Triple conv{{8, 8, 8}};
  Triple peak{{4, 4, 4}};

  void add(CLI::App* app, bool allow_none) {
    std::vector<std::string> choices{"peak", "conv"};
    if (allow_none) choices.push_back("none");
    app->add_option("--tiling", strategy, "tiling strategy: peak, conv" + std::string(allow_none ? " or none" : ""))
        ->check(CLI::IsMember(choices))
        ->capture_default_str();
    add_triple(app, "--l-in", l_in, "regressor input size, voxels");
    add_triple(app, "--conv-margin", conv, "convolutional margin, voxels");
    add_triple(app, "--peak-margin", peak, "peak margin, voxels (ignored by conv)");
  }
  TilingConfig config() const {
    TilingConfig t;
    t.l_in = l_in.idx();
    t.conv_margin = conv.idx();
    t.strategy = strategy == "conv" ? TilingStrategy::ConvMargin : TilingStrategy::PeakMargin;
    t.peak_margin = strategy == "conv" ? Index3{0, 0, 0} : peak.idx();
    return t;
  }
};

struct FeatureOpts {
  std::vector<std::string> maps{"dm", "ua", "ue"};
  std::vector<double> windows{4, 8, 16, 32};
  std::vector<double> dm_range, ua_range, ue_range;

  void add(CLI::App* app) {
    app->add_option("--maps", maps, "maps to use, any of dm ua ue")
        ->check(CLI::IsMember({"dm", "ua", "ue"}))
        ->capture_default_str();
    app->add_option("--windows", windows, "window sides, micrometers")->capture_default_str();
    app->add_option("--dm-range", dm_range, "dm threshold range (default 1 1.5)")->expected(2);
    app->add_option("--ua-range", ua_range, "ua threshold range (default 1 10)")->expected(2);
    app->add_option("--ue-range", ue_range, "ue threshold range (default 1 0.2)")->expected(2);
  }
  FeatureSpec spec() const {
    FeatureSpec f;
    f.window_sides = windows;
    if (!dm_range.empty()) f.threshold_ranges["dm"] = {dm_range[0], dm_range[1]};
    if (!ua_range.empty()) f.threshold_ranges["ua"] = {ua_range[0], ua_range[1]};
    if (!ue_range.empty()) f.threshold_ranges["ue"] = {ue_range[0], ue_range[1]};
    return f;
  }
};

std::vector<NamedMap> select_maps(const RegressorOutput& out, const std::vector<std::string>& names) {
  std::vector<NamedMap> maps;
  for (const auto& n : names) {
    if (n == "dm") maps.push_back({n, &out.dm});
    else if (n == "ua") maps.push_back({n, &out.aleatoric});
    else if (n == "ue") maps.push_back({n, &out.epistemic});
    else throw Error(ErrorCode::InvalidArgument, "unknown map '" + n + "'");
  }
  return maps;
}

ordered_json report_json(const MatchReport& r, const CalibrationScore& c) {
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"gt", p.gt}, {"pred", p.pred}, {"distance_um", p.distance}});
  return ordered_json{{"t_match_um", r.t_match},
                      {"tp", r.tp},
                      {"fp", r.fp},
                      {"fn", r.fn},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"precision_defined", r.precision_defined},
                      {"recall_defined", r.recall_defined},
                      {"brier", c.brier},
                      {"nll", c.nll},
                      {"calibration_terms", c.terms},
                      {"pairs", pairs},
                      {"unmatched_gt", r.unmatched_gt},
                      {"unmatched_pred", r.unmatched_pred}};
}

int error_exit(const std::string& name, const std::string& message) {
  std::cerr << ordered_json{{"error", name}, {"message", message}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic 3D cell detection and spatial analysis"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides CELLPROB_THREADS)");
  app.set_config("--config", "", "JSON config file for the subcommand; command-line flags take precedence");
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));

  // synth
  auto* synth = with_config(app.add_subcommand("synth", "generate a synthetic scene and oracle regressor output"));
  SceneOpts synth_scene;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth_scene.add(synth);
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--out-dir", synth_out, "output directory")->required();

  // render-dm
  auto* render = with_config(app.add_subcommand("render-dm", "render a density map from coordinates"));
  std::string render_coords, render_out;
  Triple render_shape{{64, 64, 64}}, render_voxel{{1, 1, 1}};
  KernelOpts render_kernel;
  render->add_option("--coords", render_coords, "coordinate CSV")->required()->check(CLI::ExistingFile);
  add_triple(render, "--shape", render_shape, "volume shape nz ny nx");
  add_triple(render, "--voxel-size", render_voxel, "voxel size, micrometers");
  render_kernel.add(render);
  render->add_option("--out", render_out, "output .raw volume")->required();

  // detect
  auto* detect = with_config(app.add_subcommand("detect", "non-maximum suppression on a density map"));
  std::string detect_dm, detect_out;
  NmsConfig detect_nms;
  TilingOpts detect_tiling;
  detect_tiling.strategy = "none";
  detect->add_option("--dm", detect_dm, "density map .raw volume")->required()->check(CLI::ExistingFile);
  detect->add_option("--min-distance", detect_nms.min_distance, "micrometers")->capture_default_str();
  detect->add_option("--threshold", detect_nms.threshold, "values must exceed this")->capture_default_str();
  detect_tiling.add(detect, true);
  detect->add_option("--out", detect_out, "output CSV (stdout if omitted)");

  // features
  auto* features = with_config(app.add_subcommand("features", "dump proposal features as CSV"));
  std::string feat_reg, feat_props, feat_out;
  FeatureOpts feat_opts;
  features->add_option("--regressor", feat_reg, "regressor output prefix")->required();
  features->add_option("--proposals", feat_props, "proposal CSV")->required()->check(CLI::ExistingFile);
  feat_opts.add(features);
  features->add_option("--out", feat_out, "output CSV")->required();

  // train-classifier
  auto* train = with_config(app.add_subcommand("train-classifier", "train a proposal classifier"));
  std::vector<std::string> train_reg, train_gt, train_props;
  std::string train_kind = "forest", train_out;
  double train_tmatch = 4.0;
  FeatureOpts train_feat;
  ForestConfig train_forest_cfg;
  MlpConfig train_mlp_cfg;
  train->add_option("--regressor", train_reg, "regressor output prefixes, one per scene")->required();
  train->add_option("--gt", train_gt, "GT coordinate CSVs, one per scene")->required();
  train->add_option("--proposals", train_props, "proposal CSVs, one per scene")->required();
  train->add_option("--kind", train_kind, "forest or mlp")->check(CLI::IsMember({"forest", "mlp"}))->capture_default_str();
  train->add_option("--t-match", train_tmatch, "matching distance for labels, micrometers")->capture_default_str();
  train->add_option("--trees", train_forest_cfg.n_trees, "forest size")->capture_default_str();
  train->add_option("--max-features", train_forest_cfg.max_features, "features per split (0: ceil(sqrt(d)))")
      ->capture_default_str();
  train->add_option("--epochs", train_mlp_cfg.epochs, "MLP epochs")->capture_default_str();
  train->add_option("--hidden", train_mlp_cfg.hidden, "MLP hidden layer sizes")->capture_default_str();
  std::uint64_t train_seed = 0;
  train->add_option("--seed", train_seed, "random seed")->capture_default_str();
  train_feat.add(train);
  train->add_option("--out", train_out, "model JSON")->required();

  // classify
  auto* classify = with_config(app.add_subcommand("classify", "attach probabilities to proposals"));
  std::string cls_model, cls_reg, cls_props, cls_out;
  classify->add_option("--model", cls_model, "model JSON")->required()->check(CLI::ExistingFile);
  classify->add_option("--regressor", cls_reg, "regressor output prefix")->required();
  classify->add_option("--proposals", cls_props, "proposal CSV")->required()->check(CLI::ExistingFile);
  classify->add_option("--out", cls_out, "output CSV with p (stdout if omitted)");

  // eval
  auto* eval = with_config(app.add_subcommand("eval", "match predictions to GT and score them"));
  std::string eval_gt, eval_pred, eval_out;
  double eval_tmatch = 4.0, eval_cut = 0.5;
  eval->add_option("--gt", eval_gt, "GT coordinate CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", eval_pred, "prediction CSV (with or without p)")->required()->check(CLI::ExistingFile);
  eval->add_option("--t-match", eval_tmatch, "micrometers")->capture_default_str();
  eval->add_option("--positive-cut", eval_cut, "F1 counts predictions with p >= this")->capture_default_str();
  eval->add_option("--out", eval_out, "report JSON (stdout if omitted)");

  // spatial
  auto* spatial = with_config(app.add_subcommand("spatial", "distance statistics of cells to structures"));
  std::string sp_cells, sp_structure, sp_tissue, sp_out, sp_csv, sp_mode = "both", sp_lookup = "trilinear",
                                                                      sp_cdf = "kde";
  std::size_t sp_reps = 50;
  std::uint64_t sp_seed = 0;
  SpatialOptions sp_opt;
  spatial->add_option("--cells", sp_cells, "cell CSV (p column optional)")->required()->check(CLI::ExistingFile);
  spatial->add_option("--structure", sp_structure, "structure mask .raw")->required()->check(CLI::ExistingFile);
  spatial->add_option("--tissue", sp_tissue, "tissue mask .raw")->required()->check(CLI::ExistingFile);
  spatial->add_option("--mode", sp_mode, "deterministic, probabilistic or both")
      ->check(CLI::IsMember({"deterministic", "probabilistic", "both"}))
      ->capture_default_str();
  spatial->add_option("--replicates", sp_reps, "Monte-Carlo replicates")->capture_default_str();
  spatial->add_option("--seed", sp_seed, "replicate seed")->capture_default_str();
  spatial->add_option("--adjacency", sp_opt.adjacency_um, "adjacency distance, micrometers")->capture_default_str();
  spatial->add_option("--grid-points", sp_opt.grid_points, "CDF grid size")->capture_default_str();
  spatial->add_option("--lookup", sp_lookup, "trilinear or nearest")
      ->check(CLI::IsMember({"trilinear", "nearest"}))
      ->capture_default_str();
  spatial->add_option("--cdf", sp_cdf, "kde or empirical")->check(CLI::IsMember({"kde", "empirical"}))->capture_default_str();
  spatial->add_option("--out", sp_out, "report JSON (stdout if omitted)");
  spatial->add_option("--csv-prefix", sp_csv, "write <prefix>_<mode>.csv curves");

  // pipeline
  auto* pipe = with_config(app.add_subcommand("pipeline", "end-to-end synthetic run with a consolidated report"));
  SceneOpts pipe_scene;
  PipelineConfig pcfg;
  TilingOpts pipe_tiling;
  std::string pipe_kind = "forest", pipe_out, pipe_dir;
  bool no_spatial = false;
  pipe_scene.add(pipe);
  pipe->add_option("--scenes", pcfg.scenes, "number of synthetic scenes")->capture_default_str();
  pipe->add_option("--test-fraction", pcfg.test_fraction, "held-out test share")->capture_default_str();
  pipe->add_option("--val-fraction", pcfg.val_fraction, "validation share of the remainder")->capture_default_str();
  pipe_tiling.add(pipe, false);
  pipe->add_option("--min-distance", pcfg.nms.min_distance, "NMS distance, micrometers")->capture_default_str();
  pipe->add_option("--classifier", pipe_kind, "forest, mlp or both")
      ->check(CLI::IsMember({"forest", "mlp", "both"}))
      ->capture_default_str();
  pipe->add_option("--trees", pcfg.forest.n_trees, "forest size")->capture_default_str();
  pipe->add_option("--epochs", pcfg.mlp.epochs, "MLP epochs")->capture_default_str();
  pipe->add_option("--t-match", pcfg.t_match, "matching distance, micrometers")->capture_default_str();
  pipe->add_option("--replicates", pcfg.replicates, "spatial Monte-Carlo replicates")->capture_default_str();
  pipe->add_flag("--no-spatial", no_spatial, "skip the spatial analysis");
  pipe->add_option("--seed", pcfg.seed, "master seed")->capture_default_str();
  pipe->add_option("--out", pipe_out, "report JSON (stdout if omitted)");
  pipe->add_option("--out-dir", pipe_dir, "directory for per-scene CSVs");
  bool quiet = false;
  pipe->add_flag("--quiet", quiet, "no progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (threads > 0) setenv("CELLPROB_THREADS", std::to_string(threads).c_str(), 1);

  try {
    if (*synth) {
      const SynthSpec spec = synth_scene.spec(synth_seed);
      fs::create_directories(synth_out);
      const fs::path dir(synth_out);
      const CoordSet gt = generate_coords(spec);
      const RegressorOutput reg = oracle_regress(gt, spec);
      const StructureMasks masks = generate_structures(spec);
      KernelSpec gt_kernel = spec.kernel;
      gt_kernel.compounding = Compounding::Max;
      write_coords(dir / "gt.csv", gt);
      write_volume(dir / "gt_dm.raw", render_dm(gt, spec.shape, spec.voxel_size, gt_kernel));
      write_regressor_output(dir / "pred", reg);
      write_volume(dir / "structure.raw", masks.structure);
      write_volume(dir / "tissue.raw", masks.tissue);
      ordered_json files;
      for (const char* f : {"gt.csv", "gt_dm.raw", "pred_dm.raw", "pred_ua.raw", "pred_ue.raw", "structure.raw",
                            "tissue.raw"})
        files[f] = sha256_file(dir / f);
      PipelineConfig shown;
      shown.scene = spec;
      const auto cfg = ordered_json::parse(pipeline_config_json(shown));
      ordered_json manifest{{"version", 1}, {"seed", synth_seed}, {"scene", cfg["scene"]}, {"cells", gt.size()},
                            {"regressor_prefix", "pred"}, {"sha256", files}};
      write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    } else if (*render) {
      const CoordSet c = read_coords(render_coords);
      write_volume(render_out, render_dm(c, render_shape.idx(), render_voxel.vec(), render_kernel.spec()));
    } else if (*detect) {
      const Volume3D dm = read_volume(detect_dm);
      const CoordSet peaks = detect_tiling.strategy == "none"
                                 ? detect_peaks(dm, detect_nms)
                                 : detect_tiled(dm, detect_tiling.config(), detect_nms);
      write_or_print(detect_out, coords_to_csv(peaks));
    } else if (*features) {
      const RegressorOutput reg = read_regressor_output(feat_reg);
      const CoordSet props = read_coords(feat_props);
      const FeatureSpec spec = feat_opts.spec();
      const FeatureMatrix X = extract_features(select_maps(reg, feat_opts.maps), props, spec);
      write_feature_csv(feat_out, X, feature_names(feat_opts.maps, spec));
    } else if (*train) {
      if (train_reg.size() != train_gt.size() || train_reg.size() != train_props.size())
        throw Error(ErrorCode::InvalidArgument, "--regressor, --gt and --proposals need one entry per scene");
      const FeatureSpec spec = train_feat.spec();
      FeatureMatrix X;
      std::vector<int> y;
      for (std::size_t i = 0; i < train_reg.size(); ++i) {
        const RegressorOutput reg = read_regressor_output(train_reg[i]);
        const CoordSet gt = read_coords(train_gt[i]);
        const CoordSet props = read_coords(train_props[i]);
        X.append_rows(extract_features(select_maps(reg, train_feat.maps), props, spec));
        const auto labels = match_labels(gt, props, train_tmatch);
        y.insert(y.end(), labels.begin(), labels.end());
      }
      Classifier model;
      if (train_kind == "forest") {
        train_forest_cfg.seed = train_seed;
        model = train_forest(X, y, train_forest_cfg);
      } else {
        train_mlp_cfg.seed = train_seed;
        model = train_mlp(X, y, train_mlp_cfg);
      }
      write_text(train_out, model_to_json(model, train_feat.maps, spec));
    } else if (*classify) {
      const LoadedModel m = model_from_json(read_text(cls_model));
      const RegressorOutput reg = read_regressor_output(cls_reg);
      const CoordSet props = read_coords(cls_props);
      write_or_print(cls_out, coords_to_csv(classify_proposals(m.model, select_maps(reg, m.map_names), props, m.spec)));
    } else if (*eval) {
      const CoordSet gt = read_coords(eval_gt);
      const CoordSet pred = read_coords(eval_pred);
      const CoordSet positives = pred.prob.empty() ? pred : pred.positives(eval_cut);
      const MatchReport r = score_detection(gt, positives, eval_tmatch);
      const CalibrationScore c = pred.prob.empty() ? score_calibration(r, gt, pred) : score_calibration(gt, pred, eval_tmatch);
      write_or_print(eval_out, report_json(r, c).dump(2) + "\n");
    } else if (*spatial) {
      sp_opt.lookup = sp_lookup == "nearest" ? DistanceLookup::Nearest : DistanceLookup::Trilinear;
      sp_opt.cdf_mode = sp_cdf == "empirical" ? CdfMode::Empirical : CdfMode::Kde;
      const CoordSet cells = read_coords(sp_cells);
      const SpatialContext ctx = build_spatial_context(read_volume(sp_structure), read_volume(sp_tissue), sp_opt);
      ordered_json out = ordered_json::object();
      std::vector<SpatialReport> reports;
      if (sp_mode != "probabilistic") reports.push_back(analyze_deterministic(cells, ctx, sp_opt));
      if (sp_mode != "deterministic") reports.push_back(analyze_probabilistic(cells, ctx, sp_reps, sp_seed, sp_opt));
      for (const auto& r : reports) {
        out[r.mode] = ordered_json::parse(spatial_report_json(r, true));
        if (!sp_csv.empty()) write_text(sp_csv + "_" + r.mode + ".csv", spatial_report_csv(r));
      }
      write_or_print(sp_out, out.dump(2) + "\n");
    } else if (*pipe) {
      pcfg.scene = pipe_scene.spec(0);
      pcfg.tiling = pipe_tiling.config();
      pcfg.classifier = parse_classifier_kind(pipe_kind);
      pcfg.run_spatial = !no_spatial;
      pcfg.forest.seed = derive_seed(pcfg.seed, 10, 0);
      pcfg.mlp.seed = derive_seed(pcfg.seed, 11, 0);
      PipelineOutputs outputs;
      if (!pipe_dir.empty()) {
        fs::create_directories(pipe_dir);
        outputs.dir = pipe_dir;
      }
      const PipelineResult res = run_pipeline(pcfg, outputs, [&](std::string_view msg) {
        if (!quiet) std::cerr << msg << "\n";
      });
      write_or_print(pipe_out, res.report);
    }
  } catch (const Error& e) {
    return error_exit(std::string(e.name()), e.what());
  } catch (const fs::filesystem_error& e) {
    return error_exit("Io", e.what());
  } catch (const std::exception& e) {
    return error_exit("Internal", e.what());
  }
  return 0;
}
