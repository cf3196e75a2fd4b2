#include <benchmark/benchmark.h>

#include <random>

#include "cellprob/densitymap.hpp"
#include "cellprob/detect.hpp"
#include "cellprob/edt.hpp"
#include "cellprob/evalmetrics.hpp"
#include "cellprob/features.hpp"
#include "cellprob/forest.hpp"
#include "cellprob/pipeline.hpp"
#include "cellprob/spatial.hpp"
#include "cellprob/synth.hpp"

using namespace cellprob;

namespace {

SynthSpec scene(std::int64_t side) {
  SynthSpec s;
  s.shape = {side, side, side};
  s.cell_count = static_cast<std::size_t>(side * side * side / 5000);
  s.seed = 1;
  return s;
}

CoordSet random_points(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  CoordSet c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({u(rng), u(rng), u(rng)});
  return c;
}

}  // namespace

static void BM_RenderDm(benchmark::State& state) {
  const SynthSpec s = scene(state.range(0));
  const CoordSet cells = generate_coords(s);
  for (auto _ : state) benchmark::DoNotOptimize(render_dm(cells, s.shape, s.voxel_size, s.kernel));
  state.SetItemsProcessed(state.iterations() * s.shape.product());
}
BENCHMARK(BM_RenderDm)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_DetectPeaks(benchmark::State& state) {
  const SynthSpec s = scene(state.range(0));
  const RegressorOutput reg = oracle_regress(generate_coords(s), s);
  for (auto _ : state) benchmark::DoNotOptimize(detect_peaks(reg.dm, {}));
  state.SetItemsProcessed(state.iterations() * s.shape.product());
}
BENCHMARK(BM_DetectPeaks)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_DistanceTransform(benchmark::State& state) {
  SynthSpec s = scene(state.range(0));
  const StructureMasks m = generate_structures(s);
  for (auto _ : state) benchmark::DoNotOptimize(distance_transform(m.structure));
  state.SetItemsProcessed(state.iterations() * s.shape.product());
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_HungarianScoring(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CoordSet gt = random_points(n, 200.0, 1);
  const CoordSet pred = random_points(n + n / 5, 200.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(score_detection(gt, pred, 4.0));
}
BENCHMARK(BM_HungarianScoring)->Arg(100)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_ExtractFeatures(benchmark::State& state) {
  const SynthSpec s = scene(64);
  const RegressorOutput reg = oracle_regress(generate_coords(s), s);
  const CoordSet proposals = detect_peaks(reg.dm, {});
  const std::vector<NamedMap> maps{{"dm", &reg.dm}, {"ua", &reg.aleatoric}, {"ue", &reg.epistemic}};
  const FeatureSpec spec = synthetic_feature_spec(s);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(maps, proposals, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(proposals.size()));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

static void BM_TrainForest(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix X(rows, 168);
  std::vector<int> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = static_cast<int>(r % 2);
    for (std::size_t c = 0; c < X.cols(); ++c) X(r, c) = g(rng) + (c < 10 ? y[r] : 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(X, y, {128, 0, true, 0}));
}
BENCHMARK(BM_TrainForest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_ProbabilisticSpatial(benchmark::State& state) {
  const SynthSpec s = scene(64);
  const StructureMasks m = generate_structures(s);
  const SpatialContext ctx = build_spatial_context(m.structure, m.tissue);
  CoordSet cells = generate_coords(s);
  cells.prob.assign(cells.size(), 0.6);
  for (auto _ : state)
    benchmark::DoNotOptimize(analyze_probabilistic(cells, ctx, static_cast<std::size_t>(state.range(0)), 0));
}
BENCHMARK(BM_ProbabilisticSpatial)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
