// Serial reference kernels against their OpenMP counterparts on the bench scene.

#include "opennav/mask_pipeline.hpp"
#include "opennav/oracle_detector.hpp"
#include "opennav/projection.hpp"

#include <benchmark/benchmark.h>

using namespace opennav;

namespace {

const io::Scene& scene() {
  static const io::Scene s = synth::make_synthetic_scene(synth::presets::bench_scene(1));
  return s;
}

const io::FrameData& view() { return scene().frames.front(); }

// Full-frame mask; erosion cost scales with its area.
const Bitmap& big_mask() {
  static const Bitmap b = [] {
    const auto& k = view().frame.intrinsics;
    Bitmap m(k.width, k.height);
    for (int v = 20; v < k.height - 20; ++v)
      for (int u = 20; u < k.width - 20; ++u) m(u, v) = ((u / 37 + v / 29) % 5) != 0;
    return m;
  }();
  return b;
}

const mask::IsolatedDepth& dense_depths() {
  static const mask::IsolatedDepth d = [] {
    mask::IsolatedDepth out;
    const auto& f = view().frame;
    for (int v = 0; v < f.depth.height(); ++v)
      for (int u = 0; u < f.depth.width(); ++u) out.values.push_back({u, v, 1.0 + 1e-4 * (u + v)});
    return out;
  }();
  return d;
}

void BM_erode_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(mask::reference::erode(big_mask()));
}
void BM_erode_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(mask::erode(big_mask()));
}

void BM_back_project_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(projection::reference::back_project(dense_depths(), view().frame.intrinsics));
}
void BM_back_project_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(projection::back_project(dense_depths(), view().frame.intrinsics));
}

void BM_to_world_serial(benchmark::State& st) {
  const auto pts = projection::back_project(dense_depths(), view().frame.intrinsics);
  for (auto _ : st) benchmark::DoNotOptimize(projection::reference::to_world(pts, view().frame.pose));
}
void BM_to_world_parallel(benchmark::State& st) {
  const auto pts = projection::back_project(dense_depths(), view().frame.intrinsics);
  for (auto _ : st) benchmark::DoNotOptimize(projection::to_world(pts, view().frame.pose));
}

void BM_reconstruct_frame_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(projection::reference::reconstruct_frame(view().frame, view().instances, {}));
}
void BM_reconstruct_frame_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(projection::reconstruct_frame(view().frame, view().instances, {}));
}

}  // namespace

BENCHMARK(BM_erode_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_erode_parallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_back_project_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_back_project_parallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_to_world_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_to_world_parallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_reconstruct_frame_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reconstruct_frame_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
