// Serial reference rasterizer against the OpenMP kernels, forward and backward.

#include "sparsevox/rasterizer.hpp"
#include "sparsevox/synth.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

namespace sv = sparsevox;

namespace {

struct Fixture {
  sv::VoxelGrid grid;
  sv::Camera camera;
  sv::Image dl_dcolor;
  sv::Image dl_dtransmittance;
};

// A level-5 grid (32768 voxels) of semi-transparent cells seen by one ring camera at 128x128.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.grid = sv::VoxelGrid::init_uniform(sv::unit_scene_bounds(), 5, 0.05, sv::Vec3(0.5, 0.4, 0.3));
    out.camera = sv::ring_cameras(sv::three_box_scene(128, 16))[3];
    out.dl_dcolor = sv::Image(out.camera.width, out.camera.height, 3, 1e-3);
    out.dl_dtransmittance = sv::Image(out.camera.width, out.camera.height, 1, -1e-3);
    return out;
  }();
  return f;
}

void BM_ForwardReference(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(sv::render_image_reference(f.grid, f.camera).image.data().data());
}

void BM_ForwardOpenMP(benchmark::State& state) {
  const Fixture& f = fixture();
  sv::RenderOptions opts;
  opts.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sv::render_image(f.grid, f.camera, opts).image.data().data());
}

void BM_BackwardReference(benchmark::State& state) {
  const Fixture& f = fixture();
  sv::GradientBuffer grads;
  for (auto _ : state) {
    grads.assign(f.grid.size(), sv::VoxelGradient{});
    sv::backward_image_reference(f.grid, f.camera, {}, f.dl_dcolor, f.dl_dtransmittance, grads);
    benchmark::DoNotOptimize(grads.data());
  }
}

// Forward with the sample cache plus backward, the per-iteration cost during training.
void BM_ForwardBackwardOpenMP(benchmark::State& state) {
  const Fixture& f = fixture();
  sv::RenderOptions opts;
  opts.threads = static_cast<int>(state.range(0));
  opts.keep_cache = true;
  sv::GradientBuffer grads;
  for (auto _ : state) {
    const auto fwd = sv::render_image(f.grid, f.camera, opts);
    grads.assign(f.grid.size(), sv::VoxelGradient{});
    sv::backward_image(f.grid, fwd, f.dl_dcolor, f.dl_dtransmittance, grads, opts.threads);
    benchmark::DoNotOptimize(grads.data());
  }
}

void BM_ForwardBackwardReference(benchmark::State& state) {
  const Fixture& f = fixture();
  sv::GradientBuffer grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sv::render_image_reference(f.grid, f.camera).image.data().data());
    grads.assign(f.grid.size(), sv::VoxelGradient{});
    sv::backward_image_reference(f.grid, f.camera, {}, f.dl_dcolor, f.dl_dtransmittance, grads);
    benchmark::DoNotOptimize(grads.data());
  }
}

void thread_counts(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= omp_get_max_threads(); t *= 2) b->Arg(t);
  if ((omp_get_max_threads() & (omp_get_max_threads() - 1)) != 0) b->Arg(omp_get_max_threads());
}

}  // namespace

BENCHMARK(BM_ForwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardOpenMP)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BackwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackwardOpenMP)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
