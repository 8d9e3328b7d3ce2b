#pragma once

#include "sparsevox/geometry.hpp"
#include "sparsevox/image.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace sparsevox {

// One voxel crossed by a ray; t_entry is clamped to the ray origin (t >= 0).
struct Segment {
  std::uint32_t voxel = 0;  // dense index into VoxelGrid::voxels()
  double t_entry = 0.0;
  double t_exit = 0.0;
};

using RaySegmentList = std::vector<Segment>;

inline constexpr double kEarlyTerminationT = 1e-4;
// Minimum per-ray weight for a sample to count towards a voxel's residual statistics.
inline constexpr double kStatWeightFloor = 1e-3;

// Front-to-back list of stored voxels hit by the ray, by hierarchical slab-test descent.
RaySegmentList trace_ray(const VoxelGrid& grid, const Ray& ray);
void trace_ray(const VoxelGrid& grid, const Ray& ray, RaySegmentList& out);

struct CompositeResult {
  Vec3 color = Vec3::Zero();
  double transmittance = 1.0;
  std::vector<double> weights;  // one per composited segment
  std::size_t used = 0;         // segments composited before early termination
};

// Front-to-back alpha compositing against a black background.
CompositeResult composite_forward(std::span<const Segment> segments, const VoxelGrid& grid,
                                  bool early_termination = false);

// Per-voxel gradient buffer: [d/d opacity_param, d/d color_params[0..2]].
using VoxelGradient = std::array<double, 4>;
using GradientBuffer = std::vector<VoxelGradient>;

// Reverse-mode gradient of the composite for one ray, accumulated (+=) into `grads`.
// `segments` must be exactly the composited prefix (CompositeResult::used entries).
void composite_backward(std::span<const Segment> segments, const VoxelGrid& grid, const Vec3& dl_dcolor,
                        double dl_dtransmittance, GradientBuffer& grads);

inline void update_wmax(Voxel& voxel, double w) {
  if (w > voxel.w_max) voxel.w_max = w;
}

struct RenderOptions {
  bool collect_stats = false;
  bool early_termination = false;
  bool keep_cache = false;        // retain per-sample data for backward_image
  const Image* target = nullptr;  // ground truth for residual statistics
  int threads = 0;                // 0 = OpenMP default
};

// Per-sample data retained from the forward pass, in pixel order then front-to-back.
struct SampleCache {
  struct Sample {
    std::uint32_t voxel;
    double alpha;
    double t_before;  // transmittance in front of this sample
  };
  std::vector<std::uint32_t> offsets;  // pixel p owns samples [offsets[p], offsets[p + 1])
  std::vector<Sample> samples;
};

// Statistics gathered from one rendered view, indexed by dense voxel index.
struct FrameStats {
  std::vector<double> w_max;
  std::vector<double> residual_sum;
  std::vector<double> residual_count;
};

struct RenderOutput {
  Image image;           // RGB
  Image transmittance;   // final per-ray transmittance
  SampleCache cache;     // filled when keep_cache or collect_stats
  FrameStats stats;      // filled when collect_stats
};

// OpenMP-parallel over image rows. Results are bit-identical for any thread count.
RenderOutput render_image(const VoxelGrid& grid, const Camera& camera, const RenderOptions& options = {});

// Gradient of a per-pixel loss through the cached forward pass. `dl_dcolor` is RGB,
// `dl_dtransmittance` single-channel; either may be empty. Accumulates into `grads` (resized to grid size).
void backward_image(const VoxelGrid& grid, const RenderOutput& forward, const Image& dl_dcolor,
                    const Image& dl_dtransmittance, GradientBuffer& grads, int threads = 0);

// Serial reference: per-pixel trace_ray + composite_forward/backward in pixel order.
RenderOutput render_image_reference(const VoxelGrid& grid, const Camera& camera,
                                    const RenderOptions& options = {});
void backward_image_reference(const VoxelGrid& grid, const Camera& camera, const RenderOptions& options,
                              const Image& dl_dcolor, const Image& dl_dtransmittance, GradientBuffer& grads);

// Per-voxel window accumulators between adaptation steps.
struct WindowStats {
  std::vector<double> residual_sum;
  std::vector<double> residual_count;
  std::size_t views = 0;

  void reset(std::size_t voxel_count) {
    residual_sum.assign(voxel_count, 0.0);
    residual_count.assign(voxel_count, 0.0);
    views = 0;
  }
};

// Folds a frame into the grid's w_max and the window residual accumulators.
void accumulate_frame_stats(VoxelGrid& grid, const FrameStats& frame, WindowStats& window);

}  // namespace sparsevox
