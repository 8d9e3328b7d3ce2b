// Serial reference paths for the OpenMP kernels in rasterizer.cpp. Kept for tests and benchmarks.
#include "sparsevox/errors.hpp"
#include "sparsevox/rasterizer.hpp"

#include <cmath>

namespace sparsevox {

RenderOutput render_image_reference(const VoxelGrid& grid, const Camera& camera, const RenderOptions& options) {
  RenderOutput out;
  out.image = Image(camera.width, camera.height, 3);
  out.transmittance = Image(camera.width, camera.height, 1);
  if (options.collect_stats) {
    out.stats.w_max.assign(grid.size(), 0.0);
    out.stats.residual_sum.assign(grid.size(), 0.0);
    out.stats.residual_count.assign(grid.size(), 0.0);
  }
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const RaySegmentList segments = trace_ray(grid, pixel_ray(camera, x, y));
      const CompositeResult c = composite_forward(segments, grid, options.early_termination);
      for (int ch = 0; ch < 3; ++ch) out.image.at(x, y, ch) = c.color[ch];
      out.transmittance.at(x, y) = c.transmittance;
      if (!options.collect_stats) continue;
      double residual = 0.0;
      if (options.target) {
        const double* g = options.target->pixel(x, y);
        residual = std::abs(luminance(c.color[0], c.color[1], c.color[2]) - luminance(g[0], g[1], g[2]));
      }
      for (std::size_t k = 0; k < c.used; ++k) {
        const std::uint32_t v = segments[k].voxel;
        const double w = c.weights[k];
        if (w > out.stats.w_max[v]) out.stats.w_max[v] = w;
        if (options.target && w > kStatWeightFloor) {
          out.stats.residual_sum[v] += residual;
          out.stats.residual_count[v] += 1.0;
        }
      }
    }
  }
  return out;
}

void backward_image_reference(const VoxelGrid& grid, const Camera& camera, const RenderOptions& options,
                              const Image& dl_dcolor, const Image& dl_dtransmittance, GradientBuffer& grads) {
  grads.resize(grid.size(), VoxelGradient{0, 0, 0, 0});
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const RaySegmentList segments = trace_ray(grid, pixel_ray(camera, x, y));
      const CompositeResult c = composite_forward(segments, grid, options.early_termination);
      const Vec3 dl_dc = dl_dcolor.empty()
                             ? Vec3::Zero()
                             : Vec3(dl_dcolor.at(x, y, 0), dl_dcolor.at(x, y, 1), dl_dcolor.at(x, y, 2));
      const double dl_dt = dl_dtransmittance.empty() ? 0.0 : dl_dtransmittance.at(x, y);
      composite_backward(std::span<const Segment>(segments).first(c.used), grid, dl_dc, dl_dt, grads);
    }
  }
}

}  // namespace sparsevox
