#include "sparsevox/rasterizer.hpp"

#include "sparsevox/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparsevox {
namespace {

Vec3 safe_inverse(const Vec3& d) {
  Vec3 inv;
  for (int a = 0; a < 3; ++a) inv[a] = d[a] != 0.0 ? 1.0 / d[a] : std::numeric_limits<double>::infinity();
  return inv;
}

// Opacity and color per voxel, evaluated once per render.
struct MaterialTable {
  std::vector<double> alpha;
  std::vector<Vec3> color;

  explicit MaterialTable(const VoxelGrid& grid) : alpha(grid.size()), color(grid.size()) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      alpha[i] = grid.voxel(i).alpha();
      color[i] = grid.voxel(i).color();
    }
  }
};

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

void trace_ray(const VoxelGrid& grid, const Ray& ray, RaySegmentList& out) {
  out.clear();
  const auto nodes = grid.nodes();
  if (nodes.empty()) return;
  const Vec3 inv = safe_inverse(ray.direction);

  struct Pending {
    std::int32_t node;
    double t_near;
    double t_far;
  };
  // Each descent level pushes at most 8 entries.
  std::array<Pending, 8 * 22> stack;
  std::size_t top = 0;

  double t0 = 0.0, t1 = 0.0;
  if (!intersect_aabb(ray.origin, inv, ray.direction, nodes[0].box_min, nodes[0].box_max, t0, t1)) return;
  if (!(t1 > std::max(t0, 0.0))) return;
  stack[top++] = {0, t0, t1};

  while (top > 0) {
    const Pending cur = stack[--top];
    const OctreeNode& node = nodes[cur.node];
    if (node.voxel >= 0) {
      out.push_back({static_cast<std::uint32_t>(node.voxel), std::max(cur.t_near, 0.0), cur.t_far});
      continue;
    }
    std::array<Pending, 8> hits;
    int count = 0;
    for (int o = 0; o < 8; ++o) {
      const std::int32_t child = node.children[o];
      if (child < 0) continue;
      double a = 0.0, b = 0.0;
      if (!intersect_aabb(ray.origin, inv, ray.direction, nodes[child].box_min, nodes[child].box_max, a, b))
        continue;
      if (!(b > std::max(a, 0.0))) continue;
      hits[count++] = {child, a, b};
    }
    // Nearest child must be popped first, so push farthest first.
    std::stable_sort(hits.begin(), hits.begin() + count,
                     [](const Pending& x, const Pending& y) { return x.t_near > y.t_near; });
    for (int n = 0; n < count; ++n) stack[top++] = hits[n];
  }
}

RaySegmentList trace_ray(const VoxelGrid& grid, const Ray& ray) {
  RaySegmentList out;
  trace_ray(grid, ray, out);
  return out;
}

CompositeResult composite_forward(std::span<const Segment> segments, const VoxelGrid& grid,
                                  bool early_termination) {
  CompositeResult result;
  result.weights.reserve(segments.size());
  double t = 1.0;
  for (const Segment& seg : segments) {
    const Voxel& v = grid.voxel(seg.voxel);
    const double alpha = v.alpha();
    const double w = t * alpha;
    result.color += w * v.color();
    result.weights.push_back(w);
    t = t * (1.0 - alpha);
    ++result.used;
    if (early_termination && t < kEarlyTerminationT) break;
  }
  result.transmittance = t;
  return result;
}

void composite_backward(std::span<const Segment> segments, const VoxelGrid& grid, const Vec3& dl_dcolor,
                        double dl_dtransmittance, GradientBuffer& grads) {
  if (grads.size() < grid.size()) grads.resize(grid.size(), VoxelGradient{0, 0, 0, 0});
  std::vector<double> t_before(segments.size());
  double t = 1.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    t_before[k] = t;
    t = t * (1.0 - grid.voxel(segments[k].voxel).alpha());
  }
  // behind: color seen just behind sample k; through: transmittance of everything behind k.
  Vec3 behind = Vec3::Zero();
  double through = 1.0;
  for (std::size_t k = segments.size(); k-- > 0;) {
    const Voxel& v = grid.voxel(segments[k].voxel);
    const double alpha = v.alpha();
    const Vec3 c = v.color();
    const double tb = t_before[k];
    const double dl_dalpha = dl_dcolor.dot(tb * (c - behind)) - dl_dtransmittance * tb * through;
    VoxelGradient& g = grads[segments[k].voxel];
    g[0] += dl_dalpha * alpha * (1.0 - alpha);
    const double w = tb * alpha;
    for (int ch = 0; ch < 3; ++ch) g[1 + ch] += dl_dcolor[ch] * w * c[ch] * (1.0 - c[ch]);
    behind = alpha * c + (1.0 - alpha) * behind;
    through *= 1.0 - alpha;
  }
}

RenderOutput render_image(const VoxelGrid& grid, const Camera& camera, const RenderOptions& options) {
  const int width = camera.width;
  const int height = camera.height;
  if (options.target) {
    if (options.target->width() != width || options.target->height() != height || options.target->channels() != 3)
      throw ArgumentError("render_image: target does not match camera dimensions");
  }
  const MaterialTable table(grid);
  const bool need_samples = options.keep_cache || options.collect_stats;

  RenderOutput out;
  out.image = Image(width, height, 3);
  out.transmittance = Image(width, height, 1);
  std::vector<std::vector<SampleCache::Sample>> row_samples(need_samples ? height : 0);
  std::vector<std::vector<std::uint32_t>> row_counts(need_samples ? height : 0);

#pragma omp parallel num_threads(resolve_threads(options.threads))
  {
    RaySegmentList segments;
#pragma omp for schedule(dynamic, 1)
    for (int y = 0; y < height; ++y) {
      if (need_samples) row_counts[y].assign(width, 0);
      for (int x = 0; x < width; ++x) {
        trace_ray(grid, pixel_ray(camera, x, y), segments);
        Vec3 color = Vec3::Zero();
        double t = 1.0;
        std::uint32_t used = 0;
        for (const Segment& seg : segments) {
          const double alpha = table.alpha[seg.voxel];
          const double w = t * alpha;
          color += w * table.color[seg.voxel];
          if (need_samples) row_samples[y].push_back({seg.voxel, alpha, t});
          t = t * (1.0 - alpha);
          ++used;
          if (options.early_termination && t < kEarlyTerminationT) break;
        }
        double* px = out.image.pixel(x, y);
        px[0] = color.x();
        px[1] = color.y();
        px[2] = color.z();
        out.transmittance.at(x, y) = t;
        if (need_samples) row_counts[y][x] = used;
      }
    }
  }

  if (!need_samples) return out;

  SampleCache& cache = out.cache;
  cache.offsets.assign(static_cast<std::size_t>(width) * height + 1, 0);
  std::size_t total = 0;
  for (int y = 0; y < height; ++y) total += row_samples[y].size();
  cache.samples.reserve(total);
  std::size_t p = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x, ++p) cache.offsets[p + 1] = cache.offsets[p] + row_counts[y][x];
    cache.samples.insert(cache.samples.end(), row_samples[y].begin(), row_samples[y].end());
    std::vector<SampleCache::Sample>().swap(row_samples[y]);
  }

  if (options.collect_stats) {
    FrameStats& stats = out.stats;
    stats.w_max.assign(grid.size(), 0.0);
    stats.residual_sum.assign(grid.size(), 0.0);
    stats.residual_count.assign(grid.size(), 0.0);
    p = 0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x, ++p) {
        double residual = 0.0;
        if (options.target) {
          const double* r = out.image.pixel(x, y);
          const double* g = options.target->pixel(x, y);
          residual = std::abs(luminance(r[0], r[1], r[2]) - luminance(g[0], g[1], g[2]));
        }
        for (std::uint32_t s = cache.offsets[p]; s < cache.offsets[p + 1]; ++s) {
          const auto& sample = cache.samples[s];
          const double w = sample.t_before * sample.alpha;
          if (w > stats.w_max[sample.voxel]) stats.w_max[sample.voxel] = w;
          if (options.target && w > kStatWeightFloor) {
            stats.residual_sum[sample.voxel] += residual;
            stats.residual_count[sample.voxel] += 1.0;
          }
        }
      }
    }
  }
  if (!options.keep_cache) {
    cache = SampleCache{};
  }
  return out;
}

void backward_image(const VoxelGrid& grid, const RenderOutput& forward, const Image& dl_dcolor,
                    const Image& dl_dtransmittance, GradientBuffer& grads, int threads) {
  const SampleCache& cache = forward.cache;
  const int width = forward.image.width();
  const int height = forward.image.height();
  if (cache.offsets.size() != forward.image.pixel_count() + 1) {
    throw ArgumentError("backward_image: forward pass has no sample cache");
  }
  if (!dl_dcolor.empty()) require_same_shape(dl_dcolor, forward.image, "backward_image");
  if (!dl_dtransmittance.empty()) require_same_shape(dl_dtransmittance, forward.transmittance, "backward_image");
  grads.resize(grid.size(), VoxelGradient{0, 0, 0, 0});

  const MaterialTable table(grid);
  std::vector<VoxelGradient> contributions(cache.samples.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      const Vec3 dl_dc = dl_dcolor.empty() ? Vec3::Zero() : Vec3(dl_dcolor.pixel(x, y)[0], dl_dcolor.pixel(x, y)[1],
                                                                  dl_dcolor.pixel(x, y)[2]);
      const double dl_dt = dl_dtransmittance.empty() ? 0.0 : dl_dtransmittance.at(x, y);
      Vec3 behind = Vec3::Zero();
      double through = 1.0;
      for (std::uint32_t s = cache.offsets[p + 1]; s-- > cache.offsets[p];) {
        const auto& sample = cache.samples[s];
        const double alpha = sample.alpha;
        const Vec3& c = table.color[sample.voxel];
        const double tb = sample.t_before;
        const double dl_dalpha = dl_dc.dot(tb * (c - behind)) - dl_dt * tb * through;
        VoxelGradient& g = contributions[s];
        g[0] = dl_dalpha * alpha * (1.0 - alpha);
        const double w = tb * alpha;
        for (int ch = 0; ch < 3; ++ch) g[1 + ch] = dl_dc[ch] * w * c[ch] * (1.0 - c[ch]);
        behind = alpha * c + (1.0 - alpha) * behind;
        through *= 1.0 - alpha;
      }
    }
  }

  // Merge in pixel order, back-to-front within a pixel, matching the serial reference.
  const std::size_t pixels = forward.image.pixel_count();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::uint32_t s = cache.offsets[p + 1]; s-- > cache.offsets[p];) {
      VoxelGradient& g = grads[cache.samples[s].voxel];
      const VoxelGradient& c = contributions[s];
      for (int i = 0; i < 4; ++i) g[i] += c[i];
    }
  }
}

void accumulate_frame_stats(VoxelGrid& grid, const FrameStats& frame, WindowStats& window) {
  if (frame.w_max.size() != grid.size()) throw ArgumentError("accumulate_frame_stats: stale frame statistics");
  if (window.residual_sum.size() != grid.size()) window.reset(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    update_wmax(grid.mutable_voxel(i), frame.w_max[i]);
    window.residual_sum[i] += frame.residual_sum[i];
    window.residual_count[i] += frame.residual_count[i];
  }
  ++window.views;
}

}  // namespace sparsevox
