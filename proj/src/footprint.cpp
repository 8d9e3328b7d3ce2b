#include "sparsevox/footprint.hpp"

#include "sparsevox/errors.hpp"

#include <algorithm>
#include <limits>

namespace sparsevox {

VoxelViewInfo compute_view_info(const VoxelGrid& grid, std::span<const Camera> cameras) {
  if (cameras.empty()) throw ArgumentError("compute_view_info: need at least one camera");
  VoxelViewInfo info;
  info.depth.resize(grid.size());
  info.spacing.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3& p = grid.voxel(i).center();
    double depth_sum = 0.0;
    int seen = 0;
    double spacing = std::numeric_limits<double>::infinity();
    for (const Camera& cam : cameras) {
      if (!sees(cam, p)) continue;
      const double z = camera_depth(cam, p);
      depth_sum += z;
      ++seen;
      spacing = std::min(spacing, inter_ray_spacing(cam, z));
    }
    if (seen > 0) {
      info.depth[i] = depth_sum / seen;
      info.spacing[i] = spacing;
      continue;
    }
    double nearest = std::numeric_limits<double>::infinity();
    const Camera* nearest_cam = &cameras.front();
    for (const Camera& cam : cameras) {
      const double d = (cam.center() - p).norm();
      if (d < nearest) {
        nearest = d;
        nearest_cam = &cam;
      }
    }
    info.depth[i] = nearest;
    info.spacing[i] = nearest > 0.0 ? inter_ray_spacing(*nearest_cam, nearest) : 0.0;
  }
  return info;
}

}  // namespace sparsevox
