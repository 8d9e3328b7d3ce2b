#pragma once

#include "sparsevox/geometry.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <span>
#include <vector>

namespace sparsevox {

// Per-voxel view geometry shared by pruning and subdivision, indexed by dense voxel index.
struct VoxelViewInfo {
  std::vector<double> depth;    // mean camera depth over cameras that see the center
  std::vector<double> spacing;  // smallest inter-ray spacing over those cameras
};

// Voxels no camera sees fall back to the distance to the nearest camera center, and the
// spacing that camera would have at that distance.
VoxelViewInfo compute_view_info(const VoxelGrid& grid, std::span<const Camera> cameras);

}  // namespace sparsevox
