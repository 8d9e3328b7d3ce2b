#pragma once

#include "sparsevox/rasterizer.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace sparsevox {

struct PruneReport;
struct SplitReport;

struct AdamConfig {
  double lr_opacity = 5e-2;
  double lr_color = 2e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Moments for one voxel's four parameters (opacity, r, g, b) and its own step count.
struct AdamSlot {
  std::array<double, 4> m{0, 0, 0, 0};
  std::array<double, 4> v{0, 0, 0, 0};
  std::int64_t step = 0;
};

// One Adam update of a single scalar; exposed for reference checks.
double adam_update(double param, double grad, double& m, double& v, std::int64_t step, double lr,
                   const AdamConfig& config);

// Adam state aligned with the grid's dense voxel order. State exists exactly for stored voxels.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(const VoxelGrid& grid, const AdamConfig& config);

  const AdamConfig& config() const { return config_; }
  const std::vector<VoxelKey>& keys() const { return keys_; }
  const std::vector<AdamSlot>& slots() const { return slots_; }
  std::size_t size() const { return keys_.size(); }

  // Applies one update to every voxel. ArgumentError on a size mismatch with the gradients,
  // ConsistencyError if the grid topology differs from the tracked keys.
  void step(VoxelGrid& grid, const GradientBuffer& grads);

  // Drops state for pruned voxels and split parents, adds zeroed state for children, and
  // re-aligns with the grid. ConsistencyError if a reported key is unknown or the result
  // does not match the grid's key set.
  void refresh_after_topology(const VoxelGrid& grid, const SplitReport* split, const PruneReport* prune);

 private:
  AdamConfig config_;
  std::vector<VoxelKey> keys_;
  std::vector<AdamSlot> slots_;
};

}  // namespace sparsevox
