#pragma once

#include "sparsevox/footprint.hpp"
#include "sparsevox/geometry.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace sparsevox {

struct PruneConfig {
  int num_bins = 8;
  double q_start = 0.05;
  double q_end = 0.25;
  double near_far_relax = 0.2;
  double ema_alpha = 0.1;
  double m_low = 0.3;
  double m_high = 0.7;
  double cap_fraction = 0.05;
  double halo_wmax = 0.5;
  double halo_size_ratio = 2.0;
  double inside_floor = 1e-3;  // w_max above this counts as an inside observation

  void validate() const;  // ConfigError
};

struct BinReport {
  int bin = 0;
  std::size_t population = 0;
  double quantile = 0.0;
  std::optional<double> tau;
  std::size_t pruned = 0;
  std::size_t protected_count = 0;
};

struct PruneReport {
  std::vector<BinReport> bins;
  std::size_t live_before = 0;
  std::size_t candidates = 0;
  std::size_t cap = 0;
  bool cap_limited = false;
  std::vector<VoxelKey> removed;

  std::size_t total_removed() const { return removed.size(); }
};

// Equal-population bins by rank of the depth proxy (ties broken by dense index, i.e. key order).
std::vector<int> assign_depth_bins(std::span<const double> depth_proxy, int num_bins);
std::vector<int> assign_depth_bins(const VoxelGrid& grid, std::span<const Camera> cameras, int num_bins);

// Smallest observed w_max whose empirical CDF reaches q; nullopt for an empty bin.
std::optional<double> bin_threshold(std::span<const double> weights, double q);

// Annealed quantile for a bin: linear q_start -> q_end over progress in [0, 1], then scaled by
// 1 - relax * (b / (B - 1) - 0.5) so near bins prune slightly more than far bins.
double bin_quantile(const PruneConfig& config, double progress, int bin, int num_bins);

// EMA + hysteresis update of a voxel's inside label from an observation in [0, 1].
void update_inside_state(Voxel& voxel, double observation, const PruneConfig& config);
// Applies update_inside_state to every voxel with x = 1{w_max > inside_floor}.
void update_inside_states(VoxelGrid& grid, const PruneConfig& config);

// Voxels shielded from pruning this step: small relative to the footprint, or high-w_max with a
// high-w_max face neighbour at the same level.
std::vector<bool> keep_halo_mask(const VoxelGrid& grid, std::span<const double> spacing, const PruneConfig& config);
std::vector<bool> keep_halo_mask(const VoxelGrid& grid, std::span<const Camera> cameras, const PruneConfig& config);

// One adaptation-barrier prune. `progress` in [0, 1] drives quantile annealing.
PruneReport prune_step(VoxelGrid& grid, std::span<const Camera> cameras, const PruneConfig& config, double progress);
// Same, with view geometry already computed for the current topology.
PruneReport prune_step(VoxelGrid& grid, const VoxelViewInfo& views, const PruneConfig& config, double progress);

// CSV: step,bin,population,tau,pruned,protected
void write_prune_csv_header(std::ostream& out);
void append_prune_csv(std::ostream& out, int step, const PruneReport& report);

}  // namespace sparsevox
