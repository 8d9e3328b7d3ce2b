#pragma once

#include "sparsevox/footprint.hpp"
#include "sparsevox/geometry.hpp"
#include "sparsevox/rasterizer.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sparsevox {

class OptimizerState;

struct SubdivideConfig {
  double kappa = 1.0;
  double beta = 0.2;
  int budget = -1;                // max splits per step; negative = budget_fraction of live count
  double budget_fraction = 0.02;
  std::size_t hard_cap = 0;       // max live voxels; 0 = 8x the initial count (set by the trainer)
  double usefulness_ema = 0.5;

  // ConfigError for invalid values; warns on stderr when beta is outside [0.1, 0.3].
  void validate() const;
  std::size_t budget_for(std::size_t live) const;
};

struct DepthPercentiles {
  double z_p5 = 0.0;
  double z_p95 = 0.0;
};

DepthPercentiles compute_depth_percentiles(std::span<const double> depths);

// Splittable iff below the finest level and larger than kappa times the ray footprint.
bool eligibility(const Voxel& voxel, double spacing, double kappa, int max_level);

double normalize_depth(double z, const DepthPercentiles& p);

inline double far_bias(double z_normalized, double beta) { return 1.0 + beta * z_normalized; }

// u <- (1 - ema) u + ema * signal.
double update_usefulness(Voxel& voxel, double signal, double ema);

// Signal per voxel = w_max * mean luminance residual of the rays it contributed to this window.
void update_usefulness_from_window(VoxelGrid& grid, const WindowStats& window, double ema);

enum class Truncation { kNone, kBudget, kHardCap };

struct SplitReport {
  std::vector<VoxelKey> split;
  std::vector<double> priorities;  // aligned with `split`
  std::vector<std::array<VoxelKey, 8>> children;
  std::size_t eligible = 0;
  std::size_t budget = 0;
  Truncation truncated_by = Truncation::kNone;
  DepthPercentiles depth_percentiles;

  double min_selected_priority() const;
};

const char* to_string(Truncation t);

// Budgeted top-priority splitting. When `optimizer` is given its state is refreshed for the
// new topology.
SplitReport select_and_split(VoxelGrid& grid, std::span<const Camera> cameras, const SubdivideConfig& config,
                             OptimizerState* optimizer = nullptr);
SplitReport select_and_split(VoxelGrid& grid, const VoxelViewInfo& views, const SubdivideConfig& config,
                             OptimizerState* optimizer = nullptr);

// CSV: step,splits,truncated_by,min_selected_priority
void write_split_csv_header(std::ostream& out);
void append_split_csv(std::ostream& out, int step, const SplitReport& report);

}  // namespace sparsevox
