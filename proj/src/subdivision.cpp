#include "sparsevox/subdivision.hpp"

#include "sparsevox/errors.hpp"
#include "sparsevox/optimizer.hpp"
#include "sparsevox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace sparsevox {

void SubdivideConfig::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("subdivide: kappa must be positive");
  if (!(budget_fraction >= 0.0)) throw ConfigError("subdivide: budget_fraction must be non-negative");
  if (!(usefulness_ema > 0.0 && usefulness_ema <= 1.0)) throw ConfigError("subdivide: usefulness_ema must be in (0, 1]");
  if (beta < 0.0) throw ConfigError("subdivide: beta must be non-negative");
  if (beta < 0.1 || beta > 0.3) {
    std::cerr << "warning: subdivide beta " << beta << " outside the recommended [0.1, 0.3]\n";
  }
}

std::size_t SubdivideConfig::budget_for(std::size_t live) const {
  if (budget >= 0) return static_cast<std::size_t>(budget);
  return static_cast<std::size_t>(std::ceil(budget_fraction * static_cast<double>(live) - 1e-9));
}

DepthPercentiles compute_depth_percentiles(std::span<const double> depths) {
  if (depths.empty()) return {};
  return {percentile(depths, 5.0), percentile(depths, 95.0)};
}

bool eligibility(const Voxel& voxel, double spacing, double kappa, int max_level) {
  return voxel.level() < max_level && voxel.half_size() > kappa * spacing;
}

double normalize_depth(double z, const DepthPercentiles& p) {
  const double spread = p.z_p95 - p.z_p5;
  if (!(spread > 0.0)) return 0.5;
  return std::clamp((z - p.z_p5) / spread, 0.0, 1.0);
}

double update_usefulness(Voxel& voxel, double signal, double ema) {
  voxel.usefulness = (1.0 - ema) * voxel.usefulness + ema * signal;
  return voxel.usefulness;
}

void update_usefulness_from_window(VoxelGrid& grid, const WindowStats& window, double ema) {
  if (window.residual_sum.size() != grid.size()) throw ArgumentError("update_usefulness: stale window statistics");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Voxel& v = grid.mutable_voxel(i);
    const double mean_residual =
        window.residual_count[i] > 0.0 ? window.residual_sum[i] / window.residual_count[i] : 0.0;
    update_usefulness(v, v.w_max * mean_residual, ema);
  }
}

double SplitReport::min_selected_priority() const {
  if (priorities.empty()) return 0.0;
  return *std::min_element(priorities.begin(), priorities.end());
}

const char* to_string(Truncation t) {
  switch (t) {
    case Truncation::kBudget: return "budget";
    case Truncation::kHardCap: return "hard_cap";
    case Truncation::kNone: break;
  }
  return "none";
}

SplitReport select_and_split(VoxelGrid& grid, std::span<const Camera> cameras, const SubdivideConfig& config,
                             OptimizerState* optimizer) {
  if (grid.empty()) return {};
  return select_and_split(grid, compute_view_info(grid, cameras), config, optimizer);
}

SplitReport select_and_split(VoxelGrid& grid, const VoxelViewInfo& views, const SubdivideConfig& config,
                             OptimizerState* optimizer) {
  SplitReport report;
  const std::size_t live = grid.size();
  if (live == 0) return report;
  if (views.depth.size() != live || views.spacing.size() != live) {
    throw ArgumentError("select_and_split: view info does not match the grid");
  }
  report.depth_percentiles = compute_depth_percentiles(views.depth);

  struct Candidate {
    std::size_t index;
    double priority;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < live; ++i) {
    const Voxel& v = grid.voxel(i);
    if (!eligibility(v, views.spacing[i], config.kappa, grid.max_level())) continue;
    const double z = normalize_depth(views.depth[i], report.depth_percentiles);
    candidates.push_back({i, v.usefulness * far_bias(z, config.beta)});
  }
  report.eligible = candidates.size();
  // Highest priority first; equal priorities keep key order.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.priority > b.priority; });

  report.budget = config.budget_for(live);
  std::size_t take = std::min(report.budget, candidates.size());
  if (take < candidates.size()) report.truncated_by = Truncation::kBudget;
  const std::size_t cap = config.hard_cap > 0 ? config.hard_cap : std::numeric_limits<std::size_t>::max();
  const std::size_t room = cap > live ? (cap - live) / 7 : 0;
  if (take > room) {
    take = room;
    report.truncated_by = Truncation::kHardCap;
  }

  for (std::size_t n = 0; n < take; ++n) {
    report.split.push_back(grid.voxel(candidates[n].index).key());
    report.priorities.push_back(candidates[n].priority);
  }
  if (!report.split.empty()) report.children = grid.split_voxels(report.split);
  if (optimizer) optimizer->refresh_after_topology(grid, &report, nullptr);
  return report;
}

void write_split_csv_header(std::ostream& out) { out << "step,splits,truncated_by,min_selected_priority\n"; }

void append_split_csv(std::ostream& out, int step, const SplitReport& report) {
  out << step << ',' << report.split.size() << ',' << to_string(report.truncated_by) << ','
      << report.min_selected_priority() << '\n';
}

}  // namespace sparsevox
