#include "sparsevox/pruning.hpp"

#include "sparsevox/errors.hpp"
#include "sparsevox/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace sparsevox {

void PruneConfig::validate() const {
  if (num_bins < 1) throw ConfigError("prune: num_bins must be >= 1");
  if (!(q_start > 0.0 && q_start < 1.0 && q_end > 0.0 && q_end < 1.0)) {
    throw ConfigError("prune: q_start and q_end must lie in (0, 1)");
  }
  if (!(near_far_relax >= 0.0 && near_far_relax < 2.0)) throw ConfigError("prune: near_far_relax must be in [0, 2)");
  if (std::max(q_start, q_end) * (1.0 + 0.5 * near_far_relax) >= 1.0) {
    throw ConfigError("prune: relaxed quantile would reach 1");
  }
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) throw ConfigError("prune: ema_alpha must be in (0, 1]");
  if (!(m_low >= 0.0 && m_high <= 1.0 && m_low < m_high)) throw ConfigError("prune: need 0 <= m_low < m_high <= 1");
  if (!(cap_fraction > 0.0 && cap_fraction <= 1.0)) throw ConfigError("prune: cap_fraction must be in (0, 1]");
  if (halo_size_ratio < 0.0) throw ConfigError("prune: halo_size_ratio must be non-negative");
}

std::vector<int> assign_depth_bins(std::span<const double> depth_proxy, int num_bins) {
  if (num_bins < 1) throw ArgumentError("assign_depth_bins: need at least one bin");
  const std::size_t n = depth_proxy.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return depth_proxy[a] < depth_proxy[b]; });
  std::vector<int> bins(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    bins[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(num_bins) / n);
  }
  return bins;
}

std::vector<int> assign_depth_bins(const VoxelGrid& grid, std::span<const Camera> cameras, int num_bins) {
  if (grid.empty()) return {};
  return assign_depth_bins(compute_view_info(grid, cameras).depth, num_bins);
}

std::optional<double> bin_threshold(std::span<const double> weights, double q) {
  if (weights.empty()) return std::nullopt;
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("bin_threshold: q must lie in (0, 1)");
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  return empirical_cdf_inverse(sorted, q);
}

double bin_quantile(const PruneConfig& config, double progress, int bin, int num_bins) {
  const double p = std::clamp(progress, 0.0, 1.0);
  const double q = config.q_start + (config.q_end - config.q_start) * p;
  const double position = num_bins > 1 ? static_cast<double>(bin) / (num_bins - 1) : 0.5;
  return q * (1.0 - config.near_far_relax * (position - 0.5));
}

void update_inside_state(Voxel& voxel, double observation, const PruneConfig& config) {
  voxel.inside_ema = (1.0 - config.ema_alpha) * voxel.inside_ema + config.ema_alpha * observation;
  if (voxel.inside_ema < config.m_low) {
    voxel.inside_state = InsideState::kOut;
  } else if (voxel.inside_ema > config.m_high) {
    voxel.inside_state = InsideState::kIn;
  }
}

void update_inside_states(VoxelGrid& grid, const PruneConfig& config) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Voxel& v = grid.mutable_voxel(i);
    update_inside_state(v, v.w_max > config.inside_floor ? 1.0 : 0.0, config);
  }
}

std::vector<bool> keep_halo_mask(const VoxelGrid& grid, std::span<const double> spacing, const PruneConfig& config) {
  if (spacing.size() != grid.size()) throw ArgumentError("keep_halo_mask: spacing size mismatch");
  std::vector<bool> mask(grid.size(), false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Voxel& v = grid.voxel(i);
    if (v.half_size() < config.halo_size_ratio * spacing[i]) {
      mask[i] = true;
      continue;
    }
    if (!(v.w_max > config.halo_wmax)) continue;
    const VoxelKey& k = v.key();
    const std::array<VoxelKey, 6> neighbours = {
        VoxelKey{k.level, k.i - 1, k.j, k.k}, VoxelKey{k.level, k.i + 1, k.j, k.k},
        VoxelKey{k.level, k.i, k.j - 1, k.k}, VoxelKey{k.level, k.i, k.j + 1, k.k},
        VoxelKey{k.level, k.i, k.j, k.k - 1}, VoxelKey{k.level, k.i, k.j, k.k + 1}};
    for (const auto& n : neighbours) {
      const auto idx = grid.find(n);
      if (idx && grid.voxel(*idx).w_max > config.halo_wmax) {
        mask[i] = true;
        break;
      }
    }
  }
  return mask;
}

std::vector<bool> keep_halo_mask(const VoxelGrid& grid, std::span<const Camera> cameras, const PruneConfig& config) {
  return keep_halo_mask(grid, compute_view_info(grid, cameras).spacing, config);
}

PruneReport prune_step(VoxelGrid& grid, std::span<const Camera> cameras, const PruneConfig& config, double progress) {
  if (grid.empty()) return prune_step(grid, VoxelViewInfo{}, config, progress);
  return prune_step(grid, compute_view_info(grid, cameras), config, progress);
}

PruneReport prune_step(VoxelGrid& grid, const VoxelViewInfo& views, const PruneConfig& config, double progress) {
  config.validate();
  PruneReport report;
  const std::size_t live = grid.size();
  report.live_before = live;
  if (live == 0) return report;
  if (views.depth.size() != live || views.spacing.size() != live) {
    throw ArgumentError("prune_step: view info does not match the grid");
  }

  const int num_bins = config.num_bins;
  const std::vector<int> bins = assign_depth_bins(views.depth, num_bins);
  const std::vector<bool> halo = keep_halo_mask(grid, views.spacing, config);

  std::vector<std::vector<double>> bin_weights(num_bins);
  for (std::size_t i = 0; i < live; ++i) bin_weights[bins[i]].push_back(grid.voxel(i).w_max);

  report.bins.resize(num_bins);
  for (int b = 0; b < num_bins; ++b) {
    BinReport& br = report.bins[b];
    br.bin = b;
    br.population = bin_weights[b].size();
    br.quantile = bin_quantile(config, progress, b, num_bins);
    br.tau = bin_threshold(bin_weights[b], br.quantile);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < live; ++i) {
    const Voxel& v = grid.voxel(i);
    BinReport& br = report.bins[bins[i]];
    if (halo[i]) {
      ++br.protected_count;
      continue;
    }
    const bool below = br.tau && v.w_max <= *br.tau;
    if (below || v.inside_state == InsideState::kOut) candidates.push_back(i);
  }
  report.candidates = candidates.size();
  report.cap = static_cast<std::size_t>(std::ceil(config.cap_fraction * static_cast<double>(live) - 1e-9));
  if (candidates.size() > report.cap) {
    report.cap_limited = true;
    // Dense index order is key order, so a stable sort on w_max breaks ties by key.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return grid.voxel(a).w_max < grid.voxel(b).w_max; });
    candidates.resize(report.cap);
    std::sort(candidates.begin(), candidates.end());
  }
  report.removed.reserve(candidates.size());
  for (std::size_t i : candidates) {
    report.removed.push_back(grid.voxel(i).key());
    ++report.bins[bins[i]].pruned;
  }
  grid.remove_voxels(report.removed);
  return report;
}

void write_prune_csv_header(std::ostream& out) { out << "step,bin,population,tau,pruned,protected\n"; }

void append_prune_csv(std::ostream& out, int step, const PruneReport& report) {
  for (const auto& b : report.bins) {
    out << step << ',' << b.bin << ',' << b.population << ',';
    if (b.tau) out << *b.tau;
    out << ',' << b.pruned << ',' << b.protected_count << '\n';
  }
}

}  // namespace sparsevox
