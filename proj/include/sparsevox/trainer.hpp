#pragma once

#include "sparsevox/dataset.hpp"
#include "sparsevox/geometry.hpp"
#include "sparsevox/image.hpp"
#include "sparsevox/losses.hpp"
#include "sparsevox/optimizer.hpp"
#include "sparsevox/pruning.hpp"
#include "sparsevox/subdivision.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "json.hpp"

namespace sparsevox {

struct AblationFlags {
  bool lf_off = false;
  bool prune_off = false;
  bool subdivide_off = false;
  bool depth_bins_off = false;  // pruning uses a single depth bin
};

struct TrainConfig {
  int total_iters = 2000;
  int adapt_every = 0;  // 0 = total_iters / 20
  double t0 = -1.0;     // negative = 0.3 * total_iters
  double t1 = -1.0;     // negative = 0.6 * total_iters
  double gamma_max = 0.6;
  double lf_eps = kDefaultLfEpsilon;
  LossWeights lambdas;
  PruneConfig prune;
  SubdivideConfig subdivide;
  AdamConfig optimizer;
  std::uint64_t seed = 0;
  AblationFlags ablate;

  Aabb bounds{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  int init_level = 3;
  double init_alpha = 0.1;
  double init_color = 0.5;
  int max_level = kDefaultMaxLevel;
  int holdout_every = 8;  // views i with i % holdout_every == 0 are held out
  bool early_termination = true;
  int threads = 0;  // 0 = OpenMP default

  // Fills derived defaults (adapt_every, t0, t1) and checks invariants; ConfigError otherwise.
  TrainConfig resolved() const;
  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig load_train_config(const std::filesystem::path& path);

struct MetricsRow {
  int iter = 0;
  double total_loss = 0.0;
  double lf = 0.0;
  double ssim = 0.0;
  double t_conc = 0.0;
  double tv = 0.0;
  double psnr = 0.0;
  std::size_t live_voxels = 0;
  std::size_t peak_voxels = 0;
  std::size_t model_bytes = 0;
  std::size_t peak_model_bytes = 0;
  std::size_t splits = 0;
  std::size_t prunes = 0;
  double gamma = 0.0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);
void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);

struct AdaptRecord {
  int iter = 0;
  PruneReport prune;
  SplitReport split;
};

struct TrainResult {
  VoxelGrid grid;
  std::vector<MetricsRow> rows;
  std::vector<AdaptRecord> adapts;
  DatasetSplit split;
  std::size_t peak_model_bytes = 0;
};

// 10 log10(1 / MSE); identical images give 99.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Image& render, const Image& gt);

// Trains on the dataset's training split, starting from `initial` when given (otherwise a
// uniform grid). `progress`, when set, is called after every iteration.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::function<void(const MetricsRow&)>& progress = {},
                  const VoxelGrid* initial = nullptr);

// Trains and writes metrics.csv, checkpoint.json, prune.csv and split.csv into `out_dir`.
TrainResult train_to_dir(const TrainConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir);

struct ViewMetrics {
  std::size_t view = 0;
  double psnr = 0.0;
  double ssim = 0.0;  // NaN for images smaller than the SSIM window
};

struct EvalSummary {
  std::vector<ViewMetrics> views;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

EvalSummary eval(const VoxelGrid& grid, const Dataset& dataset, std::span<const std::size_t> views, int threads = 0);

}  // namespace sparsevox
