#include "sparsevox/trainer.hpp"

#include "sparsevox/checkpoint.hpp"
#include "sparsevox/errors.hpp"
#include "sparsevox/footprint.hpp"
#include "sparsevox/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace sparsevox {

double psnr(const Image& render, const Image& gt) {
  require_same_shape(render, gt, "psnr");
  const auto& a = render.data();
  const auto& b = gt.data();
  if (a.empty()) throw ArgumentError("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

void write_metrics_header(std::ostream& out) {
  out << "iter,total_loss,lf,ssim,t_conc,tv,psnr,live_voxels,peak_voxels,model_bytes,peak_model_bytes,"
         "splits,prunes,gamma\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  const auto old = out.precision(17);
  out << r.iter << ',' << r.total_loss << ',' << r.lf << ',' << r.ssim << ',' << r.t_conc << ',' << r.tv << ','
      << r.psnr << ',' << r.live_voxels << ',' << r.peak_voxels << ',' << r.model_bytes << ','
      << r.peak_model_bytes << ',' << r.splits << ',' << r.prunes << ',' << r.gamma << '\n';
  out.precision(old);
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_metrics_header(out);
  for (const auto& r : rows) write_metrics_row(out, r);
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

std::vector<Camera> pick_cameras(const Dataset& ds, std::span<const std::size_t> views) {
  std::vector<Camera> out;
  out.reserve(views.size());
  for (auto v : views) out.push_back(ds.cameras[v]);
  return out;
}

void reset_window(VoxelGrid& grid, WindowStats& window) {
  for (std::size_t i = 0; i < grid.size(); ++i) grid.mutable_voxel(i).w_max = 0.0;
  window.reset(grid.size());
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::function<void(const MetricsRow&)>& progress, const VoxelGrid* initial) {
  const TrainConfig cfg = config.resolved();
  if (dataset.size() == 0) throw ConfigError("train: dataset is empty");
  dataset.validate();

  TrainResult result;
  result.split = split_views(dataset.size(), cfg.holdout_every);
  const std::vector<std::size_t>& train_views = result.split.train;
  const std::vector<Camera> train_cameras = pick_cameras(dataset, train_views);

  std::vector<Image> sobel(dataset.size());
  for (auto v : train_views) sobel[v] = sobel_map(dataset.images[v]);

  VoxelGrid grid = initial ? *initial
                           : VoxelGrid::init_uniform(cfg.bounds, cfg.init_level, cfg.init_alpha,
                                                     Vec3::Constant(cfg.init_color), cfg.max_level);
  SubdivideConfig subdivide = cfg.subdivide;
  if (subdivide.hard_cap == 0) subdivide.hard_cap = 8 * grid.size();
  PruneConfig prune = cfg.prune;
  if (cfg.ablate.depth_bins_off) prune.num_bins = 1;

  OptimizerState optimizer(grid, cfg.optimizer);
  LossConfig loss_config;
  loss_config.lambdas = cfg.lambdas;
  loss_config.total_iters = cfg.total_iters;
  loss_config.t0 = cfg.t0;
  loss_config.t1 = cfg.t1;
  loss_config.gamma_max = cfg.gamma_max;
  loss_config.lf_eps = cfg.lf_eps;
  loss_config.lf_off = cfg.ablate.lf_off;

  WindowStats window;
  reset_window(grid, window);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = train_views;
  std::size_t cursor = order.size();

  std::size_t peak_voxels = grid.size();
  std::size_t peak_bytes = grid.model_bytes();
  GradientBuffer grads;

  for (int it = 0; it < cfg.total_iters; ++it) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t view = order[cursor++];
    const Image& gt = dataset.images[view];

    RenderOptions options;
    options.collect_stats = true;
    options.keep_cache = true;
    options.early_termination = cfg.early_termination;
    options.target = &gt;
    options.threads = cfg.threads;
    const RenderOutput frame = render_image(grid, dataset.cameras[view], options);
    accumulate_frame_stats(grid, frame.stats, window);

    grads.assign(grid.size(), VoxelGradient{0, 0, 0, 0});
    const TotalLoss loss = total_loss(frame, gt, sobel[view], grid, it, loss_config, &grads, cfg.threads);
    if (!std::isfinite(loss.breakdown.total)) {
      throw ConsistencyError("train: non-finite loss at iteration " + std::to_string(it));
    }
    optimizer.step(grid, grads);

    MetricsRow row;
    row.iter = it;
    row.total_loss = loss.breakdown.total;
    row.lf = loss.breakdown.lf;
    row.ssim = loss.breakdown.ssim;
    row.t_conc = loss.breakdown.t_conc;
    row.tv = loss.breakdown.tv;
    row.gamma = loss.breakdown.gamma;
    row.psnr = psnr(frame.image, gt);

    if ((it + 1) % cfg.adapt_every == 0 && it + 1 < cfg.total_iters) {
      const double progress_frac = static_cast<double>(it + 1) / cfg.total_iters;
      AdaptRecord record;
      record.iter = it;
      update_usefulness_from_window(grid, window, subdivide.usefulness_ema);
      update_inside_states(grid, prune);
      if (!cfg.ablate.prune_off) {
        record.prune = prune_step(grid, compute_view_info(grid, train_cameras), prune, progress_frac);
      }
      if (!cfg.ablate.subdivide_off) {
        record.split = select_and_split(grid, compute_view_info(grid, train_cameras), subdivide);
      }
      optimizer.refresh_after_topology(grid, &record.split, &record.prune);
      reset_window(grid, window);
      row.prunes = record.prune.total_removed();
      row.splits = record.split.split.size();
      result.adapts.push_back(std::move(record));
    }

    peak_voxels = std::max(peak_voxels, grid.size());
    peak_bytes = std::max(peak_bytes, grid.model_bytes());
    row.live_voxels = grid.size();
    row.model_bytes = grid.model_bytes();
    row.peak_voxels = peak_voxels;
    row.peak_model_bytes = peak_bytes;
    result.rows.push_back(row);
    if (progress) progress(row);
  }

  result.peak_model_bytes = peak_bytes;
  result.grid = std::move(grid);
  return result;
}

TrainResult train_to_dir(const TrainConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  TrainResult result = train(config, dataset);
  write_metrics_csv(result.rows, out_dir / "metrics.csv");
  save_checkpoint(result.grid, out_dir / "checkpoint.json");
  write_cameras_json(dataset.cameras, out_dir / "cameras.json");

  std::ofstream prune_csv(out_dir / "prune.csv");
  std::ofstream split_csv(out_dir / "split.csv");
  if (!prune_csv || !split_csv) throw DataError("cannot write adaptation logs in " + out_dir.string());
  write_prune_csv_header(prune_csv);
  write_split_csv_header(split_csv);
  for (const auto& a : result.adapts) {
    append_prune_csv(prune_csv, a.iter, a.prune);
    append_split_csv(split_csv, a.iter, a.split);
  }
  return result;
}

EvalSummary eval(const VoxelGrid& grid, const Dataset& dataset, std::span<const std::size_t> views, int threads) {
  EvalSummary summary;
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  std::size_t ssim_n = 0;
  for (auto v : views) {
    if (v >= dataset.size()) throw ArgumentError("eval: view " + std::to_string(v) + " out of range");
    RenderOptions options;
    options.threads = threads;
    const RenderOutput out = render_image(grid, dataset.cameras[v], options);
    ViewMetrics m;
    m.view = v;
    m.psnr = psnr(out.image, dataset.images[v]);
    m.ssim = std::numeric_limits<double>::quiet_NaN();
    if (out.image.width() >= 11 && out.image.height() >= 11) {
      m.ssim = ssim(out.image, dataset.images[v]);
      ssim_sum += m.ssim;
      ++ssim_n;
    }
    psnr_sum += m.psnr;
    summary.views.push_back(m);
  }
  if (!summary.views.empty()) summary.mean_psnr = psnr_sum / static_cast<double>(summary.views.size());
  summary.mean_ssim = ssim_n ? ssim_sum / static_cast<double>(ssim_n) : std::numeric_limits<double>::quiet_NaN();
  return summary;
}

}  // namespace sparsevox
