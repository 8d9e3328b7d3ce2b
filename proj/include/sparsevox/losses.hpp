#pragma once

#include "sparsevox/image.hpp"
#include "sparsevox/rasterizer.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <cmath>
#include <vector>

namespace sparsevox {

inline constexpr double kSobelPercentile = 99.0;
inline constexpr double kCharbonnierDelta = 1e-3;
inline constexpr double kDefaultLfEpsilon = 1e-3;
inline constexpr double kTvSmoothing = 1e-8;

// Stop-gradient edge map in [0, 1]: Sobel magnitude of luminance (replicate padding) divided
// by its 99th percentile and clipped. Needs at least 3x3 pixels.
Image sobel_map(const Image& rgb);

// Curriculum strength: 0 before t0, linear to gamma_max on [t0, t1), gamma_max afterwards.
double gamma_schedule(double t, double total, double t0, double t1, double gamma_max);

// Per-pixel loss weights with mean exactly normalized to one.
class WeightMap {
 public:
  WeightMap() = default;
  const Image& weights() const { return weights_; }
  double at(int x, int y) const { return weights_.at(x, y); }
  int width() const { return weights_.width(); }
  int height() const { return weights_.height(); }

  static WeightMap uniform(int width, int height);

 private:
  friend WeightMap lf_weights(const Image& sobel, double gamma, double eps);
  Image weights_;
};

// w(p) = (eps + 1 - s(p))^gamma normalized by its mean.
WeightMap lf_weights(const Image& sobel, double gamma, double eps = kDefaultLfEpsilon);

// Scalar loss with its gradient w.r.t. the image argument it was differentiated against.
struct ImageLoss {
  double value = 0.0;
  Image grad;
};

inline double charbonnier(double r) { return std::sqrt(r * r + kCharbonnierDelta * kCharbonnierDelta) - kCharbonnierDelta; }

// Weighted mean Charbonnier penalty of render - gt, summed over channels. Gradient w.r.t. render.
ImageLoss lf_loss(const Image& render, const Image& gt, const WeightMap& weights);

// 1 - mean SSIM (11x11 Gaussian window, sigma 1.5, valid positions, averaged over channels).
// Gradient w.r.t. render. Needs at least 11x11 pixels.
ImageLoss ssim_loss(const Image& render, const Image& gt);
double ssim(const Image& a, const Image& b);

// mean(T * (1 - T)) over the final transmittance image.
ImageLoss transmittance_concentration_loss(const Image& transmittance);

struct TvLoss {
  double value = 0.0;
  std::size_t pairs = 0;
  std::vector<double> grad_opacity;  // d/d opacity_param per voxel
};

// Mean smoothed |alpha_u - alpha_v| over same-level face-adjacent stored pairs.
TvLoss tv_loss(const VoxelGrid& grid);

struct LossWeights {
  double ssim = 0.2;
  double t_conc = 0.01;
  double tv = 1e-4;
};

struct LossConfig {
  LossWeights lambdas;
  double total_iters = 2000;
  double t0 = 600;
  double t1 = 1200;
  double gamma_max = 0.6;
  double lf_eps = kDefaultLfEpsilon;
  bool lf_off = false;  // ablation: gamma stays 0
};

struct LossBreakdown {
  double total = 0.0;
  double lf = 0.0;
  double ssim = 0.0;
  double t_conc = 0.0;
  double tv = 0.0;
  double gamma = 0.0;
  LossWeights lambdas;
};

struct TotalLoss {
  LossBreakdown breakdown;
  Image dl_dcolor;          // summed per-pixel gradient of the image terms
  Image dl_dtransmittance;  // per-pixel gradient of the transmittance term
};

// Assembles the objective for one rendered view. When `grads` is non-null the per-pixel
// gradients are pushed through the cached forward pass and TV gradients are added. Views smaller
// than the SSIM window skip the SSIM term.
TotalLoss total_loss(const RenderOutput& render, const Image& gt, const Image& sobel, const VoxelGrid& grid,
                     double iteration, const LossConfig& config, GradientBuffer* grads = nullptr,
                     int threads = 0);

}  // namespace sparsevox
