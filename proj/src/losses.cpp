#include "sparsevox/losses.hpp"

#include "sparsevox/errors.hpp"
#include "sparsevox/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sparsevox {

Image sobel_map(const Image& rgb) {
  if (rgb.channels() != 3) throw ArgumentError("sobel_map: expected an RGB image");
  if (rgb.width() < 3 || rgb.height() < 3) throw ArgumentError("sobel_map: image smaller than 3x3");
  const Image lum = to_luminance(rgb);
  const int w = rgb.width();
  const int h = rgb.height();
  auto at = [&](int x, int y) { return lum.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };

  Image mag(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
      mag.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  double scale = percentile(mag.data(), kSobelPercentile);
  // Edges on fewer than 1% of pixels leave the percentile at zero; fall back to the maximum.
  if (!(scale > 0.0)) scale = *std::max_element(mag.data().begin(), mag.data().end());
  if (!(scale > 0.0)) return Image(w, h, 1, 0.0);
  for (double& v : mag.data()) v = std::min(v / scale, 1.0);
  return mag;
}

double gamma_schedule(double t, double total, double t0, double t1, double gamma_max) {
  if (!(t1 > t0)) throw ConfigError("gamma_schedule: t1 must exceed t0");
  if (t0 < 0.0 || t1 > total) throw ConfigError("gamma_schedule: need 0 <= t0 < t1 <= T");
  if (t < t0) return 0.0;
  if (t < t1) return gamma_max * (t - t0) / (t1 - t0);
  return gamma_max;
}

WeightMap WeightMap::uniform(int width, int height) {
  WeightMap map;
  map.weights_ = Image(width, height, 1, 1.0);
  return map;
}

WeightMap lf_weights(const Image& sobel, double gamma, double eps) {
  if (sobel.channels() != 1) throw ArgumentError("lf_weights: expected a single-channel Sobel map");
  if (gamma < 0.0) throw ArgumentError("lf_weights: gamma must be non-negative");
  if (!(eps > 0.0)) throw ArgumentError("lf_weights: eps must be positive");
  WeightMap map;
  map.weights_ = Image(sobel.width(), sobel.height(), 1);
  auto& w = map.weights_.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(eps + 1.0 - sobel.data()[i], gamma);
    sum += w[i];
  }
  const double mean = sum / static_cast<double>(w.size());
  for (double& v : w) v /= mean;
  return map;
}

ImageLoss lf_loss(const Image& render, const Image& gt, const WeightMap& weights) {
  require_same_shape(render, gt, "lf_loss");
  if (weights.width() != render.width() || weights.height() != render.height()) {
    throw ArgumentError("lf_loss: weight map shape mismatch");
  }
  const int channels = render.channels();
  const double inv_pixels = 1.0 / static_cast<double>(render.pixel_count());
  ImageLoss out;
  out.grad = Image(render.width(), render.height(), channels);
  double sum = 0.0;
  for (int y = 0; y < render.height(); ++y) {
    for (int x = 0; x < render.width(); ++x) {
      const double w = weights.at(x, y);
      double rho = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double r = render.at(x, y, c) - gt.at(x, y, c);
        const double root = std::sqrt(r * r + kCharbonnierDelta * kCharbonnierDelta);
        rho += root - kCharbonnierDelta;
        out.grad.at(x, y, c) = w * inv_pixels * r / root;
      }
      sum += w * rho;
    }
  }
  out.value = sum * inv_pixels;
  return out;
}

ImageLoss transmittance_concentration_loss(const Image& transmittance) {
  ImageLoss out;
  out.grad = Image(transmittance.width(), transmittance.height(), transmittance.channels());
  const double inv = 1.0 / static_cast<double>(transmittance.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < transmittance.size(); ++i) {
    const double t = transmittance.data()[i];
    sum += t * (1.0 - t);
    out.grad.data()[i] = (1.0 - 2.0 * t) * inv;
  }
  out.value = sum * inv;
  return out;
}

TvLoss tv_loss(const VoxelGrid& grid) {
  TvLoss out;
  out.grad_opacity.assign(grid.size(), 0.0);
  std::vector<double> alpha(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) alpha[i] = grid.voxel(i).alpha();

  struct Pair {
    std::size_t u, v;
  };
  std::vector<Pair> pairs;
  for (std::size_t u = 0; u < grid.size(); ++u) {
    const VoxelKey& key = grid.voxel(u).key();
    const std::array<VoxelKey, 3> forward = {VoxelKey{key.level, key.i + 1, key.j, key.k},
                                             VoxelKey{key.level, key.i, key.j + 1, key.k},
                                             VoxelKey{key.level, key.i, key.j, key.k + 1}};
    for (const auto& n : forward)
      if (auto v = grid.find(n)) pairs.push_back({u, *v});
  }
  out.pairs = pairs.size();
  if (pairs.empty()) return out;

  const double inv = 1.0 / static_cast<double>(pairs.size());
  double sum = 0.0;
  for (const auto& [u, v] : pairs) {
    const double d = alpha[u] - alpha[v];
    const double root = std::sqrt(d * d + kTvSmoothing);
    sum += root;
    const double g = inv * d / root;
    out.grad_opacity[u] += g * alpha[u] * (1.0 - alpha[u]);
    out.grad_opacity[v] -= g * alpha[v] * (1.0 - alpha[v]);
  }
  out.value = sum * inv;
  return out;
}

TotalLoss total_loss(const RenderOutput& render, const Image& gt, const Image& sobel, const VoxelGrid& grid,
                     double iteration, const LossConfig& config, GradientBuffer* grads, int threads) {
  require_same_shape(render.image, gt, "total_loss");
  TotalLoss out;
  LossBreakdown& b = out.breakdown;
  b.lambdas = config.lambdas;
  b.gamma = config.lf_off ? 0.0
                          : gamma_schedule(iteration, config.total_iters, config.t0, config.t1, config.gamma_max);

  const WeightMap weights =
      b.gamma > 0.0 ? lf_weights(sobel, b.gamma, config.lf_eps) : WeightMap::uniform(gt.width(), gt.height());
  ImageLoss lf = lf_loss(render.image, gt, weights);
  b.lf = lf.value;
  out.dl_dcolor = std::move(lf.grad);

  // SSIM needs a full 11x11 window; smaller views train without the term.
  if (config.lambdas.ssim != 0.0 && gt.width() >= 11 && gt.height() >= 11) {
    const ImageLoss s = ssim_loss(render.image, gt);
    b.ssim = s.value;
    for (std::size_t i = 0; i < out.dl_dcolor.size(); ++i) out.dl_dcolor.data()[i] += config.lambdas.ssim * s.grad.data()[i];
  }

  ImageLoss tc = transmittance_concentration_loss(render.transmittance);
  b.t_conc = tc.value;
  for (double& g : tc.grad.data()) g *= config.lambdas.t_conc;
  out.dl_dtransmittance = std::move(tc.grad);

  const TvLoss tv = tv_loss(grid);
  b.tv = tv.value;
  b.total = b.lf + config.lambdas.ssim * b.ssim + config.lambdas.t_conc * b.t_conc + config.lambdas.tv * b.tv;

  if (grads) {
    backward_image(grid, render, out.dl_dcolor, out.dl_dtransmittance, *grads, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) (*grads)[i][0] += config.lambdas.tv * tv.grad_opacity[i];
  }
  return out;
}

}  // namespace sparsevox
