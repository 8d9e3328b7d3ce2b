#include "sparsevox/errors.hpp"
#include "sparsevox/losses.hpp"

#include <array>
#include <cmath>

namespace sparsevox {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Plane of doubles for per-channel filtering.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable valid-mode correlation with the Gaussian window.
Plane filter_valid(const Plane& in, const std::array<double, kWindow>& g) {
  Plane tmp(in.w - kWindow + 1, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int u = 0; u < kWindow; ++u) s += g[u] * in(x + u, y);
      tmp(x, y) = s;
    }
  Plane out(tmp.w, in.h - kWindow + 1);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int u = 0; u < kWindow; ++u) s += g[u] * tmp(x, y + u);
      out(x, y) = s;
    }
  return out;
}

// Adjoint of filter_valid: scatters window-position values back onto the full plane.
Plane filter_valid_adjoint(const Plane& grad, int w, int h, const std::array<double, kWindow>& g) {
  Plane tmp(grad.w, h);
  for (int y = 0; y < grad.h; ++y)
    for (int x = 0; x < grad.w; ++x)
      for (int u = 0; u < kWindow; ++u) tmp(x, y + u) += g[u] * grad(x, y);
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < grad.w; ++x)
      for (int u = 0; u < kWindow; ++u) out(x + u, y) += g[u] * tmp(x, y);
  return out;
}

Plane channel(const Image& img, int c) {
  Plane p(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p(x, y) = img.at(x, y, c);
  return p;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.w, a.h);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

ImageLoss ssim_impl(const Image& x_img, const Image& y_img, bool with_grad) {
  require_same_shape(x_img, y_img, "ssim");
  if (x_img.width() < kWindow || x_img.height() < kWindow) {
    throw ArgumentError("ssim: image smaller than 11x11");
  }
  const auto g = gaussian_taps();
  const int w = x_img.width();
  const int h = x_img.height();
  const int channels = x_img.channels();
  const double positions = static_cast<double>(w - kWindow + 1) * (h - kWindow + 1) * channels;

  ImageLoss out;
  if (with_grad) out.grad = Image(w, h, channels);
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    const Plane x = channel(x_img, c);
    const Plane y = channel(y_img, c);
    const Plane mx = filter_valid(x, g);
    const Plane my = filter_valid(y, g);
    const Plane exx = filter_valid(product(x, x), g);
    const Plane eyy = filter_valid(product(y, y), g);
    const Plane exy = filter_valid(product(x, y), g);

    Plane d_mu(mx.w, mx.h), d_exx(mx.w, mx.h), d_exy(mx.w, mx.h);
    const double scale = -1.0 / positions;  // d(1 - mean S) / dS
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
      const double ux = mx.v[i], uy = my.v[i];
      const double sxx = exx.v[i] - ux * ux;
      const double syy = eyy.v[i] - uy * uy;
      const double sxy = exy.v[i] - ux * uy;
      const double a1 = 2.0 * ux * uy + kC1;
      const double a2 = 2.0 * sxy + kC2;
      const double b1 = ux * ux + uy * uy + kC1;
      const double b2 = sxx + syy + kC2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (!with_grad) continue;
      const double ds_dsxx = -s / b2;
      const double ds_dsxy = 2.0 * a1 / (b1 * b2);
      const double ds_dux_direct = 2.0 * uy * a2 / (b1 * b2) - 2.0 * ux * s / b1;
      d_mu.v[i] = scale * (ds_dux_direct + ds_dsxx * (-2.0 * ux) + ds_dsxy * (-uy));
      d_exx.v[i] = scale * ds_dsxx;
      d_exy.v[i] = scale * ds_dsxy;
    }
    if (!with_grad) continue;
    const Plane ga = filter_valid_adjoint(d_mu, w, h, g);
    const Plane gb = filter_valid_adjoint(d_exx, w, h, g);
    const Plane gc = filter_valid_adjoint(d_exy, w, h, g);
    for (int py = 0; py < h; ++py)
      for (int px = 0; px < w; ++px)
        out.grad.at(px, py, c) = ga(px, py) + 2.0 * x(px, py) * gb(px, py) + y(px, py) * gc(px, py);
  }
  out.value = 1.0 - total / positions;
  return out;
}

}  // namespace

ImageLoss ssim_loss(const Image& render, const Image& gt) { return ssim_impl(render, gt, true); }

double ssim(const Image& a, const Image& b) { return 1.0 - ssim_impl(a, b, false).value; }

}  // namespace sparsevox
