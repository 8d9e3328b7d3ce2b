#pragma once

#include <cstddef>
#include <vector>

namespace sparsevox {

// Row-major, interleaved image of doubles. Pixel (x, y) channel c lives at ((y * width) + x) * channels + c.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  double* pixel(int x, int y) { return data_.data() + index(x, y, 0); }
  const double* pixel(int x, int y) const { return data_.data() + index(x, y, 0); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Single-channel luminance of an RGB image.
Image to_luminance(const Image& rgb);

// Throws ArgumentError unless the two images have identical shape. `what` prefixes the message.
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace sparsevox
