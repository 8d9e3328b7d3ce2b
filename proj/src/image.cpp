#include "sparsevox/image.hpp"

#include "sparsevox/errors.hpp"

#include <string>

namespace sparsevox {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1) throw ArgumentError("image: invalid dimensions");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image to_luminance(const Image& rgb) {
  if (rgb.channels() != 3) throw ArgumentError("to_luminance: expected an RGB image");
  Image lum(rgb.width(), rgb.height(), 1);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const double* p = rgb.pixel(x, y);
      lum.at(x, y) = luminance(p[0], p[1], p[2]);
    }
  }
  return lum;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ArgumentError(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                        std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                        std::to_string(b.channels()) + ")");
  }
}

}  // namespace sparsevox
