#include "sparsevox/ppm.hpp"

#include "sparsevox/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace sparsevox {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* field, std::size_t* token_start = nullptr) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    if (token_start) *token_start = start;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw ParseError(std::string("ppm: ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("ppm: expected ") + field, start);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2) throw ParseError("ppm: truncated magic", 0);
  if (bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError("ppm: unsupported magic '" + std::string(bytes.substr(0, 2)) + "' (only P6)", 0);
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  std::size_t width_pos = 0, height_pos = 0, maxval_pos = 0;
  const long width = reader.read_uint("width", &width_pos);
  const long height = reader.read_uint("height", &height_pos);
  const long maxval = reader.read_uint("maxval", &maxval_pos);
  if (width < 1) throw ParseError("ppm: zero image width", width_pos);
  if (height < 1) throw ParseError("ppm: zero image height", height_pos);
  if (maxval != 255) throw ParseError("ppm: maxval must be 255", maxval_pos);
  // Exactly one whitespace byte separates the header from the raster.
  if (reader.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
    throw ParseError("ppm: missing whitespace after maxval", reader.pos());
  }
  reader.advance(1);
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - reader.pos() < need) {
    throw ParseError("ppm: raster truncated, expected " + std::to_string(need) + " bytes", bytes.size());
  }
  Image img(static_cast<int>(width), static_cast<int>(height), 3);
  auto& data = img.data();
  for (std::size_t i = 0; i < need; ++i) {
    data[i] = static_cast<unsigned char>(bytes[reader.pos() + i]) / 255.0;
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& rgb) {
  if (rgb.channels() != 3) throw ArgumentError("write_ppm: expected an RGB image");
  const std::string header =
      "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + rgb.size());
  for (double v : rgb.data()) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
  }
  return out;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_ppm(const Image& rgb, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(rgb);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace sparsevox
