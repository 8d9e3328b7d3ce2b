#pragma once

#include "sparsevox/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace sparsevox {

// Binary P6 with maxval 255 only. Channel values are byte / 255.0.
Image decode_ppm(std::string_view bytes);
std::vector<std::uint8_t> encode_ppm(const Image& rgb);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& rgb, const std::filesystem::path& path);

}  // namespace sparsevox
