#include "sparsevox/errors.hpp"
#include "sparsevox/image.hpp"
#include "sparsevox/ppm.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace sparsevox;

namespace {

std::string bytes_of(const std::vector<std::uint8_t>& v) { return std::string(v.begin(), v.end()); }

std::size_t parse_error_offset(const std::string& text) {
  try {
    decode_ppm(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no ParseError for input";
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Ppm, SingleWhitePixel) {
  const std::string text = std::string("P6\n1 1\n255\n") + "\xff\xff\xff";
  const Image img = decode_ppm(text);
  ASSERT_EQ(img.width(), 1);
  ASSERT_EQ(img.height(), 1);
  ASSERT_EQ(img.channels(), 3);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(0, 0, c), 1.0);
  EXPECT_EQ(bytes_of(encode_ppm(img)), text);
}

TEST(Ppm, ValuesAreBytesOver255) {
  std::string text = "P6 2 1 255\n";
  for (int b : {0, 1, 127, 128, 254, 255}) text.push_back(static_cast<char>(b));
  const Image img = decode_ppm(text);
  const int expected[] = {0, 1, 127, 128, 254, 255};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(img.data()[i], expected[i] / 255.0);
}

TEST(Ppm, RandomByteImageRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + trial % 7, h = 1 + trial % 5;
    std::string text = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (int i = 0; i < w * h * 3; ++i) text.push_back(static_cast<char>(byte(rng)));
    EXPECT_EQ(bytes_of(encode_ppm(decode_ppm(text))), text);
  }
}

TEST(Ppm, EncodeRoundsToNearestAndClamps) {
  Image img(2, 1, 3);
  img.data() = {0.5 / 255.0 + 1e-9, 254.4 / 255.0, -0.3, 1.7, 0.0, 1.0};
  const auto bytes = encode_ppm(img);
  const std::string header = "P6\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  const std::uint8_t expected[] = {1, 254, 0, 255, 0, 255};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(bytes[header.size() + i], expected[i]);
}

TEST(Ppm, CommentsInHeaderAreSkipped) {
  const std::string text = std::string("P6\n# a comment\n1 # inline\n1\n255\n") + "\x10\x20\x30";
  const Image img = decode_ppm(text);
  EXPECT_EQ(img.at(0, 0, 2), 0x30 / 255.0);
}

TEST(Ppm, MalformedHeadersReportByteOffsets) {
  EXPECT_EQ(parse_error_offset("P3\n1 1\n255\n0 0 0"), 0u);
  EXPECT_EQ(parse_error_offset(""), 0u);
  EXPECT_EQ(parse_error_offset("P6\nx 1\n255\n"), 3u);
  EXPECT_EQ(parse_error_offset("P6\n1 1\n65535\n"), 7u);
  EXPECT_EQ(parse_error_offset("P6\n0 1\n255\n"), 3u);
  EXPECT_EQ(parse_error_offset("P6\n1 0\n255\n"), 5u);
  EXPECT_EQ(parse_error_offset("P6\n2 2\n255\nabc"), 14u);
  EXPECT_THROW(decode_ppm("P6\n1 1\n255"), ParseError);
}

TEST(Ppm, ParseErrorMessageNamesOffset) {
  try {
    decode_ppm("P3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("at byte 0"), std::string::npos);
  }
}

TEST(Ppm, FileRoundTrip) {
  std::mt19937_64 rng(2);
  Image img(5, 3, 3);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& v : img.data()) v = byte(rng) / 255.0;
  const auto path = std::filesystem::temp_directory_path() / "sparsevox_ppm_roundtrip.ppm";
  write_ppm(img, path);
  const Image back = read_ppm(path);
  EXPECT_EQ(back, img);
  std::filesystem::remove(path);
  EXPECT_THROW(read_ppm(path), DataError);
}

TEST(Ppm, FileParseErrorKeepsOffset) {
  const auto path = std::filesystem::temp_directory_path() / "sparsevox_ppm_bad.ppm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n1 1\n255\n\x01";
  }
  try {
    read_ppm(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  std::filesystem::remove(path);
}

TEST(ImageOps, LuminanceAndShapeChecks) {
  Image rgb(1, 1, 3);
  rgb.data() = {1.0, 0.5, 0.25};
  const Image lum = to_luminance(rgb);
  EXPECT_DOUBLE_EQ(lum.at(0, 0), 0.299 + 0.587 * 0.5 + 0.114 * 0.25);
  EXPECT_THROW(require_same_shape(rgb, lum, "test"), ArgumentError);
  EXPECT_NO_THROW(require_same_shape(rgb, rgb, "test"));
}
