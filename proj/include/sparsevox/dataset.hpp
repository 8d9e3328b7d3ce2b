#pragma once

#include "sparsevox/geometry.hpp"
#include "sparsevox/image.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

#include "json.hpp"

namespace sparsevox {

struct Dataset {
  std::vector<Camera> cameras;
  std::vector<Image> images;

  std::size_t size() const { return cameras.size(); }
  // DataError unless every image matches its camera's dimensions.
  void validate() const;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Every `holdout_every`-th view (starting at 0) is held out. With holdout_every <= 0 or a
// single view, both splits contain every view.
DatasetSplit split_views(std::size_t count, int holdout_every);

nlohmann::json cameras_to_json(const std::vector<Camera>& cameras);
std::vector<Camera> cameras_from_json(const nlohmann::json& doc);

std::vector<Camera> read_cameras_json(const std::filesystem::path& path);
void write_cameras_json(const std::vector<Camera>& cameras, const std::filesystem::path& path);

std::filesystem::path view_image_path(const std::filesystem::path& dir, std::size_t view);

// Layout: <dir>/cameras.json and <dir>/images/view_%04d.ppm.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace sparsevox
