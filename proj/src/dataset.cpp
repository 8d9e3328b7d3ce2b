#include "sparsevox/dataset.hpp"

#include "sparsevox/errors.hpp"
#include "sparsevox/ppm.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace sparsevox {

using nlohmann::json;

void Dataset::validate() const {
  if (cameras.empty()) throw ConfigError("dataset is empty");
  if (cameras.size() != images.size()) throw DataError("dataset: camera and image counts differ");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (images[i].width() != cameras[i].width || images[i].height() != cameras[i].height ||
        images[i].channels() != 3) {
      throw DataError("dataset: view " + std::to_string(i) + " image is " + std::to_string(images[i].width()) + "x" +
                      std::to_string(images[i].height()) + " but its camera is " + std::to_string(cameras[i].width) +
                      "x" + std::to_string(cameras[i].height));
    }
  }
}

DatasetSplit split_views(std::size_t count, int holdout_every) {
  DatasetSplit split;
  for (std::size_t i = 0; i < count; ++i) {
    if (holdout_every > 0 && count > 1 && i % static_cast<std::size_t>(holdout_every) == 0) {
      split.test.push_back(i);
    } else {
      split.train.push_back(i);
    }
  }
  if (split.train.empty() || split.test.empty()) {
    split.train.clear();
    split.test.clear();
    for (std::size_t i = 0; i < count; ++i) {
      split.train.push_back(i);
      split.test.push_back(i);
    }
  }
  return split;
}

json cameras_to_json(const std::vector<Camera>& cameras) {
  json out = json::array();
  for (const auto& cam : cameras) {
    std::vector<double> pose(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose[r * 4 + c] = cam.world_to_camera(r, c);
    out.push_back({{"width", cam.width},
                   {"height", cam.height},
                   {"fx", cam.fx},
                   {"fy", cam.fy},
                   {"cx", cam.cx},
                   {"cy", cam.cy},
                   {"world_to_camera", pose}});
  }
  return out;
}

std::vector<Camera> cameras_from_json(const json& doc) {
  if (!doc.is_array()) throw ParseError("cameras.json: expected an array", 0);
  std::vector<Camera> cameras;
  for (const auto& entry : doc) {
    Camera cam;
    try {
      cam.width = entry.at("width").get<int>();
      cam.height = entry.at("height").get<int>();
      cam.fx = entry.at("fx").get<double>();
      cam.fy = entry.at("fy").get<double>();
      cam.cx = entry.at("cx").get<double>();
      cam.cy = entry.at("cy").get<double>();
      const auto pose = entry.at("world_to_camera").get<std::vector<double>>();
      if (pose.size() != 16) throw ParseError("cameras.json: world_to_camera needs 16 numbers", 0);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) cam.world_to_camera(r, c) = pose[r * 4 + c];
    } catch (const json::exception& e) {
      throw ParseError(std::string("cameras.json: camera ") + std::to_string(cameras.size()) + ": " + e.what(), 0);
    }
    try {
      cam.validate();
    } catch (const ArgumentError& e) {
      throw DataError(std::string("cameras.json: camera ") + std::to_string(cameras.size()) + ": " + e.what());
    }
    cameras.push_back(cam);
  }
  return cameras;
}

std::vector<Camera> read_cameras_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  return cameras_from_json(doc);
}

void write_cameras_json(const std::vector<Camera>& cameras, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << cameras_to_json(cameras).dump(1) << "\n";
}

std::filesystem::path view_image_path(const std::filesystem::path& dir, std::size_t view) {
  char name[32];
  std::snprintf(name, sizeof(name), "view_%04zu.ppm", view);
  return dir / "images" / name;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.cameras = read_cameras_json(dir / "cameras.json");
  for (std::size_t i = 0; i < ds.cameras.size(); ++i) ds.images.push_back(read_ppm(view_image_path(dir, i)));
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  write_cameras_json(dataset.cameras, dir / "cameras.json");
  for (std::size_t i = 0; i < dataset.images.size(); ++i) write_ppm(dataset.images[i], view_image_path(dir, i));
}

}  // namespace sparsevox
