#include "sparsevox/checkpoint.hpp"

#include "sparsevox/errors.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace sparsevox {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
T field(const json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) throw ParseError(std::string("checkpoint: missing field '") + name + "'", 0);
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: bad field '") + name + "': " + e.what(), 0);
  }
}

Vec3 vec_field(const json& obj, const char* name) {
  const auto values = field<std::vector<double>>(obj, name);
  if (values.size() != 3) throw ParseError(std::string("checkpoint: '") + name + "' must have 3 entries", 0);
  return {values[0], values[1], values[2]};
}

}  // namespace

json grid_to_json(const VoxelGrid& grid) {
  json voxels = json::array();
  for (const auto& v : grid.voxels()) {
    voxels.push_back({
        {"level", v.key().level},
        {"key", {v.key().i, v.key().j, v.key().k}},
        {"color_params", v.color_params},
        {"opacity_param", v.opacity_param},
        {"w_max", v.w_max},
        {"usefulness", v.usefulness},
        {"inside_ema", v.inside_ema},
        {"inside_state", v.inside_state == InsideState::kIn ? "in" : "out"},
    });
  }
  return {
      {"version", kCheckpointVersion},
      {"bounds", {{"min", vec_json(grid.bounds().min)}, {"max", vec_json(grid.bounds().max)}}},
      {"l_max", grid.max_level()},
      {"voxels", std::move(voxels)},
  };
}

VoxelGrid grid_from_json(const json& doc) {
  const int version = field<int>(doc, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version), 0);
  }
  const json bounds = field<json>(doc, "bounds");
  Aabb box{vec_field(bounds, "min"), vec_field(bounds, "max")};
  VoxelGrid grid(box, field<int>(doc, "l_max"));

  const json voxels = field<json>(doc, "voxels");
  if (!voxels.is_array()) throw ParseError("checkpoint: 'voxels' must be an array", 0);
  std::vector<std::pair<VoxelKey, Voxel>> items;
  items.reserve(voxels.size());
  for (const auto& entry : voxels) {
    const auto ijk = field<std::vector<int>>(entry, "key");
    if (ijk.size() != 3) throw ParseError("checkpoint: voxel 'key' must have 3 entries", 0);
    const auto color = field<std::vector<double>>(entry, "color_params");
    if (color.size() != 3) throw ParseError("checkpoint: 'color_params' must have 3 entries", 0);
    Voxel v;
    v.color_params = {color[0], color[1], color[2]};
    v.opacity_param = field<double>(entry, "opacity_param");
    v.w_max = field<double>(entry, "w_max");
    v.usefulness = field<double>(entry, "usefulness");
    v.inside_ema = field<double>(entry, "inside_ema");
    const auto state = field<std::string>(entry, "inside_state");
    if (state != "in" && state != "out") throw ParseError("checkpoint: inside_state must be 'in' or 'out'", 0);
    v.inside_state = state == "in" ? InsideState::kIn : InsideState::kOut;
    items.emplace_back(VoxelKey{field<int>(entry, "level"), ijk[0], ijk[1], ijk[2]}, v);
  }
  grid.insert_many(items);
  return grid;
}

std::string serialize_checkpoint(const VoxelGrid& grid) { return grid_to_json(grid).dump(1) + "\n"; }

VoxelGrid deserialize_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  return grid_from_json(doc);
}

void save_checkpoint(const VoxelGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_checkpoint(grid);
  if (!out) throw DataError("write failed for " + path.string());
}

VoxelGrid load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(text);
}

}  // namespace sparsevox
