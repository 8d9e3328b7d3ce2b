#pragma once

#include "sparsevox/voxel_grid.hpp"

#include <filesystem>
#include <string>

#include "json.hpp"

namespace sparsevox {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json grid_to_json(const VoxelGrid& grid);
// Throws ParseError on schema violations and RefusalError on overlapping voxels.
VoxelGrid grid_from_json(const nlohmann::json& doc);

std::string serialize_checkpoint(const VoxelGrid& grid);
VoxelGrid deserialize_checkpoint(const std::string& text);

void save_checkpoint(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid load_checkpoint(const std::filesystem::path& path);

}  // namespace sparsevox
