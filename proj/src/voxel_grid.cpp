#include "sparsevox/voxel_grid.hpp"

#include "sparsevox/errors.hpp"

#include <algorithm>
#include <string>

namespace sparsevox {
namespace {

std::string describe(const VoxelKey& key) {
  return "(" + std::to_string(key.level) + ": " + std::to_string(key.i) + ", " + std::to_string(key.j) +
         ", " + std::to_string(key.k) + ")";
}

}  // namespace

VoxelGrid::VoxelGrid(const Aabb& bounds, int max_level) : bounds_(bounds), max_level_(max_level) {
  const Vec3 extent = bounds.extent();
  if (!(extent.minCoeff() > 0.0)) throw ArgumentError("voxel grid: bounds must have positive extent");
  if (extent.maxCoeff() - extent.minCoeff() > 1e-9 * extent.maxCoeff()) {
    throw ArgumentError("voxel grid: bounds must be a cube");
  }
  if (max_level < 0 || max_level > 20) throw ArgumentError("voxel grid: l_max must be in [0, 20]");
  root_half_size_ = 0.5 * extent.x();
}

VoxelGrid VoxelGrid::init_uniform(const Aabb& bounds, int level, double alpha0, const Vec3& color0,
                                  int max_level) {
  VoxelGrid grid(bounds, max_level);
  if (level < 0 || level > max_level) {
    throw ArgumentError("init_uniform: level " + std::to_string(level) + " exceeds l_max " +
                        std::to_string(max_level));
  }
  if (!(alpha0 > 0.0 && alpha0 < 1.0)) throw ArgumentError("init_uniform: alpha0 must be in (0, 1)");
  Voxel params;
  params.opacity_param = logit(alpha0);
  for (int c = 0; c < 3; ++c) params.color_params[c] = logit(std::clamp(color0[c], 1e-6, 1.0 - 1e-6));

  const int n = 1 << level;
  grid.voxels_.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) grid.voxels_.push_back(grid.make_voxel({level, i, j, k}, params));
  grid.rebuild();
  return grid;
}

Vec3 VoxelGrid::cell_center(const VoxelKey& key) const {
  const double edge = 2.0 * half_size_at(key.level);
  return bounds_.min + Vec3(key.i + 0.5, key.j + 0.5, key.k + 0.5) * edge;
}

Aabb VoxelGrid::cell_box(const VoxelKey& key) const {
  const double edge = 2.0 * half_size_at(key.level);
  return {bounds_.min + Vec3(key.i, key.j, key.k) * edge,
          bounds_.min + Vec3(key.i + 1, key.j + 1, key.k + 1) * edge};
}

bool VoxelGrid::valid_key(const VoxelKey& key) const {
  if (key.level < 0 || key.level > max_level_) return false;
  const int n = 1 << key.level;
  return key.i >= 0 && key.i < n && key.j >= 0 && key.j < n && key.k >= 0 && key.k < n;
}

std::vector<VoxelKey> VoxelGrid::keys() const {
  std::vector<VoxelKey> out;
  out.reserve(voxels_.size());
  for (const auto& v : voxels_) out.push_back(v.key());
  return out;
}

std::optional<std::size_t> VoxelGrid::find(const VoxelKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t VoxelGrid::index_of(const VoxelKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw NotFoundError("voxel " + describe(key) + " not in grid");
  return it->second;
}

Voxel VoxelGrid::make_voxel(const VoxelKey& key, const Voxel& params) const {
  Voxel v = params;
  v.key_ = key;
  v.center_ = cell_center(key);
  v.half_size_ = half_size_at(key.level);
  const Aabb box = cell_box(key);
  v.box_min_ = box.min;
  v.box_max_ = box.max;
  return v;
}

std::array<VoxelKey, 8> VoxelGrid::split_voxel(const VoxelKey& key) {
  const VoxelKey one[1] = {key};
  return split_voxels(one).front();
}

std::vector<std::array<VoxelKey, 8>> VoxelGrid::split_voxels(std::span<const VoxelKey> keys) {
  std::vector<std::size_t> indices;
  indices.reserve(keys.size());
  for (const auto& key : keys) {
    const std::size_t idx = index_of(key);
    if (key.level >= max_level_) {
      throw RefusalError("split_voxel: " + describe(key) + " is already at l_max " +
                         std::to_string(max_level_));
    }
    indices.push_back(idx);
  }
  {
    auto sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ArgumentError("split_voxels: duplicate key");
    }
  }

  std::vector<std::array<VoxelKey, 8>> children(keys.size());
  std::vector<Voxel> added;
  added.reserve(keys.size() * 8);
  for (std::size_t n = 0; n < keys.size(); ++n) {
    Voxel parent = voxels_[indices[n]];
    parent.w_max = 0.0;
    parent.usefulness = 0.0;
    for (int o = 0; o < 8; ++o) {
      children[n][o] = keys[n].child(o);
      added.push_back(make_voxel(children[n][o], parent));
    }
  }
  std::vector<bool> drop(voxels_.size(), false);
  for (std::size_t idx : indices) drop[idx] = true;
  std::vector<Voxel> kept;
  kept.reserve(voxels_.size() - indices.size() + added.size());
  for (std::size_t i = 0; i < voxels_.size(); ++i)
    if (!drop[i]) kept.push_back(std::move(voxels_[i]));
  for (auto& v : added) kept.push_back(std::move(v));
  voxels_ = std::move(kept);
  rebuild();
  return children;
}

RemoveResult VoxelGrid::remove_voxels(std::span<const VoxelKey> keys) {
  RemoveResult result;
  std::vector<bool> drop(voxels_.size(), false);
  for (const auto& key : keys) {
    const auto it = index_.find(key);
    if (it == index_.end() || drop[it->second]) {
      ++result.skipped;
      continue;
    }
    drop[it->second] = true;
    ++result.removed;
  }
  if (result.removed == 0) return result;
  std::vector<Voxel> kept;
  kept.reserve(voxels_.size() - result.removed);
  for (std::size_t i = 0; i < voxels_.size(); ++i)
    if (!drop[i]) kept.push_back(std::move(voxels_[i]));
  voxels_ = std::move(kept);
  rebuild();
  return result;
}

bool VoxelGrid::has_stored_ancestor(const VoxelKey& key) const {
  VoxelKey k = key;
  while (k.level > 0) {
    k = k.parent();
    if (index_.count(k)) return true;
  }
  return false;
}

void VoxelGrid::insert(const VoxelKey& key, const Voxel& params) {
  const std::pair<VoxelKey, Voxel> one[1] = {{key, params}};
  insert_many(one);
}

void VoxelGrid::insert_many(std::span<const std::pair<VoxelKey, Voxel>> items) {
  for (const auto& [key, params] : items) {
    if (!valid_key(key)) throw RefusalError("insert: key " + describe(key) + " outside the octree");
  }
  auto backup = voxels_;
  for (const auto& [key, params] : items) voxels_.push_back(make_voxel(key, params));
  rebuild();
  bool bad = index_.size() != voxels_.size();
  if (!bad) bad = has_overlap();
  if (bad) {
    voxels_ = std::move(backup);
    rebuild();
    throw RefusalError("insert: voxels overlap or repeat a stored key");
  }
}

bool VoxelGrid::has_overlap() const {
  for (const auto& v : voxels_)
    if (has_stored_ancestor(v.key())) return true;
  return false;
}

void VoxelGrid::rebuild() {
  std::sort(voxels_.begin(), voxels_.end(),
            [](const Voxel& a, const Voxel& b) { return a.key() < b.key(); });
  index_.clear();
  index_.reserve(voxels_.size());
  for (std::size_t i = 0; i < voxels_.size(); ++i) index_.emplace(voxels_[i].key(), i);

  nodes_.clear();
  node_index_.clear();
  if (voxels_.empty()) return;

  auto make_node = [this](const VoxelKey& key) {
    OctreeNode node;
    const Aabb box = cell_box(key);
    node.box_min = box.min;
    node.box_max = box.max;
    nodes_.push_back(node);
    const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
    node_index_.emplace(key, id);
    return id;
  };
  make_node({0, 0, 0, 0});

  for (std::size_t vi = 0; vi < voxels_.size(); ++vi) {
    const VoxelKey& key = voxels_[vi].key();
    std::int32_t node = 0;
    for (int level = 1; level <= key.level; ++level) {
      const int shift = key.level - level;
      const VoxelKey at{level, key.i >> shift, key.j >> shift, key.k >> shift};
      const int octant = (at.i & 1) | ((at.j & 1) << 1) | ((at.k & 1) << 2);
      std::int32_t child = nodes_[node].children[octant];
      if (child < 0) {
        child = make_node(at);
        nodes_[node].children[octant] = child;
      }
      node = child;
    }
    nodes_[node].voxel = static_cast<std::int32_t>(vi);
  }
}

}  // namespace sparsevox
