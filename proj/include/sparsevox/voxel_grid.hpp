#pragma once

#include "sparsevox/geometry.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sparsevox {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Canonical identity of an octree cell: level plus integer cell coordinate at that level.
struct VoxelKey {
  int level = 0;
  int i = 0;
  int j = 0;
  int k = 0;

  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;

  VoxelKey parent() const { return {level - 1, i >> 1, j >> 1, k >> 1}; }
  // Octant bit 0 selects +x, bit 1 +y, bit 2 +z.
  VoxelKey child(int octant) const {
    return {level + 1, 2 * i + (octant & 1), 2 * j + ((octant >> 1) & 1), 2 * k + ((octant >> 2) & 1)};
  }
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& key) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(key.level);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(key.i);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(key.j);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(key.k);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

enum class InsideState : std::uint8_t { kOut = 0, kIn = 1 };

class VoxelGrid;

class Voxel {
 public:
  // Trainable parameters: color = sigmoid(color_params), alpha = sigmoid(opacity_param).
  std::array<double, 3> color_params{0.0, 0.0, 0.0};
  double opacity_param = 0.0;

  // Adaptation statistics.
  double w_max = 0.0;
  double usefulness = 0.0;
  double inside_ema = 1.0;
  InsideState inside_state = InsideState::kIn;

  const VoxelKey& key() const { return key_; }
  int level() const { return key_.level; }
  const Vec3& center() const { return center_; }
  double half_size() const { return half_size_; }
  const Vec3& box_min() const { return box_min_; }
  const Vec3& box_max() const { return box_max_; }

  double alpha() const { return sigmoid(opacity_param); }
  Vec3 color() const {
    return {sigmoid(color_params[0]), sigmoid(color_params[1]), sigmoid(color_params[2])};
  }

 private:
  friend class VoxelGrid;
  VoxelKey key_;
  Vec3 center_ = Vec3::Zero();
  double half_size_ = 0.0;
  Vec3 box_min_ = Vec3::Zero();
  Vec3 box_max_ = Vec3::Zero();
};

// Internal octree node used for front-to-back traversal. Leaves reference a stored voxel.
struct OctreeNode {
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  std::array<std::int32_t, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
  std::int32_t voxel = -1;
};

struct RemoveResult {
  std::size_t removed = 0;
  std::size_t skipped = 0;
};

inline constexpr int kDefaultMaxLevel = 10;
// Trainable scalars per voxel (3 color + 1 opacity) at 4 bytes, plus two optimizer moments.
inline constexpr std::size_t kParamBytesPerVoxel = 16;
inline constexpr std::size_t kBytesPerVoxel = 3 * kParamBytesPerVoxel;

// Sparse octree of non-overlapping cube voxels inside a cubic scene bound.
//
// Voxels are kept sorted by key, so dense indices are canonical and change only when the
// topology changes. Topology mutations must not run concurrently with reads.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const Aabb& bounds, int max_level = kDefaultMaxLevel);

  // All 8^level cells at `level`, with alpha0 and color0 (clamped into (0, 1) before the logit).
  static VoxelGrid init_uniform(const Aabb& bounds, int level, double alpha0, const Vec3& color0,
                                int max_level = kDefaultMaxLevel);

  const Aabb& bounds() const { return bounds_; }
  int max_level() const { return max_level_; }
  double root_half_size() const { return root_half_size_; }
  double half_size_at(int level) const { return std::ldexp(root_half_size_, -level); }
  Vec3 cell_center(const VoxelKey& key) const;
  // Cell corners computed from integer offsets, so neighbouring cells share faces exactly.
  Aabb cell_box(const VoxelKey& key) const;
  bool valid_key(const VoxelKey& key) const;

  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }
  std::span<const Voxel> voxels() const { return voxels_; }
  const Voxel& voxel(std::size_t index) const { return voxels_[index]; }
  // Parameter and statistic access. Keys and geometry stay read-only.
  Voxel& mutable_voxel(std::size_t index) { return voxels_[index]; }
  std::vector<VoxelKey> keys() const;

  std::optional<std::size_t> find(const VoxelKey& key) const;
  bool contains(const VoxelKey& key) const { return index_.count(key) != 0; }
  std::size_t index_of(const VoxelKey& key) const;  // NotFoundError if absent

  // Replaces the voxel with its 8 children; they inherit parameters and the inside label and
  // EMA, and start with w_max = usefulness = 0. NotFoundError / RefusalError on bad input.
  std::array<VoxelKey, 8> split_voxel(const VoxelKey& key);
  // Splits several voxels with one index rebuild. Validates every key before mutating.
  std::vector<std::array<VoxelKey, 8>> split_voxels(std::span<const VoxelKey> keys);

  // Removes listed voxels; keys not stored are skipped and counted.
  RemoveResult remove_voxels(std::span<const VoxelKey> keys);

  // Inserts a voxel at `key`. Refuses keys outside the tree or overlapping a stored voxel.
  void insert(const VoxelKey& key, const Voxel& params);
  // All-or-nothing bulk insert with a single index rebuild.
  void insert_many(std::span<const std::pair<VoxelKey, Voxel>> items);

  std::size_t model_bytes() const { return voxels_.size() * kBytesPerVoxel; }

  // Traversal structure; node 0 is the root cell when the grid is non-empty.
  std::span<const OctreeNode> nodes() const { return nodes_; }

  // Whether any two stored voxels overlap (one an ancestor of the other).
  bool has_overlap() const;

 private:
  void rebuild();
  Voxel make_voxel(const VoxelKey& key, const Voxel& params) const;
  bool has_stored_ancestor(const VoxelKey& key) const;

  Aabb bounds_;
  int max_level_ = kDefaultMaxLevel;
  double root_half_size_ = 0.0;
  std::vector<Voxel> voxels_;
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> index_;
  std::vector<OctreeNode> nodes_;
  std::unordered_map<VoxelKey, std::int32_t, VoxelKeyHash> node_index_;
};

}  // namespace sparsevox
