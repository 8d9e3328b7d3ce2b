#pragma once

#include "sparsevox/geometry.hpp"
#include "sparsevox/image.hpp"
#include "sparsevox/voxel_grid.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace sparsevox::testing {

inline Aabb unit_bounds() { return {Vec3(-1, -1, -1), Vec3(1, 1, 1)}; }

inline Camera make_camera(int w, int h, double f, const Vec3& eye, const Vec3& target = Vec3::Zero()) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = f;
  cam.fy = f;
  cam.cx = 0.5 * w;
  cam.cy = 0.5 * h;
  cam.world_to_camera = look_at(eye, target, Vec3::UnitY());
  return cam;
}

// Camera at a random point on a sphere of radius ~3 looking at the origin.
inline Camera random_camera(std::mt19937_64& rng, int w, int h) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> r(2.5, 3.5);
  Vec3 eye;
  do {
    eye = Vec3(n(rng), n(rng), n(rng));
  } while (eye.norm() < 1e-3 || std::abs(eye.normalized().y()) > 0.95);
  eye = eye.normalized() * r(rng);
  std::uniform_real_distribution<double> fov(0.6, 1.2);
  const double f = 0.5 * w / std::tan(0.5 * fov(rng));
  return make_camera(w, h, f, eye);
}

inline Voxel random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  Voxel v;
  v.opacity_param = u(rng);
  for (auto& c : v.color_params) c = u(rng);
  return v;
}

// Random non-overlapping grid: refines random cells of a level-1 grid down to `max_level` until
// roughly `target` cells exist, then keeps a random subset of up to `target` of them.
inline VoxelGrid random_grid(std::mt19937_64& rng, std::size_t target, int max_level = 4, double keep = 0.8) {
  std::vector<VoxelKey> cells;
  for (int o = 0; o < 8; ++o) cells.push_back(VoxelKey{}.child(o));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (cells.size() < target * 2) {
    std::vector<std::size_t> splittable;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].level < max_level) splittable.push_back(i);
    }
    if (splittable.empty()) break;
    const std::size_t pick = splittable[static_cast<std::size_t>(u(rng) * splittable.size()) % splittable.size()];
    const VoxelKey parent = cells[pick];
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(pick));
    for (int o = 0; o < 8; ++o) cells.push_back(parent.child(o));
  }
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<std::pair<VoxelKey, Voxel>> items;
  for (const auto& key : cells) {
    if (items.size() >= target) break;
    if (u(rng) < keep) items.push_back({key, random_params(rng)});
  }
  VoxelGrid grid(unit_bounds(), 10);
  grid.insert_many(items);
  return grid;
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int channels = 3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, channels);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

}  // namespace sparsevox::testing
