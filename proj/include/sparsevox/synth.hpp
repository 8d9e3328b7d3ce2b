#pragma once

#include "sparsevox/dataset.hpp"
#include "sparsevox/geometry.hpp"
#include "sparsevox/image.hpp"

#include <filesystem>
#include <vector>

#include "json.hpp"

namespace sparsevox {

struct BoxPrimitive {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 color = Vec3::Ones();
  double opacity = 1.0;
};

struct CameraRing {
  int count = 16;
  double radius = 3.0;
  double height = 1.0;
  Vec3 look_at = Vec3::Zero();
  double fov_deg = 60.0;  // horizontal field of view
};

// Synthetic scene of axis-aligned boxes inside [-1, 1]^3, viewed from a ring of cameras
// circling the y axis.
struct SceneSpec {
  std::vector<BoxPrimitive> boxes;
  Vec3 background = Vec3::Zero();
  CameraRing ring;
  int width = 64;
  int height = 64;

  void validate() const;  // ConfigError
};

Aabb unit_scene_bounds();

SceneSpec scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const SceneSpec& spec);

std::vector<Camera> ring_cameras(const SceneSpec& spec);

// Analytic front-to-back compositing of the spec boxes; each box crossed contributes its
// opacity once.
Image trace_scene(const SceneSpec& spec, const Camera& camera);

Dataset synth(const SceneSpec& spec);
Dataset synth(const SceneSpec& spec, const std::filesystem::path& out_dir);

// Three axis-aligned opaque boxes on a 1/8 lattice used for end-to-end experiments.
SceneSpec three_box_scene(int image_size = 64, int cameras = 16);

}  // namespace sparsevox
