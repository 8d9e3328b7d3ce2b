#include "sparsevox/synth.hpp"

#include "sparsevox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sparsevox {

using nlohmann::json;

namespace {

Vec3 vec_from(const json& j, const char* name) {
  const auto v = j.at(name).get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError(std::string("scene: '") + name + "' must have 3 entries");
  return {v[0], v[1], v[2]};
}

json vec_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Slab test kept separate from the rasterizer's so the two remain independent.
bool hit_box(const Vec3& o, const Vec3& d, const BoxPrimitive& box, double& t_in, double& t_out) {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-300) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return false;
      continue;
    }
    const double ta = (box.min[a] - o[a]) / d[a];
    const double tb = (box.max[a] - o[a]) / d[a];
    lo = std::max(lo, std::min(ta, tb));
    hi = std::min(hi, std::max(ta, tb));
  }
  if (!(hi > lo)) return false;
  t_in = lo;
  t_out = hi;
  return true;
}

}  // namespace

Aabb unit_scene_bounds() { return {Vec3(-1, -1, -1), Vec3(1, 1, 1)}; }

void SceneSpec::validate() const {
  const Aabb bounds = unit_scene_bounds();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (!(b.min.array() < b.max.array()).all()) throw ConfigError("scene: box " + std::to_string(i) + " has min >= max");
    if (!bounds.contains(b.min, 1e-12) || !bounds.contains(b.max, 1e-12)) {
      throw ConfigError("scene: box " + std::to_string(i) + " leaves the unit scene bounds");
    }
    if (!(b.opacity >= 0.0 && b.opacity <= 1.0)) throw ConfigError("scene: box opacity must be in [0, 1]");
  }
  if (ring.count < 1) throw ConfigError("scene: camera count must be >= 1");
  if (!(ring.radius > 0.0)) throw ConfigError("scene: camera radius must be positive");
  if (!(ring.fov_deg > 0.0 && ring.fov_deg < 180.0)) throw ConfigError("scene: fov_deg must be in (0, 180)");
  if (width < 1 || height < 1) throw ConfigError("scene: image size must be positive");
}

SceneSpec scene_from_json(const json& doc) {
  SceneSpec spec;
  try {
    if (doc.contains("boxes")) {
      for (const auto& b : doc.at("boxes")) {
        BoxPrimitive box;
        box.min = vec_from(b, "min");
        box.max = vec_from(b, "max");
        box.color = vec_from(b, "color");
        box.opacity = b.value("opacity", 1.0);
        spec.boxes.push_back(box);
      }
    }
    if (doc.contains("background")) spec.background = vec_from(doc, "background");
    if (doc.contains("cameras")) {
      const auto& c = doc.at("cameras");
      spec.ring.count = c.value("count", spec.ring.count);
      spec.ring.radius = c.value("radius", spec.ring.radius);
      spec.ring.height = c.value("height", spec.ring.height);
      spec.ring.fov_deg = c.value("fov_deg", spec.ring.fov_deg);
      if (c.contains("look_at")) spec.ring.look_at = vec_from(c, "look_at");
    }
    spec.width = doc.value("width", spec.width);
    spec.height = doc.value("height", spec.height);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  spec.validate();
  return spec;
}

json scene_to_json(const SceneSpec& spec) {
  json boxes = json::array();
  for (const auto& b : spec.boxes) {
    boxes.push_back({{"min", vec_to(b.min)}, {"max", vec_to(b.max)}, {"color", vec_to(b.color)}, {"opacity", b.opacity}});
  }
  return {{"boxes", boxes},
          {"background", vec_to(spec.background)},
          {"cameras",
           {{"count", spec.ring.count},
            {"radius", spec.ring.radius},
            {"height", spec.ring.height},
            {"fov_deg", spec.ring.fov_deg},
            {"look_at", vec_to(spec.ring.look_at)}}},
          {"width", spec.width},
          {"height", spec.height}};
}

std::vector<Camera> ring_cameras(const SceneSpec& spec) {
  std::vector<Camera> cameras;
  const double focal = 0.5 * spec.width / std::tan(0.5 * spec.ring.fov_deg * std::numbers::pi / 180.0);
  for (int i = 0; i < spec.ring.count; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / spec.ring.count;
    const Vec3 eye(spec.ring.radius * std::cos(phi), spec.ring.height, spec.ring.radius * std::sin(phi));
    Camera cam;
    cam.width = spec.width;
    cam.height = spec.height;
    cam.fx = focal;
    cam.fy = focal;
    cam.cx = 0.5 * spec.width;
    cam.cy = 0.5 * spec.height;
    cam.world_to_camera = look_at(eye, spec.ring.look_at, Vec3::UnitY());
    cameras.push_back(cam);
  }
  return cameras;
}

Image trace_scene(const SceneSpec& spec, const Camera& camera) {
  Image img(camera.width, camera.height, 3);
  struct Hit {
    double t;
    std::size_t box;
  };
  std::vector<Hit> hits;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = pixel_ray(camera, x, y);
      hits.clear();
      for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
        double t_in = 0.0, t_out = 0.0;
        if (hit_box(ray.origin, ray.direction, spec.boxes[b], t_in, t_out)) hits.push_back({t_in, b});
      }
      std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.t < b.t || (a.t == b.t && a.box < b.box); });
      Vec3 color = Vec3::Zero();
      double transmittance = 1.0;
      for (const Hit& h : hits) {
        const BoxPrimitive& box = spec.boxes[h.box];
        color += transmittance * box.opacity * box.color;
        transmittance *= 1.0 - box.opacity;
      }
      color += transmittance * spec.background;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
    }
  }
  return img;
}

Dataset synth(const SceneSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.cameras = ring_cameras(spec);
  for (const auto& cam : ds.cameras) ds.images.push_back(trace_scene(spec, cam));
  return ds;
}

Dataset synth(const SceneSpec& spec, const std::filesystem::path& out_dir) {
  Dataset ds = synth(spec);
  save_dataset(ds, out_dir);
  return ds;
}

SceneSpec three_box_scene(int image_size, int cameras) {
  SceneSpec spec;
  spec.width = image_size;
  spec.height = image_size;
  spec.ring.count = cameras;
  spec.ring.radius = 3.2;
  spec.ring.height = 1.4;
  spec.ring.fov_deg = 50.0;
  spec.boxes = {
      {Vec3(-0.75, -0.75, -0.5), Vec3(0.25, -0.25, 0.5), Vec3(0.85, 0.25, 0.2), 1.0},
      {Vec3(0.25, -0.75, -0.5), Vec3(0.75, 0.5, 0.0), Vec3(0.2, 0.7, 0.3), 1.0},
      {Vec3(-0.375, -0.25, -0.125), Vec3(0.125, 0.25, 0.375), Vec3(0.25, 0.35, 0.9), 1.0},
  };
  return spec;
}

}  // namespace sparsevox
