#include "sparsevox/geometry.hpp"

#include "sparsevox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparsevox {

void Camera::validate() const {
  if (width < 1 || height < 1) throw ArgumentError("camera: width and height must be >= 1");
  if (!(fx > 0.0) || !(fy > 0.0)) throw ArgumentError("camera: focal lengths must be positive");
  const Mat3 r = rotation();
  if (!(((r * r.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-6)) {
    throw ArgumentError("camera: world_to_camera rotation is not orthonormal");
  }
  const auto bottom = world_to_camera.row(3);
  if (std::abs(bottom(0)) > 1e-12 || std::abs(bottom(1)) > 1e-12 || std::abs(bottom(2)) > 1e-12 ||
      std::abs(bottom(3) - 1.0) > 1e-12) {
    throw ArgumentError("camera: world_to_camera last row must be [0 0 0 1]");
  }
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw ArgumentError("look_at: up is parallel to the view direction");
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat4 m = Mat4::Identity();
  m.block<1, 3>(0, 0) = right.transpose();
  m.block<1, 3>(1, 0) = down.transpose();
  m.block<1, 3>(2, 0) = forward.transpose();
  m.block<3, 1>(0, 3) = -(m.block<3, 3>(0, 0) * eye);
  return m;
}

Ray pixel_ray(const Camera& camera, int x, int y) {
  if (x < 0 || x >= camera.width || y < 0 || y >= camera.height) {
    throw ArgumentError("pixel_ray: pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") outside " + std::to_string(camera.width) + "x" +
                        std::to_string(camera.height) + " image");
  }
  const Vec3 local((x + 0.5 - camera.cx) / camera.fx, (y + 0.5 - camera.cy) / camera.fy, 1.0);
  Ray ray;
  ray.origin = camera.center();
  ray.direction = (camera.rotation().transpose() * local).normalized();
  ray.px = x;
  ray.py = y;
  return ray;
}

double camera_depth(const Camera& camera, const Vec3& p) {
  return camera.world_to_camera.row(2).head<3>().dot(p) + camera.world_to_camera(2, 3);
}

double inter_ray_spacing(const Camera& camera, double z) {
  if (!(z > 0.0)) throw ArgumentError("inter_ray_spacing: depth must be positive");
  return z / std::min(camera.fx, camera.fy);
}

bool project(const Camera& camera, const Vec3& p, double& u, double& v) {
  const Vec3 pc = camera.rotation() * p + camera.translation();
  if (pc.z() <= 0.0) return false;
  u = camera.fx * pc.x() / pc.z() + camera.cx;
  v = camera.fy * pc.y() / pc.z() + camera.cy;
  return true;
}

bool sees(const Camera& camera, const Vec3& p) {
  double u = 0.0, v = 0.0;
  if (!project(camera, p, u, v)) return false;
  return u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height;
}

bool intersect_aabb(const Vec3& origin, const Vec3& inv_direction, const Vec3& direction,
                    const Vec3& box_min, const Vec3& box_max, double& t_near, double& t_far) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) {
      // Parallel to the slab: either always inside or never.
      if (origin[a] < box_min[a] || origin[a] > box_max[a]) return false;
      continue;
    }
    double t0 = (box_min[a] - origin[a]) * inv_direction[a];
    double t1 = (box_max[a] - origin[a]) * inv_direction[a];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return false;
  }
  t_near = lo;
  t_far = hi;
  return true;
}

}  // namespace sparsevox
