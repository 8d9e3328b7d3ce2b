#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <vector>

namespace sparsevox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  int px = 0;
  int py = 0;
};

// Pinhole camera, OpenCV convention: +z looks forward, +y points down the image.
struct Camera {
  int width = 1;
  int height = 1;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  Mat4 world_to_camera = Mat4::Identity();

  Mat3 rotation() const { return world_to_camera.block<3, 3>(0, 0); }
  Vec3 translation() const { return world_to_camera.block<3, 1>(0, 3); }
  Vec3 center() const { return -rotation().transpose() * translation(); }

  // Throws ArgumentError if intrinsics or pose violate the camera invariants.
  void validate() const;
};

// Rigid pose looking from `eye` toward `target`; `up` is the world up direction.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

// Ray through the center of pixel (x, y).
Ray pixel_ray(const Camera& camera, int x, int y);

// Camera-space depth of a world point.
double camera_depth(const Camera& camera, const Vec3& p);

// World-space spacing between adjacent pixel rays at depth z: z / min(fx, fy).
double inter_ray_spacing(const Camera& camera, double z);

// Projects a world point to continuous pixel coordinates. Returns false behind the camera.
bool project(const Camera& camera, const Vec3& p, double& u, double& v);

// Whether the point lies in front of the camera and projects inside the image.
bool sees(const Camera& camera, const Vec3& p);

// Ray/box slab test. On hit, [t_near, t_far] is the closed parametric overlap, t_near may be negative.
bool intersect_aabb(const Vec3& origin, const Vec3& inv_direction, const Vec3& direction,
                    const Vec3& box_min, const Vec3& box_max, double& t_near, double& t_far);

}  // namespace sparsevox
