#pragma once

#include <Eigen/Core>

#include "tissuefield/se3.hpp"

namespace tissuefield {

/// Fixed, calibrated pinhole camera. Pixel centers sit at half-integer offsets.
struct PinholeCamera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double near = 0.1;
  double far = 1.0;

  /// Throws InvalidArgument if the intrinsics or bounds are unusable.
  void validate() const;
  /// Continuous pixel coordinates (col, row) of a camera-frame point.
  Eigen::Vector2d project(const Eigen::Vector3d& point) const;
};

struct PixelCoord {
  int row = 0;
  int col = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  PixelCoord pixel;
  double time = 0.0;

  Eigen::Vector3d at(double s) const { return origin + s * direction; }
};

/// Back-projects the pixel center. The camera never moves, so the origin is 0.
Ray gen_ray(const PinholeCamera& camera, int row, int col, double t);

/// Applies a rigid camera pose (camera-to-scene) to a ray, for side views.
Ray transform_ray(const Ray& ray, const se3::RigidTransform& pose);

/// Isotropic affine map from scene coordinates into the [-1, 1]^3 box that
/// bounds the camera frustum between near and far.
struct SceneBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double scale = 1.0;  // box units per scene unit

  static SceneBox from_frustum(const PinholeCamera& camera);

  Eigen::Vector3d to_box(const Eigen::Vector3d& x) const { return (x - center) * scale; }
  Eigen::Vector3d from_box(const Eigen::Vector3d& x) const { return x / scale + center; }
};

}  // namespace tissuefield
