#include "tissuefield/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tissuefield/errors.hpp"

namespace tissuefield {

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image extent must be positive");
  if (!(near > 0.0) || !(far > near)) throw InvalidArgument("require 0 < near < far");
}

Eigen::Vector2d PinholeCamera::project(const Eigen::Vector3d& point) const {
  return {fx * point.x() / point.z() + cx, fy * point.y() / point.z() + cy};
}

Ray gen_ray(const PinholeCamera& camera, int row, int col, double t) {
  if (row < 0 || row >= camera.height || col < 0 || col >= camera.width) {
    throw InvalidArgument("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                          ") outside the image");
  }
  Ray ray;
  ray.direction = Eigen::Vector3d((col + 0.5 - camera.cx) / camera.fx,
                                  (row + 0.5 - camera.cy) / camera.fy, 1.0)
                      .normalized();
  ray.pixel = {row, col};
  ray.time = t;
  return ray;
}

Ray transform_ray(const Ray& ray, const se3::RigidTransform& pose) {
  Ray out = ray;
  out.origin = pose.apply(ray.origin);
  out.direction = pose.rotation * ray.direction;
  return out;
}

SceneBox SceneBox::from_frustum(const PinholeCamera& camera) {
  camera.validate();
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  const double cols[2] = {0.0, static_cast<double>(camera.width)};
  const double rows[2] = {0.0, static_cast<double>(camera.height)};
  for (double c : cols) {
    for (double r : rows) {
      const Eigen::Vector3d d =
          Eigen::Vector3d((c - camera.cx) / camera.fx, (r - camera.cy) / camera.fy, 1.0).normalized();
      for (double s : {camera.near, camera.far}) {
        lo = lo.cwiseMin(s * d);
        hi = hi.cwiseMax(s * d);
      }
    }
  }
  // The far cap bulges along the optical axis when it is inside the frustum.
  hi.z() = std::max(hi.z(), camera.far);
  SceneBox box;
  box.center = 0.5 * (lo + hi);
  box.scale = 1.0 / (0.5 * (hi - lo).maxCoeff());
  return box;
}

}  // namespace tissuefield
