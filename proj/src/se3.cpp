#include "tissuefield/se3.hpp"

#include <limits>

#include "tissuefield/errors.hpp"

namespace tissuefield::se3 {

namespace {

void require_finite(const Eigen::Vector3d& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite components");
}

using Jet6 = ceres::Jet<double, 6>;
using Jet3 = ceres::Jet<double, 3>;

// Inner scalar for nested duals. Eigen builds constants as Scalar(0), which
// plain Jet<Jet<...>> cannot do, so give the inner Jet implicit conversions.
struct InnerJet6 : Jet6 {
  InnerJet6() = default;
  InnerJet6(double v) : Jet6(v) {}
  InnerJet6(int v) : Jet6(static_cast<double>(v)) {}
  InnerJet6(const Jet6& j) : Jet6(j) {}
  InnerJet6(double v, int k) : Jet6(v, k) {}
};

using Jet6x3 = ceres::Jet<InnerJet6, 3>;

}  // namespace
}  // namespace tissuefield::se3

namespace Eigen {
template <>
struct NumTraits<tissuefield::se3::InnerJet6> : NumTraits<ceres::Jet<double, 6>> {
  using Inner = tissuefield::se3::InnerJet6;
  using Real = Inner;
  using NonInteger = Inner;
  using Nested = Inner;
  using Literal = Inner;
  static Inner epsilon() { return Inner(std::numeric_limits<double>::epsilon()); }
  static Inner dummy_precision() { return Inner(1e-12); }
  static Inner highest() { return Inner(std::numeric_limits<double>::max()); }
  static Inner lowest() { return Inner(-std::numeric_limits<double>::max()); }
};
}  // namespace Eigen

namespace tissuefield::se3 {

Eigen::Matrix4d RigidTransform::homogeneous() const {
  Eigen::Matrix4d q = Eigen::Matrix4d::Identity();
  q.topLeftCorner<3, 3>() = rotation;
  q.topRightCorner<3, 1>() = translation;
  return q;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& a) {
  require_finite(a, "rotation generator");
  return exp_so3_unchecked<double>(a);
}

RigidTransform screw_to_transform(const ScrewAxis& screw, TranslationMode mode) {
  require_finite(screw.a, "rotation generator");
  require_finite(screw.b, "translation generator");
  RigidTransform out;
  screw_to_transform_unchecked<double>(screw.a, screw.b, mode, &out.rotation, &out.translation);
  return out;
}

Eigen::Vector3d warp_point(const Eigen::Vector3d& x, const ScrewAxis& screw, TranslationMode mode) {
  require_finite(x, "point");
  return screw_to_transform(screw, mode).apply(x);
}

WarpWithScrewDerivative warp_with_screw_derivative(const Eigen::Vector3d& x,
                                                   const Eigen::Matrix<double, 6, 1>& screw,
                                                   TranslationMode mode) {
  Vector3<Jet6> a, b;
  for (int i = 0; i < 3; ++i) {
    a[i] = Jet6(screw[i], i);
    b[i] = Jet6(screw[3 + i], 3 + i);
  }
  const Vector3<Jet6> xj = x.cast<Jet6>();
  const Vector3<Jet6> warped = warp_point_unchecked<Jet6>(xj, a, b, mode);
  WarpWithScrewDerivative out;
  for (int i = 0; i < 3; ++i) {
    out.point[i] = warped[i].a;
    out.d_screw.row(i) = warped[i].v.transpose();
  }
  return out;
}

Eigen::Matrix3d warp_total_jacobian(const Eigen::Vector3d& x,
                                    const Eigen::Matrix<double, 6, 1>& screw,
                                    const Eigen::Matrix<double, 6, 3>& screw_sensitivity,
                                    TranslationMode mode) {
  // Column j is the directional derivative of W along (e_j, ds/dx_j).
  Vector3<Jet3> xj, a, b;
  for (int i = 0; i < 3; ++i) {
    xj[i] = Jet3(x[i], i);
    a[i] = Jet3(screw[i]);
    b[i] = Jet3(screw[3 + i]);
    a[i].v = screw_sensitivity.row(i).transpose();
    b[i].v = screw_sensitivity.row(3 + i).transpose();
  }
  const Vector3<Jet3> warped = warp_point_unchecked<Jet3>(xj, a, b, mode);
  Eigen::Matrix3d jacobian;
  for (int i = 0; i < 3; ++i) jacobian.row(i) = warped[i].v.transpose();
  return jacobian;
}

Eigen::Matrix<double, 6, 1> warp_jacobian_screw_gradient(
    const Eigen::Vector3d& x, const Eigen::Matrix<double, 6, 1>& screw,
    const Eigen::Matrix<double, 6, 3>& screw_sensitivity, const Eigen::Matrix3d& upstream,
    TranslationMode mode) {
  // Outer dual part: d/ds (6). Inner: the three directional derivatives.
  Vector3<Jet6x3> xj, a, b;
  for (int i = 0; i < 3; ++i) {
    xj[i] = Jet6x3(InnerJet6(x[i]), i);
    a[i] = Jet6x3(InnerJet6(screw[i], i));
    b[i] = Jet6x3(InnerJet6(screw[3 + i], 3 + i));
    for (int j = 0; j < 3; ++j) {
      a[i].v[j] = InnerJet6(screw_sensitivity(i, j));
      b[i].v[j] = InnerJet6(screw_sensitivity(3 + i, j));
    }
  }
  const Vector3<Jet6x3> warped = warp_point_unchecked<Jet6x3>(xj, a, b, mode);
  Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) gradient += upstream(i, j) * warped[i].v[j].v;
  }
  return gradient;
}

}  // namespace tissuefield::se3
