#pragma once

// Closed-form SE(3) geometry used by the deformation field: the screw-axis
// exponential map and point warping into canonical space.
//
// The templated kernels accept any scalar with the usual arithmetic and
// sin/cos/sqrt overloads, which includes ceres::Jet (nested to any depth).
// The checked, double-precision wrappers validate their inputs.

#include <Eigen/Core>
#include <ceres/jet.h>

#include <cmath>

namespace tissuefield::se3 {

template <typename T>
using Vector3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Matrix3 = Eigen::Matrix<T, 3, 3>;

/// Below this norm, ``a`` and ``b`` switch to their Taylor forms.
inline constexpr double kDegeneracyEpsilon = 1e-6;

/// How the translation generator ``b`` enters the translation ``p``.
enum class TranslationMode {
  /// p = (zI + [A](1 - cos z) + [A]^2 (z - sin z)) b/|b|; translation length is tied to z.
  kNormalizedAxis,
  /// Standard se(3) exponential, p = V(a) b; reaches pure translations at z = 0.
  kUnnormalized,
};

struct ScrewAxis {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();

  double angle() const { return a.norm(); }
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * x + translation; }
  Eigen::Matrix4d homogeneous() const;
  RigidTransform inverse() const;
  RigidTransform compose(const RigidTransform& rhs) const;  // this * rhs
};

namespace detail {

inline double scalar_part(double v) { return v; }
inline float scalar_part(float v) { return v; }
template <typename T, int N>
double scalar_part(const ceres::Jet<T, N>& v) {
  return scalar_part(v.a);
}

// sqrt that stays differentiable-by-convention at exactly zero.
template <typename T>
T safe_norm_from_squared(const T& squared) {
  using std::sqrt;
  if (scalar_part(squared) > 0.0) return sqrt(squared);
  return T(0.0);
}

}  // namespace detail

template <typename T>
Matrix3<T> skew(const Vector3<T>& v) {
  Matrix3<T> s;
  // clang-format off
  s << T(0.0), -v.z(),  v.y(),
       v.z(),  T(0.0), -v.x(),
      -v.y(),  v.x(),  T(0.0);
  // clang-format on
  return s;
}

/// Rodrigues' formula. Second-order Taylor form below the degeneracy epsilon.
template <typename T>
Matrix3<T> exp_so3_unchecked(const Vector3<T>& a) {
  using std::cos;
  using std::sin;
  const T angle_sq = a.squaredNorm();
  const Matrix3<T> identity = Matrix3<T>::Identity();
  if (detail::scalar_part(angle_sq) < kDegeneracyEpsilon * kDegeneracyEpsilon) {
    const Matrix3<T> k = skew<T>(a);
    return identity + k + T(0.5) * k * k;
  }
  const T angle = sqrt(angle_sq);
  const Matrix3<T> k = skew<T>(Vector3<T>(a / angle));
  const T half_sin = sin(angle * T(0.5));
  // 1 - cos z written as 2 sin^2(z/2) to avoid cancellation.
  return identity + k * sin(angle) + (k * k) * (T(2.0) * half_sin * half_sin);
}

template <typename T>
void screw_to_transform_unchecked(const Vector3<T>& a, const Vector3<T>& b, TranslationMode mode,
                                  Matrix3<T>* rotation, Vector3<T>* translation) {
  using std::cos;
  using std::sin;
  *rotation = exp_so3_unchecked<T>(a);
  const T angle_sq = a.squaredNorm();
  const bool small_angle =
      detail::scalar_part(angle_sq) < kDegeneracyEpsilon * kDegeneracyEpsilon;

  if (mode == TranslationMode::kUnnormalized) {
    const Matrix3<T> k = skew<T>(a);
    if (small_angle) {
      *translation = b + T(0.5) * (k * b) + T(1.0 / 6.0) * (k * (k * b));
      return;
    }
    const T angle = sqrt(angle_sq);
    const Matrix3<T> unit = skew<T>(Vector3<T>(a / angle));
    const T half_sin = sin(angle * T(0.5));
    const T one_minus_cos = T(2.0) * half_sin * half_sin;
    *translation = b + (unit * b) * (one_minus_cos / angle) +
                   (unit * (unit * b)) * ((angle - sin(angle)) / angle);
    return;
  }

  Vector3<T> b_hat = Vector3<T>::Zero();
  const T b_sq = b.squaredNorm();
  if (detail::scalar_part(b_sq) >= kDegeneracyEpsilon * kDegeneracyEpsilon) {
    b_hat = b / sqrt(b_sq);
  }
  if (small_angle) {
    *translation = detail::safe_norm_from_squared(angle_sq) * b_hat;
    return;
  }
  const T angle = sqrt(angle_sq);
  const Matrix3<T> unit = skew<T>(Vector3<T>(a / angle));
  const T half_sin = sin(angle * T(0.5));
  const T one_minus_cos = T(2.0) * half_sin * half_sin;
  *translation =
      angle * b_hat + (unit * b_hat) * one_minus_cos + (unit * (unit * b_hat)) * (angle - sin(angle));
}

/// x' = R x + p for the transform encoded by the screw (a, b).
template <typename T>
Vector3<T> warp_point_unchecked(const Vector3<T>& x, const Vector3<T>& a, const Vector3<T>& b,
                                TranslationMode mode) {
  Matrix3<T> rotation;
  Vector3<T> translation;
  screw_to_transform_unchecked<T>(a, b, mode, &rotation, &translation);
  return rotation * x + translation;
}

/// Throws InvalidArgument on non-finite input.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& a);
RigidTransform screw_to_transform(const ScrewAxis& screw,
                                  TranslationMode mode = TranslationMode::kNormalizedAxis);
Eigen::Vector3d warp_point(const Eigen::Vector3d& x, const ScrewAxis& screw,
                           TranslationMode mode = TranslationMode::kNormalizedAxis);

/// Value of the warp and its derivative with respect to the six screw
/// coordinates (a, b), evaluated with forward-mode dual numbers.
struct WarpWithScrewDerivative {
  Eigen::Vector3d point;
  Eigen::Matrix<double, 3, 6> d_screw;
};
WarpWithScrewDerivative warp_with_screw_derivative(const Eigen::Vector3d& x,
                                                   const Eigen::Matrix<double, 6, 1>& screw,
                                                   TranslationMode mode);

/// Jacobian dx'/dx of x -> W(s(x), x) given the screw sensitivities ds/dx (6x3).
Eigen::Matrix3d warp_total_jacobian(const Eigen::Vector3d& x,
                                    const Eigen::Matrix<double, 6, 1>& screw,
                                    const Eigen::Matrix<double, 6, 3>& screw_sensitivity,
                                    TranslationMode mode);

/// Gradient with respect to the screw of <G, J(s)> where J is
/// ``warp_total_jacobian`` with the sensitivities held fixed. This is the
/// second-order term the Jacobian regularizer needs.
Eigen::Matrix<double, 6, 1> warp_jacobian_screw_gradient(
    const Eigen::Vector3d& x, const Eigen::Matrix<double, 6, 1>& screw,
    const Eigen::Matrix<double, 6, 3>& screw_sensitivity, const Eigen::Matrix3d& upstream,
    TranslationMode mode);

}  // namespace tissuefield::se3
