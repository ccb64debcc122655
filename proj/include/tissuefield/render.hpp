#pragma once

// Volume rendering quadrature. ``composite`` / ``render_ray`` are the
// per-ray double-precision reference path; ``composite_batch`` and its
// backward are the OpenMP kernels used by training and inference.

#include <Eigen/Core>

#include <span>
#include <vector>

#include "tissuefield/camera.hpp"
#include "tissuefield/fields.hpp"
#include "tissuefield/mlp.hpp"

namespace tissuefield {

/// Floor on accumulated opacity when normalizing the expected depth.
inline constexpr double kAccumulationFloor = 1e-10;

struct RadianceOutput {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double acc = 0.0;
  std::vector<double> weights;
  /// T_k, the transmittance in front of sample k.
  std::vector<double> transmittance;
};

/// δ_k = s_{k+1} - s_k with δ_n = far - s_n; α = 1 - exp(-τ δ); w = T α.
/// Throws InvalidArgument when s_values is not strictly increasing.
RadianceOutput composite(std::span<const Eigen::Vector3d> colors, std::span<const double> densities,
                         std::span<const double> s_values, double far);

struct CompositeGradients {
  std::vector<Eigen::Vector3d> d_colors;
  std::vector<double> d_densities;
  std::vector<double> d_s_values;
};

/// Reverse pass of ``composite`` for upstream d color, d depth and d acc.
CompositeGradients composite_backward(std::span<const Eigen::Vector3d> colors,
                                      std::span<const double> densities,
                                      std::span<const double> s_values, double far,
                                      const RadianceOutput& forward, const Eigen::Vector3d& d_color,
                                      double d_depth, double d_acc = 0.0);

struct RenderedRay {
  RadianceOutput output;
  std::vector<Eigen::Vector3d> warped;  // canonical sample positions, kept for the TV term
};

/// Warps every sample o + s d through the deformation at ray.time, queries
/// the canonical field and composites.
RenderedRay render_ray(const Ray& ray, std::span<const double> s_values,
                       const Deformation& deformation, const RadianceSource& canonical, double far);

/// Per-ray results for a batch of R rays with K samples each.
template <typename Scalar>
struct RayOutputs {
  MatrixX<Scalar> color;    // 3 x R
  MatrixX<Scalar> depth;    // 1 x R
  MatrixX<Scalar> acc;      // 1 x R
  MatrixX<Scalar> weights;  // K x R
};

/// ``radiance`` is 4 x (R K) in ray-major order (rgb rows then density);
/// ``s_values`` is K x R.
template <typename Scalar>
void composite_batch(const MatrixX<Scalar>& radiance, const MatrixX<Scalar>& s_values, double far,
                     RayOutputs<Scalar>* out);

/// Returns d loss / d radiance (4 x R K).
template <typename Scalar>
MatrixX<Scalar> composite_batch_backward(const MatrixX<Scalar>& radiance,
                                         const MatrixX<Scalar>& s_values, double far,
                                         const RayOutputs<Scalar>& forward,
                                         const MatrixX<Scalar>& d_color,
                                         const MatrixX<Scalar>& d_depth);

}  // namespace tissuefield
