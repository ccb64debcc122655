#pragma once

// Batched dynamic scene: deformation field -> screw warp -> canonical field
// -> compositing, with the reverse pass that training needs. Rays are given
// in scene coordinates; both fields operate in the normalized scene box.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "tissuefield/camera.hpp"
#include "tissuefield/fields.hpp"
#include "tissuefield/render.hpp"

namespace tissuefield {

struct ModelConfig {
  DeformationConfig deformation;
  CanonicalConfig canonical;
  se3::TranslationMode translation_mode = se3::TranslationMode::kNormalizedAxis;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename Scalar>
struct RayBatch {
  MatrixX<Scalar> origins;     // 3 x R, scene units
  MatrixX<Scalar> directions;  // 3 x R, unit
  MatrixX<Scalar> s_values;    // K x R, strictly increasing per column
  double time = 0.0;

  int rays() const { return static_cast<int>(s_values.cols()); }
  int samples() const { return static_cast<int>(s_values.rows()); }
};

struct ForwardOptions {
  bool keep_cache = true;
  /// Evaluate the per-sample warp Jacobians and their tangent caches.
  bool jacobians = false;
  /// Warp the same samples at t - dt and t + dt (only the neighbors that
  /// exist in [0, 1]); 0 disables.
  double neighbor_dt = 0.0;
  /// Jacobians and neighbor warps are evaluated on every probe_stride-th
  /// sample only (the regularizer probes).
  int probe_stride = 1;
};

template <typename Scalar>
struct WarpPass {
  double time = 0.0;
  MatrixX<Scalar> screws;  // 6 x N
  MatrixX<Scalar> warped;  // 3 x N (3 x M for neighbors), box coordinates
  /// d warp / d screw per sample, 18 x N (row-major 3 x 6 blocks).
  MatrixX<Scalar> d_warp_d_screw;
  typename DeformationField<Scalar>::Cache cache;
};

template <typename Scalar>
struct ForwardPass {
  int rays = 0;
  int samples = 0;
  double far = 0.0;
  MatrixX<Scalar> s_values;
  MatrixX<Scalar> points;      // 3 x N box coordinates of the raw samples
  MatrixX<Scalar> directions;  // 3 x N
  WarpPass<Scalar> current;
  bool has_previous = false;
  bool has_next = false;
  WarpPass<Scalar> previous;
  WarpPass<Scalar> next;
  MatrixX<Scalar> radiance;  // 4 x N
  typename CanonicalField<Scalar>::Cache canonical_cache;
  RayOutputs<Scalar> outputs;

  /// Sample indices of the regularizer probes (M of them).
  int probe_stride = 1;
  std::vector<Eigen::Index> probes;
  MatrixX<Scalar> probe_points;  // 3 x M
  typename DeformationField<Scalar>::Cache probe_cache;  // unused when probe_stride == 1

  bool has_jacobians = false;
  MatrixX<Scalar> screw_tangents;  // 6 x 3M
  typename DeformationField<Scalar>::TangentCache tangent_cache;
  std::vector<Eigen::Matrix3d> jacobians;  // per probe

  /// Deformation cache restricted to the probes.
  const typename DeformationField<Scalar>::Cache& probe_deformation_cache() const {
    return probe_stride == 1 ? current.cache : probe_cache;
  }
};

/// Upstream gradients for ``SceneModel::backward``. Empty matrices mean zero.
template <typename Scalar>
struct BackwardInputs {
  MatrixX<Scalar> d_color;  // 3 x R
  MatrixX<Scalar> d_depth;  // 1 x R
  std::vector<Eigen::Matrix3d> d_jacobians;  // per probe
  MatrixX<Scalar> d_warped;           // 3 x N, on x'(t), box coordinates
  MatrixX<Scalar> d_warped_previous;  // 3 x M, probes
  MatrixX<Scalar> d_warped_next;      // 3 x M
};

template <typename Scalar>
class SceneModel {
 public:
  using Matrix = MatrixX<Scalar>;

  SceneModel() = default;
  SceneModel(const ModelConfig& config, const SceneBox& box, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const SceneBox& box() const { return box_; }
  DeformationField<Scalar>& deformation() { return deformation_; }
  const DeformationField<Scalar>& deformation() const { return deformation_; }
  CanonicalField<Scalar>& canonical() { return canonical_; }
  const CanonicalField<Scalar>& canonical() const { return canonical_; }

  /// Flat parameter and gradient views in a fixed order.
  std::vector<std::span<Scalar>> parameter_blocks();
  std::vector<std::span<const Scalar>> parameter_blocks() const;
  std::vector<std::span<Scalar>> gradient_blocks();
  std::size_t parameter_count() const;
  void zero_grad();

  void forward(const RayBatch<Scalar>& batch, double far, const ForwardOptions& options,
               ForwardPass<Scalar>* pass) const;
  /// Accumulates parameter gradients.
  void backward(const ForwardPass<Scalar>& pass, const BackwardInputs<Scalar>& upstream);

  /// Inference in chunks of at most ``chunk_rays`` rays.
  RayOutputs<Scalar> render(const RayBatch<Scalar>& batch, double far, int chunk_rays = 2048) const;

  /// Box-space warp of box-space points (3 x N) at time t.
  Matrix warp_box(const Matrix& points, double t) const;

 private:
  void warp_pass(const Matrix& points, double t, bool derivatives, bool keep_cache,
                 WarpPass<Scalar>* pass) const;

  ModelConfig config_;
  SceneBox box_;
  DeformationField<Scalar> deformation_;
  CanonicalField<Scalar> canonical_;
};

/// Point-wise views of a learned model in scene coordinates, for the
/// reference renderer and the warp Jacobian operation.
template <typename Scalar>
class ModelDeformation final : public Deformation {
 public:
  explicit ModelDeformation(const SceneModel<Scalar>& model) : model_(&model) {}
  Eigen::Vector3d warp(const Eigen::Vector3d& x, double t) const override;
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, double t) const override;

 private:
  const SceneModel<Scalar>* model_;
};

template <typename Scalar>
class ModelRadiance final : public RadianceSource {
 public:
  explicit ModelRadiance(const SceneModel<Scalar>& model) : model_(&model) {}
  Radiance radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const override;

 private:
  const SceneModel<Scalar>* model_;
};

extern template class SceneModel<float>;
extern template class SceneModel<double>;
extern template class ModelDeformation<float>;
extern template class ModelDeformation<double>;
extern template class ModelRadiance<float>;
extern template class ModelRadiance<double>;

}  // namespace tissuefield
