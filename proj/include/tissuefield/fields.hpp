#pragma once

// The two neural fields: a time-conditioned deformation field producing screw
// axes, and a canonical radiance field producing color and density. Both are
// batched (points are columns) and carry hand-written backward passes.
//
// This header also declares the abstract point-wise interfaces the reference
// renderer uses, so analytic fields and learned fields are interchangeable.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tissuefield/encoding.hpp"
#include "tissuefield/mlp.hpp"
#include "tissuefield/se3.hpp"

namespace tissuefield {

struct Radiance {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double density = 0.0;
};

/// Maps a point and a unit viewing direction to emitted color and density.
class RadianceSource {
 public:
  virtual ~RadianceSource() = default;
  virtual Radiance radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const = 0;
};

/// Maps a point observed at time t to its canonical-space position.
class Deformation {
 public:
  virtual ~Deformation() = default;
  virtual Eigen::Vector3d warp(const Eigen::Vector3d& x, double t) const = 0;
  /// Exact d warp / d x at fixed t.
  virtual Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, double t) const = 0;
};

class IdentityDeformation final : public Deformation {
 public:
  Eigen::Vector3d warp(const Eigen::Vector3d& x, double) const override { return x; }
  Eigen::Matrix3d jacobian(const Eigen::Vector3d&, double) const override {
    return Eigen::Matrix3d::Identity();
  }
};

/// One screw for the whole space, optionally varying with time.
class ScrewDeformation final : public Deformation {
 public:
  using Schedule = std::function<se3::ScrewAxis(double)>;
  explicit ScrewDeformation(Schedule schedule,
                            se3::TranslationMode mode = se3::TranslationMode::kNormalizedAxis)
      : schedule_(std::move(schedule)), mode_(mode) {}
  explicit ScrewDeformation(const se3::ScrewAxis& screw,
                            se3::TranslationMode mode = se3::TranslationMode::kNormalizedAxis)
      : ScrewDeformation([screw](double) { return screw; }, mode) {}

  Eigen::Vector3d warp(const Eigen::Vector3d& x, double t) const override;
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, double t) const override;

 private:
  Schedule schedule_;
  se3::TranslationMode mode_;
};

/// x' = M x + p.
class AffineDeformation final : public Deformation {
 public:
  AffineDeformation(const Eigen::Matrix3d& m, const Eigen::Vector3d& p) : m_(m), p_(p) {}
  Eigen::Vector3d warp(const Eigen::Vector3d& x, double) const override { return m_ * x + p_; }
  Eigen::Matrix3d jacobian(const Eigen::Vector3d&, double) const override { return m_; }

 private:
  Eigen::Matrix3d m_;
  Eigen::Vector3d p_;
};

/// Hand-coded warp with its analytic Jacobian.
class FunctionDeformation final : public Deformation {
 public:
  using WarpFn = std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)>;
  using JacobianFn = std::function<Eigen::Matrix3d(const Eigen::Vector3d&, double)>;
  FunctionDeformation(WarpFn warp, JacobianFn jacobian)
      : warp_(std::move(warp)), jacobian_(std::move(jacobian)) {}
  Eigen::Vector3d warp(const Eigen::Vector3d& x, double t) const override { return warp_(x, t); }
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, double t) const override {
    return jacobian_(x, t);
  }

 private:
  WarpFn warp_;
  JacobianFn jacobian_;
};

/// Exact Jacobian of the full warp, including the dependence of the screw on x.
Eigen::Matrix3d warp_jacobian(const Eigen::Vector3d& x, double t, const Deformation& deformation);

struct DeformationConfig {
  int hidden_layers = 8;
  int width = 128;
  std::vector<int> skips{5};
  int position_frequencies = 10;
  int time_frequencies = 6;
  double output_init_scale = 1e-5;

  friend bool operator==(const DeformationConfig&, const DeformationConfig&) = default;
};

/// Screw-axis field over the normalized scene box: (x, t) -> (a, b).
template <typename Scalar>
class DeformationField {
 public:
  using Matrix = MatrixX<Scalar>;

  struct Cache {
    Matrix points;
    typename Mlp<Scalar>::Cache mlp;
  };
  using TangentCache = typename Mlp<Scalar>::TangentCache;

  DeformationField() = default;
  DeformationField(const DeformationConfig& config, std::uint64_t seed);

  const DeformationConfig& config() const { return config_; }
  Mlp<Scalar>& network() { return network_; }
  const Mlp<Scalar>& network() const { return network_; }

  /// Screws (6 x N, rows a then b) for box-space points (3 x N) at time t.
  Matrix forward(const Matrix& points, double t, Cache* cache) const;
  void backward(const Cache& cache, const Matrix& d_screws);

  /// d screw / d x_j for j = 0, 1, 2, stacked as three blocks of N columns.
  Matrix screw_tangents(const Cache& cache, TangentCache* tangent_cache) const;
  void tangent_backward(const Cache& cache, const TangentCache& tangent_cache,
                        const Matrix& d_tangents);

  /// Single-point evaluation.
  se3::ScrewAxis deform(const Eigen::Vector3d& x, double t) const;

 private:
  Matrix encode_inputs(const Matrix& points, double t) const;

  DeformationConfig config_;
  PositionalEncoding position_encoding_;
  PositionalEncoding time_encoding_;
  Mlp<Scalar> network_;
};

struct CanonicalConfig {
  int hidden_layers = 8;
  int width = 256;
  std::vector<int> skips{5};
  int color_width = 128;
  int position_frequencies = 10;
  int direction_frequencies = 4;

  friend bool operator==(const CanonicalConfig&, const CanonicalConfig&) = default;
};

/// Canonical radiance field. Density depends on position only; the
/// viewing direction enters the color branch.
template <typename Scalar>
class CanonicalField {
 public:
  using Matrix = MatrixX<Scalar>;

  struct Cache {
    Matrix points;
    Matrix trunk_output;
    Matrix rgb;
    typename Mlp<Scalar>::Cache trunk;
    typename Mlp<Scalar>::Cache color;
  };

  CanonicalField() = default;
  CanonicalField(const CanonicalConfig& config, std::uint64_t seed);

  const CanonicalConfig& config() const { return config_; }
  Mlp<Scalar>& trunk() { return trunk_; }
  const Mlp<Scalar>& trunk() const { return trunk_; }
  Mlp<Scalar>& color_head() { return color_; }
  const Mlp<Scalar>& color_head() const { return color_; }

  /// Rows 0-2: color in [0, 1]; row 3: density >= 0.
  Matrix forward(const Matrix& points, const Matrix& directions, Cache* cache) const;
  /// ``d_output`` is 4 x N; ``d_points`` receives d loss / d points if non-null.
  void backward(const Cache& cache, const Matrix& d_output, Matrix* d_points);

  Radiance radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const;

 private:
  CanonicalConfig config_;
  PositionalEncoding position_encoding_;
  PositionalEncoding direction_encoding_;
  Mlp<Scalar> trunk_;
  Mlp<Scalar> color_;
};

extern template class DeformationField<float>;
extern template class DeformationField<double>;
extern template class CanonicalField<float>;
extern template class CanonicalField<double>;

}  // namespace tissuefield
