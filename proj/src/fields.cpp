#include "tissuefield/fields.hpp"

#include <cmath>

#include "tissuefield/errors.hpp"
#include "tissuefield/sampling.hpp"

namespace tissuefield {

namespace {

template <typename Scalar>
Scalar softplus(Scalar x) {
  return x > Scalar(20) ? x : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

}  // namespace

Eigen::Vector3d ScrewDeformation::warp(const Eigen::Vector3d& x, double t) const {
  return se3::warp_point(x, schedule_(t), mode_);
}

Eigen::Matrix3d ScrewDeformation::jacobian(const Eigen::Vector3d&, double t) const {
  return se3::screw_to_transform(schedule_(t), mode_).rotation;
}

Eigen::Matrix3d warp_jacobian(const Eigen::Vector3d& x, double t, const Deformation& deformation) {
  if (!x.allFinite() || !std::isfinite(t)) throw InvalidArgument("non-finite warp input");
  return deformation.jacobian(x, t);
}

// ---------------------------------------------------------------------------
// DeformationField

template <typename Scalar>
DeformationField<Scalar>::DeformationField(const DeformationConfig& config, std::uint64_t seed)
    : config_(config),
      position_encoding_{config.position_frequencies, true},
      time_encoding_{config.time_frequencies, true} {
  MlpLayout layout;
  layout.inputs = position_encoding_.output_dim(3) + time_encoding_.output_dim(1);
  layout.width = config.width;
  layout.hidden_layers = config.hidden_layers;
  layout.outputs = 6;
  layout.skips = config.skips;
  network_ = Mlp<Scalar>(layout, MlpInit{seed, config.output_init_scale});
}

template <typename Scalar>
typename DeformationField<Scalar>::Matrix DeformationField<Scalar>::encode_inputs(const Matrix& points,
                                                                                 double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("deformation time must lie in [0, 1]");
  if (points.rows() != 3) throw InvalidArgument("points must be 3 x N");
  const int pos_dim = position_encoding_.output_dim(3);
  Matrix input(network_.layout().inputs, points.cols());
  encode_into<Scalar>(points, position_encoding_, input, 0);
  const Matrix time = Matrix::Constant(1, points.cols(), static_cast<Scalar>(t));
  encode_into<Scalar>(time, time_encoding_, input, pos_dim);
  return input;
}

template <typename Scalar>
typename DeformationField<Scalar>::Matrix DeformationField<Scalar>::forward(const Matrix& points,
                                                                           double t,
                                                                           Cache* cache) const {
  Matrix input = encode_inputs(points, t);
  if (!cache) return network_.forward(input, nullptr);
  cache->points = points;
  return network_.forward(input, &cache->mlp);
}

template <typename Scalar>
void DeformationField<Scalar>::backward(const Cache& cache, const Matrix& d_screws) {
  network_.backward(cache.mlp, d_screws, nullptr);
}

template <typename Scalar>
typename DeformationField<Scalar>::Matrix DeformationField<Scalar>::screw_tangents(
    const Cache& cache, TangentCache* tangent_cache) const {
  const Eigen::Index n = cache.points.cols();
  Matrix tangents = Matrix::Zero(network_.layout().inputs, 3 * n);
  encode_tangents_into<Scalar>(cache.points, position_encoding_, tangents, 0);
  return network_.tangent_forward(cache.mlp, tangents, 3, tangent_cache);
}

template <typename Scalar>
void DeformationField<Scalar>::tangent_backward(const Cache& cache, const TangentCache& tangent_cache,
                                                const Matrix& d_tangents) {
  network_.tangent_backward(cache.mlp, tangent_cache, d_tangents);
}

template <typename Scalar>
se3::ScrewAxis DeformationField<Scalar>::deform(const Eigen::Vector3d& x, double t) const {
  const Matrix points = x.cast<Scalar>();
  const Matrix s = forward(points, t, nullptr);
  se3::ScrewAxis screw;
  for (int i = 0; i < 3; ++i) {
    screw.a[i] = static_cast<double>(s(i, 0));
    screw.b[i] = static_cast<double>(s(3 + i, 0));
  }
  return screw;
}

// ---------------------------------------------------------------------------
// CanonicalField

template <typename Scalar>
CanonicalField<Scalar>::CanonicalField(const CanonicalConfig& config, std::uint64_t seed)
    : config_(config),
      position_encoding_{config.position_frequencies, true},
      direction_encoding_{config.direction_frequencies, true} {
  MlpLayout trunk;
  trunk.inputs = position_encoding_.output_dim(3);
  trunk.width = config.width;
  trunk.hidden_layers = config.hidden_layers;
  trunk.outputs = 1 + config.width;
  trunk.skips = config.skips;
  trunk_ = Mlp<Scalar>(trunk, MlpInit{derive_seed(seed, 1), 0.0});

  MlpLayout color;
  color.inputs = config.width + direction_encoding_.output_dim(3);
  color.width = config.color_width;
  color.hidden_layers = 1;
  color.outputs = 3;
  color_ = Mlp<Scalar>(color, MlpInit{derive_seed(seed, 2), 0.0});
}

template <typename Scalar>
typename CanonicalField<Scalar>::Matrix CanonicalField<Scalar>::forward(const Matrix& points,
                                                                       const Matrix& directions,
                                                                       Cache* cache) const {
  if (points.rows() != 3 || directions.rows() != 3 || points.cols() != directions.cols()) {
    throw InvalidArgument("points and directions must both be 3 x N");
  }
  const Eigen::Index n = points.cols();
  Matrix encoded(trunk_.layout().inputs, n);
  encode_into<Scalar>(points, position_encoding_, encoded, 0);
  Matrix trunk_out = trunk_.forward(encoded, cache ? &cache->trunk : nullptr);

  Matrix color_in(color_.layout().inputs, n);
  color_in.topRows(config_.width) = trunk_out.bottomRows(config_.width);
  encode_into<Scalar>(directions, direction_encoding_, color_in, config_.width);
  const Matrix raw_rgb = color_.forward(color_in, cache ? &cache->color : nullptr);

  Matrix out(4, n);
  out.topRows(3) = raw_rgb.unaryExpr([](Scalar v) { return sigmoid(v); });
  out.row(3) = trunk_out.row(0).unaryExpr([](Scalar v) { return softplus(v); });
  if (cache) {
    cache->points = points;
    cache->trunk_output.swap(trunk_out);
    cache->rgb = out.topRows(3);
  }
  return out;
}

template <typename Scalar>
void CanonicalField<Scalar>::backward(const Cache& cache, const Matrix& d_output, Matrix* d_points) {
  const Eigen::Index n = d_output.cols();
  const Matrix d_raw_rgb =
      (d_output.topRows(3).array() * cache.rgb.array() * (Scalar(1) - cache.rgb.array())).matrix();
  Matrix d_color_in;
  color_.backward(cache.color, d_raw_rgb, &d_color_in);

  Matrix d_trunk(trunk_.layout().outputs, n);
  d_trunk.row(0) =
      (d_output.row(3).array() *
       cache.trunk_output.row(0).unaryExpr([](Scalar v) { return sigmoid(v); }).array())
          .matrix();
  d_trunk.bottomRows(config_.width) = d_color_in.topRows(config_.width);

  if (!d_points) {
    trunk_.backward(cache.trunk, d_trunk, nullptr);
    return;
  }
  Matrix d_encoded;
  trunk_.backward(cache.trunk, d_trunk, &d_encoded);
  *d_points = encode_backward<Scalar>(cache.points, position_encoding_, d_encoded, 0);
}

template <typename Scalar>
Radiance CanonicalField<Scalar>::radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const {
  const Matrix out = forward(Matrix(x.cast<Scalar>()), Matrix(d.cast<Scalar>()), nullptr);
  Radiance r;
  for (int i = 0; i < 3; ++i) r.color[i] = static_cast<double>(out(i, 0));
  r.density = static_cast<double>(out(3, 0));
  return r;
}

template class DeformationField<float>;
template class DeformationField<double>;
template class CanonicalField<float>;
template class CanonicalField<double>;

}  // namespace tissuefield
