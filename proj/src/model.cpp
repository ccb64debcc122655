#include "tissuefield/model.hpp"

#include <algorithm>

#include "tissuefield/errors.hpp"
#include "tissuefield/sampling.hpp"

namespace tissuefield {

namespace {

constexpr double kTimeSlack = 1e-12;

template <typename Scalar>
Eigen::Matrix<double, 6, 1> screw_column(const MatrixX<Scalar>& screws, Eigen::Index n) {
  return screws.col(n).template cast<double>();
}

template <typename Scalar>
Eigen::Matrix<double, 3, 6> warp_derivative(const MatrixX<Scalar>& packed, Eigen::Index n) {
  Eigen::Matrix<double, 3, 6> d;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 6; ++j) d(i, j) = static_cast<double>(packed(i * 6 + j, n));
  }
  return d;
}

template <typename Scalar>
Eigen::Matrix<double, 6, 3> sensitivity(const MatrixX<Scalar>& tangents, Eigen::Index n,
                                        Eigen::Index count) {
  Eigen::Matrix<double, 6, 3> s;
  for (int j = 0; j < 3; ++j) s.col(j) = tangents.col(j * count + n).template cast<double>();
  return s;
}

template <typename Scalar>
MatrixX<Scalar> select_columns(const MatrixX<Scalar>& m, const std::vector<Eigen::Index>& columns) {
  MatrixX<Scalar> out(m.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(columns[j]);
  return out;
}

}  // namespace

template <typename Scalar>
SceneModel<Scalar>::SceneModel(const ModelConfig& config, const SceneBox& box, std::uint64_t seed)
    : config_(config),
      box_(box),
      deformation_(config.deformation, derive_seed(seed, 11)),
      canonical_(config.canonical, derive_seed(seed, 12)) {}

template <typename Scalar>
std::vector<std::span<Scalar>> SceneModel<Scalar>::parameter_blocks() {
  return {deformation_.network().parameters(), canonical_.trunk().parameters(),
          canonical_.color_head().parameters()};
}

template <typename Scalar>
std::vector<std::span<const Scalar>> SceneModel<Scalar>::parameter_blocks() const {
  return {deformation_.network().parameters(), canonical_.trunk().parameters(),
          canonical_.color_head().parameters()};
}

template <typename Scalar>
std::vector<std::span<Scalar>> SceneModel<Scalar>::gradient_blocks() {
  return {deformation_.network().gradients(), canonical_.trunk().gradients(),
          canonical_.color_head().gradients()};
}

template <typename Scalar>
std::size_t SceneModel<Scalar>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& block : parameter_blocks()) total += block.size();
  return total;
}

template <typename Scalar>
void SceneModel<Scalar>::zero_grad() {
  deformation_.network().zero_grad();
  canonical_.trunk().zero_grad();
  canonical_.color_head().zero_grad();
}

template <typename Scalar>
void SceneModel<Scalar>::warp_pass(const Matrix& points, double t, bool derivatives, bool keep_cache,
                                   WarpPass<Scalar>* pass) const {
  pass->time = t;
  pass->screws = deformation_.forward(points, t, keep_cache ? &pass->cache : nullptr);
  const Eigen::Index n = points.cols();
  pass->warped.resize(3, n);
  if (derivatives) pass->d_warp_d_screw.resize(18, n);
  const auto mode = config_.translation_mode;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d x = points.col(i).template cast<double>();
    const Eigen::Matrix<double, 6, 1> s = screw_column(pass->screws, i);
    if (derivatives) {
      const auto w = se3::warp_with_screw_derivative(x, s, mode);
      pass->warped.col(i) = w.point.cast<Scalar>();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 6; ++c) pass->d_warp_d_screw(r * 6 + c, i) = static_cast<Scalar>(w.d_screw(r, c));
      }
    } else {
      const Eigen::Vector3d a = s.head<3>();
      const Eigen::Vector3d b = s.tail<3>();
      pass->warped.col(i) = se3::warp_point_unchecked<double>(x, a, b, mode).cast<Scalar>();
    }
  }
}

template <typename Scalar>
void SceneModel<Scalar>::forward(const RayBatch<Scalar>& batch, double far,
                                 const ForwardOptions& options, ForwardPass<Scalar>* pass) const {
  const int rays = batch.rays();
  const int samples = batch.samples();
  if (batch.origins.cols() != rays || batch.directions.cols() != rays) {
    throw InvalidArgument("ray batch arrays disagree on ray count");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rays) * samples;
  pass->rays = rays;
  pass->samples = samples;
  pass->far = far;
  pass->s_values = batch.s_values;
  pass->points.resize(3, n);
  pass->directions.resize(3, n);
  const Eigen::Vector3d center = box_.center;
  const double scale = box_.scale;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rays; ++r) {
    const Eigen::Vector3d o = batch.origins.col(r).template cast<double>();
    const Eigen::Vector3d d = batch.directions.col(r).template cast<double>();
    for (int k = 0; k < samples; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * samples + k;
      const double s = static_cast<double>(batch.s_values(k, r));
      pass->points.col(i) = ((o + s * d - center) * scale).cast<Scalar>();
      pass->directions.col(i) = batch.directions.col(r);
    }
  }

  warp_pass(pass->points, batch.time, options.keep_cache, options.keep_cache, &pass->current);
  pass->radiance = canonical_.forward(pass->current.warped, pass->directions,
                                      options.keep_cache ? &pass->canonical_cache : nullptr);
  composite_batch<Scalar>(pass->radiance, batch.s_values, far, &pass->outputs);

  if (options.probe_stride < 1) throw InvalidArgument("probe_stride must be >= 1");
  pass->probe_stride = options.probe_stride;
  pass->probes.clear();
  for (Eigen::Index i = 0; i < n; i += options.probe_stride) pass->probes.push_back(i);
  const Eigen::Index m = static_cast<Eigen::Index>(pass->probes.size());
  const bool regularized = options.jacobians || options.neighbor_dt > 0.0;
  if (regularized) {
    pass->probe_points = options.probe_stride == 1 ? pass->points : select_columns(pass->points, pass->probes);
  }
  if (options.jacobians && options.probe_stride > 1) {
    if (!options.keep_cache) throw InvalidArgument("Jacobians require the forward cache");
    pass->probe_cache.points = pass->probe_points;
    pass->probe_cache.mlp.layer_inputs.clear();
    for (const Matrix& layer : pass->current.cache.mlp.layer_inputs) {
      pass->probe_cache.mlp.layer_inputs.push_back(select_columns(layer, pass->probes));
    }
  }

  pass->has_jacobians = false;
  if (options.jacobians) {
    if (!options.keep_cache) throw InvalidArgument("Jacobians require the forward cache");
    pass->has_jacobians = true;
    pass->screw_tangents = deformation_.screw_tangents(pass->probe_deformation_cache(), &pass->tangent_cache);
    pass->jacobians.resize(m);
    const auto mode = config_.translation_mode;
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index i = pass->probes[j];
      pass->jacobians[j] = se3::warp_total_jacobian(pass->points.col(i).template cast<double>(),
                                                    screw_column(pass->current.screws, i),
                                                    sensitivity(pass->screw_tangents, j, m), mode);
    }
  }

  pass->has_previous = pass->has_next = false;
  if (options.neighbor_dt > 0.0) {
    const double t = batch.time;
    const double dt = options.neighbor_dt;
    if (t - dt >= -kTimeSlack) {
      pass->has_previous = true;
      warp_pass(pass->probe_points, std::max(t - dt, 0.0), true, options.keep_cache, &pass->previous);
    }
    if (t + dt <= 1.0 + kTimeSlack) {
      pass->has_next = true;
      warp_pass(pass->probe_points, std::min(t + dt, 1.0), true, options.keep_cache, &pass->next);
    }
  }
}

template <typename Scalar>
void SceneModel<Scalar>::backward(const ForwardPass<Scalar>& pass,
                                  const BackwardInputs<Scalar>& upstream) {
  const Eigen::Index n = pass.points.cols();
  const auto mode = config_.translation_mode;

  Matrix d_color = upstream.d_color.size() ? upstream.d_color : Matrix::Zero(3, pass.rays);
  Matrix d_depth = upstream.d_depth.size() ? upstream.d_depth : Matrix::Zero(1, pass.rays);
  const Matrix d_radiance = composite_batch_backward<Scalar>(pass.radiance, pass.s_values, pass.far,
                                                             pass.outputs, d_color, d_depth);
  Matrix d_warped;
  canonical_.backward(pass.canonical_cache, d_radiance, &d_warped);
  if (upstream.d_warped.size()) d_warped += upstream.d_warped;

  const bool jacobian_terms = pass.has_jacobians && !upstream.d_jacobians.empty();
  const Eigen::Index m = static_cast<Eigen::Index>(pass.probes.size());
  Matrix d_screws(6, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Matrix<double, 3, 6> dw = warp_derivative(pass.current.d_warp_d_screw, i);
    d_screws.col(i) = (dw.transpose() * d_warped.col(i).template cast<double>()).template cast<Scalar>();
  }
  Matrix d_tangents;
  if (jacobian_terms) {
    d_tangents.resize(6, 3 * m);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index i = pass.probes[j];
      const Eigen::Matrix<double, 3, 6> dw = warp_derivative(pass.current.d_warp_d_screw, i);
      const Eigen::Matrix3d& g = upstream.d_jacobians[j];
      const Eigen::Matrix<double, 6, 3> sens = sensitivity(pass.screw_tangents, j, m);
      for (int c = 0; c < 3; ++c) d_tangents.col(c * m + j) = (dw.transpose() * g.col(c)).cast<Scalar>();
      const Eigen::Matrix<double, 6, 1> ds = se3::warp_jacobian_screw_gradient(
          pass.points.col(i).template cast<double>(), screw_column(pass.current.screws, i), sens, g, mode);
      d_screws.col(i) += ds.cast<Scalar>();
    }
  }
  deformation_.backward(pass.current.cache, d_screws);
  if (jacobian_terms) {
    deformation_.tangent_backward(pass.probe_deformation_cache(), pass.tangent_cache, d_tangents);
  }

  auto neighbor = [&](const WarpPass<Scalar>& warp, const Matrix& d_w) {
    Matrix ds(6, m);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      ds.col(i) = (warp_derivative(warp.d_warp_d_screw, i).transpose() *
                   d_w.col(i).template cast<double>())
                      .template cast<Scalar>();
    }
    deformation_.backward(warp.cache, ds);
  };
  if (pass.has_previous && upstream.d_warped_previous.size()) neighbor(pass.previous, upstream.d_warped_previous);
  if (pass.has_next && upstream.d_warped_next.size()) neighbor(pass.next, upstream.d_warped_next);
}

template <typename Scalar>
RayOutputs<Scalar> SceneModel<Scalar>::render(const RayBatch<Scalar>& batch, double far,
                                              int chunk_rays) const {
  const int rays = batch.rays();
  const int samples = batch.samples();
  RayOutputs<Scalar> out;
  out.color.resize(3, rays);
  out.depth.resize(1, rays);
  out.acc.resize(1, rays);
  out.weights.resize(samples, rays);
  ForwardOptions options;
  options.keep_cache = false;
  for (int start = 0; start < rays; start += chunk_rays) {
    const int count = std::min(chunk_rays, rays - start);
    RayBatch<Scalar> chunk;
    chunk.origins = batch.origins.middleCols(start, count);
    chunk.directions = batch.directions.middleCols(start, count);
    chunk.s_values = batch.s_values.middleCols(start, count);
    chunk.time = batch.time;
    ForwardPass<Scalar> pass;
    forward(chunk, far, options, &pass);
    out.color.middleCols(start, count) = pass.outputs.color;
    out.depth.middleCols(start, count) = pass.outputs.depth;
    out.acc.middleCols(start, count) = pass.outputs.acc;
    out.weights.middleCols(start, count) = pass.outputs.weights;
  }
  return out;
}

template <typename Scalar>
typename SceneModel<Scalar>::Matrix SceneModel<Scalar>::warp_box(const Matrix& points, double t) const {
  WarpPass<Scalar> pass;
  warp_pass(points, t, false, false, &pass);
  return pass.warped;
}

template <typename Scalar>
Eigen::Vector3d ModelDeformation<Scalar>::warp(const Eigen::Vector3d& x, double t) const {
  const MatrixX<Scalar> p = model_->box().to_box(x).template cast<Scalar>();
  const MatrixX<Scalar> w = model_->warp_box(p, t);
  return model_->box().from_box(w.col(0).template cast<double>());
}

template <typename Scalar>
Eigen::Matrix3d ModelDeformation<Scalar>::jacobian(const Eigen::Vector3d& x, double t) const {
  // Conjugating by the isotropic box map leaves the Jacobian unchanged.
  const Eigen::Vector3d xb = model_->box().to_box(x);
  typename DeformationField<Scalar>::Cache cache;
  const MatrixX<Scalar> s =
      model_->deformation().forward(MatrixX<Scalar>(xb.cast<Scalar>()), t, &cache);
  const MatrixX<Scalar> tangents = model_->deformation().screw_tangents(cache, nullptr);
  return se3::warp_total_jacobian(xb, screw_column(s, 0), sensitivity(tangents, 0, 1),
                                  model_->config().translation_mode);
}

template <typename Scalar>
Radiance ModelRadiance<Scalar>::radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const {
  return model_->canonical().radiance(model_->box().to_box(x), d);
}

template class SceneModel<float>;
template class SceneModel<double>;
template class ModelDeformation<float>;
template class ModelDeformation<double>;
template class ModelRadiance<float>;
template class ModelRadiance<double>;

}  // namespace tissuefield
