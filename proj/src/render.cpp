#include "tissuefield/render.hpp"

#include <algorithm>
#include <cmath>

#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace {

void check_sorted(std::span<const double> s) {
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s[k] > s[k - 1])) throw InvalidArgument("s_values must be strictly increasing");
  }
}

double interval(std::span<const double> s, std::size_t k, double far) {
  return k + 1 < s.size() ? s[k + 1] - s[k] : std::max(far - s[k], 0.0);
}

// Per-ray forward on raw arrays; shared by the reference and batched paths.
struct RayAccumulator {
  double color[3] = {0.0, 0.0, 0.0};
  double depth_sum = 0.0;
  double acc = 0.0;
};

template <typename ColorFn, typename DensityFn, typename SFn, typename WeightOut>
RayAccumulator accumulate(int n, ColorFn color, DensityFn density, SFn s, double far,
                          WeightOut write_weight) {
  RayAccumulator out;
  double transmittance = 1.0;
  for (int k = 0; k < n; ++k) {
    const double delta = k + 1 < n ? s(k + 1) - s(k) : std::max(far - s(k), 0.0);
    const double alpha = -std::expm1(-density(k) * delta);
    const double w = transmittance * alpha;
    write_weight(k, w, transmittance);
    for (int c = 0; c < 3; ++c) out.color[c] += w * color(k, c);
    out.depth_sum += w * s(k);
    out.acc += w;
    transmittance *= 1.0 - alpha;
  }
  return out;
}

}  // namespace

RadianceOutput composite(std::span<const Eigen::Vector3d> colors, std::span<const double> densities,
                         std::span<const double> s_values, double far) {
  if (colors.size() != densities.size() || colors.size() != s_values.size()) {
    throw InvalidArgument("composite inputs must have equal length");
  }
  check_sorted(s_values);
  const int n = static_cast<int>(s_values.size());
  RadianceOutput out;
  out.weights.resize(n);
  out.transmittance.resize(n);
  const RayAccumulator acc = accumulate(
      n, [&](int k, int c) { return colors[k][c]; }, [&](int k) { return densities[k]; },
      [&](int k) { return s_values[k]; }, far,
      [&](int k, double w, double t) {
        out.weights[k] = w;
        out.transmittance[k] = t;
      });
  out.color = Eigen::Vector3d(acc.color[0], acc.color[1], acc.color[2]);
  out.acc = acc.acc;
  out.depth = acc.depth_sum / std::max(acc.acc, kAccumulationFloor);
  return out;
}

CompositeGradients composite_backward(std::span<const Eigen::Vector3d> colors,
                                      std::span<const double> densities,
                                      std::span<const double> s_values, double far,
                                      const RadianceOutput& forward, const Eigen::Vector3d& d_color,
                                      double d_depth, double d_acc) {
  const std::size_t n = s_values.size();
  CompositeGradients g;
  g.d_colors.assign(n, Eigen::Vector3d::Zero());
  g.d_densities.assign(n, 0.0);
  g.d_s_values.assign(n, 0.0);
  const double acc = forward.acc;
  const double acc_floor = std::max(acc, kAccumulationFloor);

  std::vector<double> d_weight(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dd_dw =
        acc > kAccumulationFloor ? (s_values[k] - forward.depth) / acc : s_values[k] / acc_floor;
    d_weight[k] = d_color.dot(colors[k]) + d_depth * dd_dw + d_acc;
    g.d_colors[k] = forward.weights[k] * d_color;
    g.d_s_values[k] += d_depth * forward.weights[k] / acc_floor;
  }
  // d sigma_j = g_j T_{j+1} - sum_{k>j} g_k w_k
  double suffix = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    const double delta = interval(s_values, j, far);
    const double next_t = forward.transmittance[j] - forward.weights[j];
    const double d_sigma = d_weight[j] * next_t - suffix;
    suffix += d_weight[j] * forward.weights[j];
    g.d_densities[j] = d_sigma * delta;
    const double d_delta = d_sigma * densities[j];
    if (j + 1 < n) {
      g.d_s_values[j + 1] += d_delta;
      g.d_s_values[j] -= d_delta;
    } else if (far > s_values[j]) {
      g.d_s_values[j] -= d_delta;
    }
  }
  return g;
}

RenderedRay render_ray(const Ray& ray, std::span<const double> s_values,
                       const Deformation& deformation, const RadianceSource& canonical, double far) {
  check_sorted(s_values);
  const std::size_t n = s_values.size();
  std::vector<Eigen::Vector3d> colors(n);
  std::vector<double> densities(n);
  RenderedRay out;
  out.warped.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d x = ray.at(s_values[k]);
    out.warped[k] = deformation.warp(x, ray.time);
    const Radiance r = canonical.radiance(out.warped[k], ray.direction);
    colors[k] = r.color;
    densities[k] = r.density;
  }
  out.output = composite(colors, densities, s_values, far);
  return out;
}

template <typename Scalar>
void composite_batch(const MatrixX<Scalar>& radiance, const MatrixX<Scalar>& s_values, double far,
                     RayOutputs<Scalar>* out) {
  const int k_samples = static_cast<int>(s_values.rows());
  const int rays = static_cast<int>(s_values.cols());
  if (radiance.rows() != 4 || radiance.cols() != static_cast<Eigen::Index>(k_samples) * rays) {
    throw InvalidArgument("radiance must be 4 x (rays * samples)");
  }
  out->color.resize(3, rays);
  out->depth.resize(1, rays);
  out->acc.resize(1, rays);
  out->weights.resize(k_samples, rays);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rays; ++r) {
    const Eigen::Index base = static_cast<Eigen::Index>(r) * k_samples;
    const RayAccumulator acc = accumulate(
        k_samples, [&](int k, int c) { return static_cast<double>(radiance(c, base + k)); },
        [&](int k) { return static_cast<double>(radiance(3, base + k)); },
        [&](int k) { return static_cast<double>(s_values(k, r)); }, far,
        [&](int k, double w, double) { out->weights(k, r) = static_cast<Scalar>(w); });
    for (int c = 0; c < 3; ++c) out->color(c, r) = static_cast<Scalar>(acc.color[c]);
    out->acc(0, r) = static_cast<Scalar>(acc.acc);
    out->depth(0, r) = static_cast<Scalar>(acc.depth_sum / std::max(acc.acc, kAccumulationFloor));
  }
}

template <typename Scalar>
MatrixX<Scalar> composite_batch_backward(const MatrixX<Scalar>& radiance,
                                         const MatrixX<Scalar>& s_values, double far,
                                         const RayOutputs<Scalar>& forward,
                                         const MatrixX<Scalar>& d_color,
                                         const MatrixX<Scalar>& d_depth) {
  const int k_samples = static_cast<int>(s_values.rows());
  const int rays = static_cast<int>(s_values.cols());
  MatrixX<Scalar> d_radiance(4, radiance.cols());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rays; ++r) {
    const Eigen::Index base = static_cast<Eigen::Index>(r) * k_samples;
    const double acc = static_cast<double>(forward.acc(0, r));
    const double depth = static_cast<double>(forward.depth(0, r));
    const double acc_floor = std::max(acc, kAccumulationFloor);
    const double dc[3] = {static_cast<double>(d_color(0, r)), static_cast<double>(d_color(1, r)),
                          static_cast<double>(d_color(2, r))};
    const double dd = static_cast<double>(d_depth(0, r));
    // Recompute transmittance in double rather than trusting narrowed weights.
    double transmittance = 1.0;
    double suffix_total = 0.0;
    std::vector<double> weight(k_samples), next_t(k_samples), g(k_samples), delta(k_samples);
    for (int k = 0; k < k_samples; ++k) {
      const double s = static_cast<double>(s_values(k, r));
      delta[k] = k + 1 < k_samples ? static_cast<double>(s_values(k + 1, r)) - s
                                   : std::max(far - s, 0.0);
      const double alpha = -std::expm1(-static_cast<double>(radiance(3, base + k)) * delta[k]);
      weight[k] = transmittance * alpha;
      transmittance *= 1.0 - alpha;
      next_t[k] = transmittance;
      const double dd_dw = acc > kAccumulationFloor ? (s - depth) / acc : s / acc_floor;
      g[k] = dc[0] * static_cast<double>(radiance(0, base + k)) +
             dc[1] * static_cast<double>(radiance(1, base + k)) +
             dc[2] * static_cast<double>(radiance(2, base + k)) + dd * dd_dw;
      for (int c = 0; c < 3; ++c) d_radiance(c, base + k) = static_cast<Scalar>(weight[k] * dc[c]);
    }
    for (int j = k_samples; j-- > 0;) {
      const double d_sigma = g[j] * next_t[j] - suffix_total;
      suffix_total += g[j] * weight[j];
      d_radiance(3, base + j) = static_cast<Scalar>(d_sigma * delta[j]);
    }
  }
  return d_radiance;
}

template void composite_batch<float>(const MatrixX<float>&, const MatrixX<float>&, double,
                                     RayOutputs<float>*);
template void composite_batch<double>(const MatrixX<double>&, const MatrixX<double>&, double,
                                      RayOutputs<double>*);
template MatrixX<float> composite_batch_backward<float>(const MatrixX<float>&, const MatrixX<float>&,
                                                        double, const RayOutputs<float>&,
                                                        const MatrixX<float>&, const MatrixX<float>&);
template MatrixX<double> composite_batch_backward<double>(const MatrixX<double>&,
                                                          const MatrixX<double>&, double,
                                                          const RayOutputs<double>&,
                                                          const MatrixX<double>&,
                                                          const MatrixX<double>&);

}  // namespace tissuefield
