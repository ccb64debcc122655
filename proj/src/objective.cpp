#include "tissuefield/objective.hpp"

#include <Eigen/SVD>

#include <cmath>

#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace {

constexpr double kSingularFloor = 1e-12;

bool unmasked(std::span<const double> mask, int i) { return mask[i] >= 0.5; }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_shapes(std::size_t pred, std::size_t gt, std::size_t mask, int per_pixel) {
  if (pred != gt || pred != mask * per_pixel) throw InvalidArgument("loss inputs have mismatched shapes");
}

void check_grid(const PatchGrid& grid, std::size_t pixels, int min_size) {
  if (grid.size < min_size) {
    throw InvalidArgument("patch of size " + std::to_string(grid.size) + " is smaller than the " +
                          std::to_string(min_size) + "-pixel stencil");
  }
  if (static_cast<std::size_t>(grid.pixels()) != pixels) {
    throw InvalidArgument("patch grid does not match the pixel count");
  }
}

void zero(std::span<double> grad) {
  for (double& g : grad) g = 0.0;
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {depth, jacobian, gradient, smooth, tv}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
}

double loss_color(std::span<const double> pred, std::span<const double> gt,
                  std::span<const double> mask, std::span<double> grad) {
  check_shapes(pred.size(), gt.size(), mask.size(), 3);
  zero(grad);
  int count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!unmasked(mask, static_cast<int>(i))) continue;
    ++count;
    for (int c = 0; c < 3; ++c) {
      const double e = pred[3 * i + c] - gt[3 * i + c];
      sum += e * e;
    }
  }
  if (count == 0) throw UndefinedBatch("color loss over an empty set of unmasked pixels");
  if (!grad.empty()) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!unmasked(mask, static_cast<int>(i))) continue;
      for (int c = 0; c < 3; ++c) grad[3 * i + c] = 2.0 * (pred[3 * i + c] - gt[3 * i + c]) / count;
    }
  }
  return sum / count;
}

double loss_depth(std::span<const double> pred, std::span<const double> gt,
                  std::span<const double> mask, double huber_delta, std::span<double> grad) {
  check_shapes(pred.size(), gt.size(), mask.size(), 1);
  if (!(huber_delta > 0.0)) throw InvalidArgument("Huber delta must be positive");
  zero(grad);
  int count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!unmasked(mask, static_cast<int>(i))) continue;
    ++count;
    const double e = pred[i] - gt[i];
    const double a = std::abs(e);
    sum += a <= huber_delta ? 0.5 * e * e : huber_delta * (a - 0.5 * huber_delta);
  }
  if (count == 0) throw UndefinedBatch("depth loss over an empty set of unmasked pixels");
  if (!grad.empty()) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!unmasked(mask, static_cast<int>(i))) continue;
      const double e = pred[i] - gt[i];
      grad[i] = (std::abs(e) <= huber_delta ? e : huber_delta * sign(e)) / count;
    }
  }
  return sum / count;
}

double geman_mcclure(double r, double c) {
  const double q = (r / c) * (r / c);
  return 2.0 * q / (q + 4.0);
}

double loss_jacobian(std::span<const Eigen::Matrix3d> jacobians, double c,
                     std::span<Eigen::Matrix3d> grad) {
  if (!(c > 0.0)) throw InvalidArgument("robust scale must be positive");
  if (jacobians.empty()) throw UndefinedBatch("Jacobian loss over an empty batch");
  const double n = static_cast<double>(jacobians.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < jacobians.size(); ++i) {
    const Eigen::Matrix3d& j = jacobians[i];
    if (!j.allFinite()) throw InvalidArgument("non-finite Jacobian");
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sigma = svd.singularValues();
    Eigen::Vector3d log_sigma;
    for (int k = 0; k < 3; ++k) log_sigma[k] = std::log(std::max(sigma[k], kSingularFloor));
    const double r = log_sigma.norm();
    const double q = (r / c) * (r / c);
    sum += 2.0 * q / (q + 4.0);
    if (!grad.empty()) {
      // d rho / d sigma_k = 16 log(sigma_k) / (c^2 (q + 4)^2 sigma_k), finite at r = 0.
      const double scale = 16.0 / (c * c * (q + 4.0) * (q + 4.0)) / n;
      Eigen::Vector3d d_sigma;
      for (int k = 0; k < 3; ++k) {
        d_sigma[k] = sigma[k] > kSingularFloor ? scale * log_sigma[k] / sigma[k] : 0.0;
      }
      grad[i] = svd.matrixU() * d_sigma.asDiagonal() * svd.matrixV().transpose();
    }
  }
  return sum / n;
}

double loss_grad(std::span<const double> pred, std::span<const double> gt,
                 std::span<const double> mask, const PatchGrid& grid, std::span<double> grad) {
  check_shapes(pred.size(), gt.size(), mask.size(), 1);
  check_grid(grid, mask.size(), 2);
  zero(grad);
  const int p = grid.size;
  double sum_x = 0.0, sum_y = 0.0;
  int count_x = 0, count_y = 0;
  auto error = [&](int i) { return pred[i] - gt[i]; };
  for (int pass = 0; pass < 2; ++pass) {
    // Second pass writes gradients once the counts are known.
    for (int q = 0; q < grid.patches; ++q) {
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
          const int i = grid.index(q, r, c);
          if (c + 1 < p) {
            const int j = grid.index(q, r, c + 1);
            if (unmasked(mask, i) && unmasked(mask, j)) {
              const double d = error(j) - error(i);
              if (pass == 0) {
                sum_x += std::abs(d);
                ++count_x;
              } else if (!grad.empty()) {
                grad[j] += sign(d) / count_x;
                grad[i] -= sign(d) / count_x;
              }
            }
          }
          if (r + 1 < p) {
            const int j = grid.index(q, r + 1, c);
            if (unmasked(mask, i) && unmasked(mask, j)) {
              const double d = error(j) - error(i);
              if (pass == 0) {
                sum_y += std::abs(d);
                ++count_y;
              } else if (!grad.empty()) {
                grad[j] += sign(d) / count_y;
                grad[i] -= sign(d) / count_y;
              }
            }
          }
        }
      }
    }
    if (grad.empty()) break;
  }
  if (count_x == 0 && count_y == 0) throw UndefinedBatch("gradient loss has no valid differences");
  return (count_x ? sum_x / count_x : 0.0) + (count_y ? sum_y / count_y : 0.0);
}

double loss_smooth(std::span<const double> pred, std::span<const double> color_laplacian,
                   std::span<const double> mask, const PatchGrid& grid, std::span<double> grad) {
  check_shapes(pred.size(), color_laplacian.size(), mask.size(), 1);
  check_grid(grid, mask.size(), 3);
  zero(grad);
  const int p = grid.size;
  struct Stencil {
    int center, left, right, up, down, right_down;
  };
  auto stencil_at = [&](int q, int r, int c) {
    return Stencil{grid.index(q, r, c),     grid.index(q, r, c - 1),    grid.index(q, r, c + 1),
                   grid.index(q, r - 1, c), grid.index(q, r + 1, c), grid.index(q, r + 1, c + 1)};
  };
  auto valid = [&](const Stencil& s) {
    return unmasked(mask, s.center) && unmasked(mask, s.left) && unmasked(mask, s.right) &&
           unmasked(mask, s.up) && unmasked(mask, s.down) && unmasked(mask, s.right_down);
  };
  int count = 0;
  for (int q = 0; q < grid.patches; ++q) {
    for (int r = 1; r + 1 < p; ++r) {
      for (int c = 1; c + 1 < p; ++c) count += valid(stencil_at(q, r, c)) ? 1 : 0;
    }
  }
  if (count == 0) throw UndefinedBatch("smoothness loss has no valid stencils");
  double sum = 0.0;
  for (int q = 0; q < grid.patches; ++q) {
    for (int r = 1; r + 1 < p; ++r) {
      for (int c = 1; c + 1 < p; ++c) {
        const Stencil s = stencil_at(q, r, c);
        if (!valid(s)) continue;
        const double w = std::exp(-std::abs(color_laplacian[s.center]));
        const double dxx = pred[s.right] - 2.0 * pred[s.center] + pred[s.left];
        const double dyy = pred[s.down] - 2.0 * pred[s.center] + pred[s.up];
        const double dxy = pred[s.right_down] - pred[s.down] - pred[s.right] + pred[s.center];
        sum += w * (std::abs(dxx) + std::abs(dxy) + std::abs(dyy));
        if (!grad.empty()) {
          const double g = w / count;
          const double sxx = sign(dxx) * g, syy = sign(dyy) * g, sxy = sign(dxy) * g;
          grad[s.right] += sxx - sxy;
          grad[s.left] += sxx;
          grad[s.center] += -2.0 * sxx - 2.0 * syy + sxy;
          grad[s.down] += syy - sxy;
          grad[s.up] += syy;
          grad[s.right_down] += sxy;
        }
      }
    }
  }
  return sum / count;
}

double loss_tv_points(const Eigen::Matrix3Xd& current, const Eigen::Matrix3Xd* previous,
                      const Eigen::Matrix3Xd* next, TvGradients* grad) {
  const Eigen::Index n = current.cols();
  if (n == 0) throw UndefinedBatch("TV loss over an empty probe set");
  if ((previous && previous->cols() != n) || (next && next->cols() != n)) {
    throw InvalidArgument("TV neighbor sets must match the probe count");
  }
  double sum = 0.0;
  if (grad) {
    grad->d_current = Eigen::Matrix3Xd::Zero(3, n);
    grad->d_previous.resize(3, 0);
    grad->d_next.resize(3, 0);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (const Eigen::Matrix3Xd* other : {previous, next}) {
    if (!other) continue;
    const Eigen::Matrix3Xd diff = current - *other;
    sum += diff.squaredNorm();
    if (grad) {
      grad->d_current += 2.0 * inv_n * diff;
      (other == previous ? grad->d_previous : grad->d_next) = -2.0 * inv_n * diff;
    }
  }
  return sum * inv_n;
}

double loss_tv(const Deformation& deformation, const Eigen::Matrix3Xd& probes, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("TV time step must be positive");
  const Eigen::Index n = probes.cols();
  Eigen::Matrix3Xd current(3, n), previous(3, n), next(3, n);
  const bool has_previous = t - dt >= -1e-12;
  const bool has_next = t + dt <= 1.0 + 1e-12;
  for (Eigen::Index i = 0; i < n; ++i) {
    current.col(i) = deformation.warp(probes.col(i), t);
    if (has_previous) previous.col(i) = deformation.warp(probes.col(i), std::max(t - dt, 0.0));
    if (has_next) next.col(i) = deformation.warp(probes.col(i), std::min(t + dt, 1.0));
  }
  return loss_tv_points(current, has_previous ? &previous : nullptr, has_next ? &next : nullptr);
}

LossReport total_loss(LossReport terms, const LossWeights& weights) {
  const std::pair<const char*, double> named[] = {
      {"l_color", terms.l_color}, {"l_depth", terms.l_depth},   {"l_jac", terms.l_jac},
      {"l_grad", terms.l_grad},   {"l_smooth", terms.l_smooth}, {"l_tv", terms.l_tv}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) throw NonFiniteLoss(name);
  }
  terms.total = terms.l_color + weights.depth * terms.l_depth + weights.jacobian * terms.l_jac +
                weights.gradient * terms.l_grad + weights.smooth * terms.l_smooth +
                weights.tv * terms.l_tv;
  if (!std::isfinite(terms.total)) throw NonFiniteLoss("total");
  return terms;
}

}  // namespace tissuefield
