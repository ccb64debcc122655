#pragma once

// Loss terms and their weighted total. Every term is a mean over the
// contributing batch elements and can write its gradient with respect to
// the predicted quantities into a caller-provided span.
//
// Pixel batches are patch-structured: ``PatchGrid{patches, size}`` describes
// ``patches`` square blocks of ``size x size`` pixels stored patch-major, row-major
// inside each patch. Colors are flattened as 3 values per pixel.

#include <Eigen/Core>

#include <span>

#include "tissuefield/fields.hpp"

namespace tissuefield {

struct LossWeights {
  double depth = 1.0;
  double jacobian = 1e-6;
  double gradient = 1.0;
  double smooth = 1e-2;
  double tv = 1e-4;

  void validate() const;
};

struct LossReport {
  double l_color = 0.0;
  double l_depth = 0.0;
  double l_jac = 0.0;
  double l_grad = 0.0;
  double l_smooth = 0.0;
  double l_tv = 0.0;
  double total = 0.0;
};

struct PatchGrid {
  int patches = 0;
  int size = 0;

  int pixels() const { return patches * size * size; }
  int index(int patch, int row, int col) const { return (patch * size + row) * size + col; }
};

/// Mean over unmasked pixels of |pred - gt|^2.
double loss_color(std::span<const double> pred, std::span<const double> gt,
                  std::span<const double> mask, std::span<double> grad = {});

/// Mean Huber penalty over unmasked pixels.
double loss_depth(std::span<const double> pred, std::span<const double> gt,
                  std::span<const double> mask, double huber_delta, std::span<double> grad = {});

/// Geman-McClure rho(r, c) = 2 (r/c)^2 / ((r/c)^2 + 4).
double geman_mcclure(double r, double c);

/// Mean of rho(|log singular values of J|, c).
double loss_jacobian(std::span<const Eigen::Matrix3d> jacobians, double c,
                     std::span<Eigen::Matrix3d> grad = {});

/// Mean |d/dx (pred - gt)| plus mean |d/dy (pred - gt)|, forward differences
/// inside each patch; differences touching a masked pixel are dropped.
double loss_grad(std::span<const double> pred, std::span<const double> gt,
                 std::span<const double> mask, const PatchGrid& grid, std::span<double> grad = {});

/// Mean of exp(-|lap C|) (|D_xx| + |D_xy| + |D_yy|) over pixels where all three
/// stencils fit inside the patch and avoid masked pixels.
double loss_smooth(std::span<const double> pred, std::span<const double> color_laplacian,
                   std::span<const double> mask, const PatchGrid& grid,
                   std::span<double> grad = {});

struct TvGradients {
  Eigen::Matrix3Xd d_current;
  Eigen::Matrix3Xd d_previous;
  Eigen::Matrix3Xd d_next;
};

/// (sum |x_t - x_{t-dt}|^2 + sum |x_t - x_{t+dt}|^2) / N; either neighbor
/// may be absent at the ends of the time range.
double loss_tv_points(const Eigen::Matrix3Xd& current, const Eigen::Matrix3Xd* previous,
                      const Eigen::Matrix3Xd* next, TvGradients* grad = nullptr);

/// Temporal TV of a deformation over probe points at time t.
double loss_tv(const Deformation& deformation, const Eigen::Matrix3Xd& probes, double t, double dt);

/// Fills ``total``; throws NonFiniteLoss naming the first non-finite term.
LossReport total_loss(LossReport terms, const LossWeights& weights);

}  // namespace tissuefield
