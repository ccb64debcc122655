#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tissuefield/errors.hpp"
#include "tissuefield/objective.hpp"

namespace tissuefield {
namespace {

using testing::relative_error;
using Vec = std::vector<double>;

Vec random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return testing::uniform_vector(n, lo, hi, rng);
}

Vec random_mask(std::size_t n, std::mt19937_64& rng, double keep = 0.8) {
  std::bernoulli_distribution b(keep);
  Vec m(n);
  for (double& v : m) v = b(rng) ? 1.0 : 0.0;
  return m;
}

template <typename Loss>
void check_gradient(Loss loss, Vec x, const Vec& analytic, double h = 1e-6, double tol = 1e-4) {
  const Vec fd = testing::central_difference(loss, x, h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(relative_error(fd[i], analytic[i], 1e-6), tol) << "element " << i;
  }
}

TEST(LossColor, Examples) {
  const Vec gt{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const Vec mask{1, 1};
  EXPECT_EQ(loss_color(gt, gt, mask), 0.0);
  Vec pred = gt;
  pred[0] += 0.1;
  pred[3] += 0.1;
  EXPECT_NEAR(loss_color(pred, gt, mask), 0.01, 1e-15);
  EXPECT_THROW(loss_color(pred, gt, Vec{0, 0}), UndefinedBatch);
  EXPECT_THROW(loss_color(pred, gt, Vec{1}), InvalidArgument);
}

TEST(LossColor, NaiveOracleAndGradient) {
  std::mt19937_64 rng(1);
  const std::size_t n = 40;
  const Vec pred = random_vec(3 * n, rng, 0, 1), gt = random_vec(3 * n, rng, 0, 1), mask = random_mask(n, rng);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    ++count;
    for (int c = 0; c < 3; ++c) sum += std::pow(pred[3 * i + c] - gt[3 * i + c], 2);
  }
  Vec grad(3 * n);
  EXPECT_NEAR(loss_color(pred, gt, mask, grad), sum / count, 1e-9);
  check_gradient([&](const Vec& p) { return loss_color(p, gt, mask); }, pred, grad);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(grad[3 * i + c], 0.0);
    }
  }
}

TEST(LossDepth, Examples) {
  const double delta = 0.2;
  EXPECT_EQ(loss_depth(Vec{0.5}, Vec{0.5}, Vec{1}, delta), 0.0);
  EXPECT_NEAR(loss_depth(Vec{0.5 + delta}, Vec{0.5}, Vec{1}, delta), 0.5 * delta * delta, 1e-15);
  EXPECT_NEAR(loss_depth(Vec{0.5 + 2 * delta}, Vec{0.5}, Vec{1}, delta), 1.5 * delta * delta, 1e-15);
  EXPECT_THROW(loss_depth(Vec{0.5}, Vec{0.5}, Vec{1}, 0.0), InvalidArgument);
}

TEST(LossDepth, NaiveOracleAndGradient) {
  std::mt19937_64 rng(2);
  const std::size_t n = 60;
  const double delta = 0.2;
  const Vec pred = random_vec(n, rng), gt = random_vec(n, rng), mask = random_mask(n, rng);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    ++count;
    const double e = std::abs(pred[i] - gt[i]);
    sum += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
  }
  Vec grad(n);
  EXPECT_NEAR(loss_depth(pred, gt, mask, delta, grad), sum / count, 1e-9);
  check_gradient([&](const Vec& p) { return loss_depth(p, gt, mask, delta); }, pred, grad);
}

TEST(LossJacobian, Examples) {
  const std::vector<Eigen::Matrix3d> identity(5, Eigen::Matrix3d::Identity());
  EXPECT_EQ(loss_jacobian(identity, 0.03), 0.0);
  const std::vector<Eigen::Matrix3d> stretch{Eigen::Vector3d(std::numbers::e, 1, 1).asDiagonal()};
  EXPECT_NEAR(loss_jacobian(stretch, 1.0), 0.4, 1e-12);
  EXPECT_NEAR(geman_mcclure(1.0, 1.0), 0.4, 1e-15);
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 1) = NAN;
  EXPECT_THROW(loss_jacobian(std::vector<Eigen::Matrix3d>{bad}, 0.03), InvalidArgument);
  EXPECT_TRUE(std::isfinite(loss_jacobian(std::vector<Eigen::Matrix3d>{Eigen::Matrix3d::Zero()}, 0.03)));
}

TEST(LossJacobian, EigenOracleAndGradient) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  const double c = 0.3;
  std::vector<Eigen::Matrix3d> js(20);
  double oracle = 0.0;
  for (auto& j : js) {
    j = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 9; ++i) j.data()[i] += n(rng);
    const Eigen::Vector3d sv = testing::singular_values_by_eigen(j);
    const double r = sv.array().log().matrix().norm();
    oracle += 2 * std::pow(r / c, 2) / (std::pow(r / c, 2) + 4) / js.size();
  }
  std::vector<Eigen::Matrix3d> grad(js.size());
  EXPECT_NEAR(loss_jacobian(js, c, grad), oracle, 1e-6);
  Vec flat(9 * js.size()), analytic(9 * js.size());
  for (std::size_t i = 0; i < js.size(); ++i) {
    for (int k = 0; k < 9; ++k) {
      flat[9 * i + k] = js[i].data()[k];
      analytic[9 * i + k] = grad[i].data()[k];
    }
  }
  auto loss = [&](const Vec& f) {
    std::vector<Eigen::Matrix3d> m(js.size());
    for (std::size_t i = 0; i < js.size(); ++i) {
      for (int k = 0; k < 9; ++k) m[i].data()[k] = f[9 * i + k];
    }
    return loss_jacobian(m, c);
  };
  check_gradient(loss, flat, analytic);
}

double naive_grad_loss(const Vec& pred, const Vec& gt, const Vec& mask, const PatchGrid& g) {
  double sx = 0, sy = 0;
  int nx = 0, ny = 0;
  for (int q = 0; q < g.patches; ++q) {
    for (int r = 0; r < g.size; ++r) {
      for (int c = 0; c < g.size; ++c) {
        const int i = g.index(q, r, c);
        if (c + 1 < g.size && mask[i] && mask[g.index(q, r, c + 1)]) {
          const int j = g.index(q, r, c + 1);
          sx += std::abs((pred[j] - gt[j]) - (pred[i] - gt[i]));
          ++nx;
        }
        if (r + 1 < g.size && mask[i] && mask[g.index(q, r + 1, c)]) {
          const int j = g.index(q, r + 1, c);
          sy += std::abs((pred[j] - gt[j]) - (pred[i] - gt[i]));
          ++ny;
        }
      }
    }
  }
  return (nx ? sx / nx : 0.0) + (ny ? sy / ny : 0.0);
}

TEST(LossGrad, Examples) {
  const PatchGrid g{2, 4};
  Vec gt(g.pixels()), pred(g.pixels()), mask(g.pixels(), 1.0);
  std::mt19937_64 rng(4);
  gt = random_vec(g.pixels(), rng);
  for (int i = 0; i < g.pixels(); ++i) pred[i] = gt[i] + 0.37;
  EXPECT_NEAR(loss_grad(pred, gt, mask, g), 0.0, 1e-15);
  for (int q = 0; q < g.patches; ++q) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) pred[g.index(q, r, c)] = gt[g.index(q, r, c)] + c;
    }
  }
  EXPECT_NEAR(loss_grad(pred, gt, mask, g), 1.0, 1e-12);
  EXPECT_THROW(loss_grad(Vec{1}, Vec{1}, Vec{1}, PatchGrid{1, 1}), InvalidArgument);
}

TEST(LossGrad, NaiveOracleAndGradient) {
  std::mt19937_64 rng(5);
  const PatchGrid g{3, 4};
  const Vec pred = random_vec(g.pixels(), rng), gt = random_vec(g.pixels(), rng), mask = random_mask(g.pixels(), rng);
  Vec grad(g.pixels());
  EXPECT_NEAR(loss_grad(pred, gt, mask, g, grad), naive_grad_loss(pred, gt, mask, g), 1e-9);
  check_gradient([&](const Vec& p) { return loss_grad(p, gt, mask, g); }, pred, grad);
  for (int i = 0; i < g.pixels(); ++i) {
    if (mask[i] == 0.0) {
      EXPECT_EQ(grad[i], 0.0);
    }
  }
}

double naive_smooth_loss(const Vec& d, const Vec& lap, const Vec& mask, const PatchGrid& g) {
  double sum = 0;
  int count = 0;
  for (int q = 0; q < g.patches; ++q) {
    for (int r = 1; r + 1 < g.size; ++r) {
      for (int c = 1; c + 1 < g.size; ++c) {
        auto at = [&](int rr, int cc) { return g.index(q, rr, cc); };
        if (!(mask[at(r, c)] && mask[at(r, c - 1)] && mask[at(r, c + 1)] && mask[at(r - 1, c)] &&
              mask[at(r + 1, c)] && mask[at(r + 1, c + 1)])) {
          continue;
        }
        const double xx = d[at(r, c + 1)] - 2 * d[at(r, c)] + d[at(r, c - 1)];
        const double yy = d[at(r + 1, c)] - 2 * d[at(r, c)] + d[at(r - 1, c)];
        const double xy = d[at(r + 1, c + 1)] - d[at(r + 1, c)] - d[at(r, c + 1)] + d[at(r, c)];
        sum += std::exp(-std::abs(lap[at(r, c)])) * (std::abs(xx) + std::abs(xy) + std::abs(yy));
        ++count;
      }
    }
  }
  return sum / count;
}

TEST(LossSmooth, Examples) {
  const PatchGrid g{2, 5};
  Vec d(g.pixels()), lap(g.pixels(), 0.0), mask(g.pixels(), 1.0);
  for (int q = 0; q < 2; ++q) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) d[g.index(q, r, c)] = 0.3 * r - 0.7 * c + q;
    }
  }
  std::mt19937_64 rng(6);
  EXPECT_NEAR(loss_smooth(d, random_vec(g.pixels(), rng), mask, g), 0.0, 1e-14);
  for (int q = 0; q < 2; ++q) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) d[g.index(q, r, c)] = double(c * c);
    }
  }
  EXPECT_NEAR(loss_smooth(d, lap, mask, g), 2.0, 1e-12);
  EXPECT_THROW(loss_smooth(Vec(4), Vec(4), Vec(4, 1.0), PatchGrid{1, 2}), InvalidArgument);
}

TEST(LossSmooth, NaiveOracleAndGradient) {
  std::mt19937_64 rng(7);
  const PatchGrid g{3, 5};
  const Vec d = random_vec(g.pixels(), rng), lap = random_vec(g.pixels(), rng, -3, 3);
  const Vec mask = random_mask(g.pixels(), rng, 0.9);
  Vec grad(g.pixels());
  EXPECT_NEAR(loss_smooth(d, lap, mask, g, grad), naive_smooth_loss(d, lap, mask, g), 1e-9);
  check_gradient([&](const Vec& p) { return loss_smooth(p, lap, mask, g); }, d, grad);
  for (int i = 0; i < g.pixels(); ++i) {
    if (mask[i] == 0.0) {
      EXPECT_EQ(grad[i], 0.0);
    }
  }
}

TEST(LossTv, Examples) {
  Eigen::Matrix3Xd probes = Eigen::Matrix3Xd::Random(3, 50);
  const ScrewDeformation fixed(se3::ScrewAxis{Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(1, 0, 0)});
  EXPECT_EQ(loss_tv(fixed, probes, 0.5, 0.1), 0.0);
  const FunctionDeformation drift([](const Eigen::Vector3d& x, double t) { return Eigen::Vector3d(x + Eigen::Vector3d(t, 0, 0)); },
                                  [](const Eigen::Vector3d&, double) { return Eigen::Matrix3d::Identity(); });
  const double dt = 1.0 / 16.0;
  EXPECT_NEAR(loss_tv(drift, probes, 0.5, dt), 2 * dt * dt, 1e-12);
  // An end frame only has one neighbor.
  EXPECT_NEAR(loss_tv(drift, probes, 0.0, dt), dt * dt, 1e-12);
}

TEST(LossTv, NaiveOracleAndGradient) {
  std::mt19937_64 rng(8);
  const int n = 12;
  Eigen::Matrix3Xd cur = Eigen::Matrix3Xd::Random(3, n), prev = Eigen::Matrix3Xd::Random(3, n),
                   next = Eigen::Matrix3Xd::Random(3, n);
  double oracle = 0;
  for (int i = 0; i < n; ++i) oracle += ((cur.col(i) - prev.col(i)).squaredNorm() + (cur.col(i) - next.col(i)).squaredNorm()) / n;
  TvGradients g;
  EXPECT_NEAR(loss_tv_points(cur, &prev, &next, &g), oracle, 1e-9);
  Vec all(9 * n), analytic(9 * n);
  for (int i = 0; i < 3 * n; ++i) {
    all[i] = cur.data()[i];
    all[3 * n + i] = prev.data()[i];
    all[6 * n + i] = next.data()[i];
    analytic[i] = g.d_current.data()[i];
    analytic[3 * n + i] = g.d_previous.data()[i];
    analytic[6 * n + i] = g.d_next.data()[i];
  }
  auto loss = [&](const Vec& v) {
    Eigen::Matrix3Xd c = Eigen::Map<const Eigen::Matrix3Xd>(v.data(), 3, n);
    Eigen::Matrix3Xd p = Eigen::Map<const Eigen::Matrix3Xd>(v.data() + 3 * n, 3, n);
    Eigen::Matrix3Xd x = Eigen::Map<const Eigen::Matrix3Xd>(v.data() + 6 * n, 3, n);
    return loss_tv_points(c, &p, &x);
  };
  check_gradient(loss, all, analytic);
}

TEST(TotalLoss, Examples) {
  LossWeights w;
  EXPECT_EQ(total_loss({}, w).total, 0.0);
  LossReport r;
  r.l_color = 1.0;
  EXPECT_EQ(total_loss(r, w).total, 1.0);
  LossReport d;
  d.l_depth = 2.0;
  w.depth = 0.5;
  EXPECT_EQ(total_loss(d, w).total, 1.0);
}

TEST(TotalLoss, InvariantAndNonFiniteTerm) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 100; ++i) {
    LossReport r{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 0};
    LossWeights w{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const LossReport t = total_loss(r, w);
    EXPECT_NEAR(t.total, r.l_color + w.depth * r.l_depth + w.jacobian * r.l_jac + w.gradient * r.l_grad +
                             w.smooth * r.l_smooth + w.tv * r.l_tv, 1e-9);
  }
  LossReport bad;
  bad.l_smooth = NAN;
  try {
    total_loss(bad, LossWeights{});
    FAIL();
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.term(), "l_smooth");
  }
  EXPECT_THROW((LossWeights{-1, 0, 0, 0, 0}.validate()), InvalidArgument);
}

TEST(TotalLoss, ZeroWeightDropsTermBitwise) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 2);
  const LossReport r{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 0};
  const LossWeights w{0.7, 1e-6, 1.0, 1e-2, 1e-4};
  const double terms[6] = {r.l_color, r.l_depth, r.l_jac, r.l_grad, r.l_smooth, r.l_tv};
  const double weights[6] = {1.0, w.depth, w.jacobian, w.gradient, w.smooth, w.tv};
  for (int k = 1; k < 6; ++k) {
    LossWeights z = w;
    double* fields[5] = {&z.depth, &z.jacobian, &z.gradient, &z.smooth, &z.tv};
    *fields[k - 1] = 0.0;
    double manual = 0.0;
    for (int j = 0; j < 6; ++j) manual += j == k ? 0.0 : weights[j] * terms[j];
    EXPECT_EQ(total_loss(r, z).total, manual);
  }
}

}  // namespace
}  // namespace tissuefield
