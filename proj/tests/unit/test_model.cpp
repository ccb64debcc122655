#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tissuefield/model.hpp"
#include "tissuefield/render.hpp"

namespace tissuefield {
namespace {

using Mat = MatrixX<double>;

ModelConfig tiny_model() {
  ModelConfig c;
  c.deformation.hidden_layers = 3;
  c.deformation.width = 10;
  c.deformation.skips = {2};
  c.deformation.position_frequencies = 2;
  c.deformation.time_frequencies = 1;
  c.deformation.output_init_scale = 0.3;
  c.canonical.hidden_layers = 3;
  c.canonical.width = 10;
  c.canonical.skips = {2};
  c.canonical.color_width = 6;
  c.canonical.position_frequencies = 2;
  c.canonical.direction_frequencies = 1;
  return c;
}

PinholeCamera camera() {
  PinholeCamera cam;
  cam.fx = cam.fy = 40;
  cam.cx = cam.cy = 16;
  cam.width = cam.height = 32;
  cam.near = 1.0;
  cam.far = 3.0;
  return cam;
}

RayBatch<double> random_batch(int rays, int samples, double t, std::mt19937_64& rng) {
  const PinholeCamera cam = camera();
  std::uniform_int_distribution<int> px(0, 31);
  RayBatch<double> b;
  b.origins = Mat::Zero(3, rays);
  b.directions.resize(3, rays);
  b.s_values.resize(samples, rays);
  b.time = t;
  for (int r = 0; r < rays; ++r) {
    b.directions.col(r) = gen_ray(cam, px(rng), px(rng), t).direction;
    for (int k = 0; k < samples; ++k) b.s_values(k, r) = 1.0 + 2.0 * (k + 0.5) / samples;
  }
  return b;
}

TEST(SceneModel, RenderMatchesPointwiseReference) {
  const PinholeCamera cam = camera();
  SceneModel<double> model(tiny_model(), SceneBox::from_frustum(cam), 3);
  std::mt19937_64 rng(1);
  const RayBatch<double> batch = random_batch(7, 9, 0.35, rng);
  const RayOutputs<double> out = model.render(batch, cam.far, 3);
  const ModelDeformation<double> deformation(model);
  const ModelRadiance<double> radiance(model);
  for (int r = 0; r < batch.rays(); ++r) {
    Ray ray;
    ray.direction = batch.directions.col(r);
    ray.time = batch.time;
    std::vector<double> s(batch.samples());
    for (int k = 0; k < batch.samples(); ++k) s[k] = batch.s_values(k, r);
    const RenderedRay ref = render_ray(ray, s, deformation, radiance, cam.far);
    EXPECT_LT((ref.output.color - out.color.col(r)).norm(), 1e-12);
    EXPECT_NEAR(ref.output.depth, out.depth(0, r), 1e-12);
  }
}

void check_full_backward(int probe_stride) {
  const PinholeCamera cam = camera();
  SceneModel<double> model(tiny_model(), SceneBox::from_frustum(cam), 4);
  std::mt19937_64 rng(2);
  const RayBatch<double> batch = random_batch(4, 5, 0.5, rng);
  const int n = batch.rays() * batch.samples();
  const int m = (n + probe_stride - 1) / probe_stride;
  BackwardInputs<double> up;
  up.d_color = Mat::Random(3, batch.rays());
  up.d_depth = Mat::Random(1, batch.rays());
  up.d_warped = Mat::Random(3, n);
  up.d_warped_previous = Mat::Random(3, m);
  up.d_warped_next = Mat::Random(3, m);
  up.d_jacobians.resize(m);
  for (auto& g : up.d_jacobians) g = Eigen::Matrix3d::Random();
  ForwardOptions options;
  options.jacobians = true;
  options.neighbor_dt = 0.25;
  options.probe_stride = probe_stride;

  auto loss = [&] {
    ForwardPass<double> p;
    model.forward(batch, cam.far, options, &p);
    double v = p.outputs.color.cwiseProduct(up.d_color).sum() + p.outputs.depth.cwiseProduct(up.d_depth).sum() +
               p.current.warped.cwiseProduct(up.d_warped).sum() +
               p.previous.warped.cwiseProduct(up.d_warped_previous).sum() +
               p.next.warped.cwiseProduct(up.d_warped_next).sum();
    for (int i = 0; i < m; ++i) v += p.jacobians[i].cwiseProduct(up.d_jacobians[i]).sum();
    return v;
  };
  ForwardPass<double> pass;
  model.forward(batch, cam.far, options, &pass);
  ASSERT_TRUE(pass.has_previous && pass.has_next);
  model.zero_grad();
  model.backward(pass, up);

  auto params = model.parameter_blocks();
  auto grads = model.gradient_blocks();
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const std::size_t stride = std::max<std::size_t>(1, params[b].size() / 40);
    for (std::size_t i = 0; i < params[b].size(); i += stride) {
      const double saved = params[b][i];
      params[b][i] = saved + h;
      const double f_up = loss();
      params[b][i] = saved - h;
      const double f_down = loss();
      params[b][i] = saved;
      const double fd = (f_up - f_down) / (2 * h);
      EXPECT_LT(testing::relative_error(fd, grads[b][i], 1e-5), 1e-4) << "block " << b << " index " << i << " fd " << fd << " analytic " << grads[b][i];
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(SceneModel, FullBackwardMatchesFiniteDifferences) { check_full_backward(1); }

TEST(SceneModel, SubsampledProbesBackwardMatchesFiniteDifferences) { check_full_backward(3); }

TEST(SceneModel, SubsampledProbesMatchFullEvaluation) {
  const PinholeCamera cam = camera();
  const SceneModel<double> model(tiny_model(), SceneBox::from_frustum(cam), 6);
  std::mt19937_64 rng(4);
  const RayBatch<double> batch = random_batch(5, 6, 0.4, rng);
  ForwardOptions full;
  full.jacobians = true;
  full.neighbor_dt = 0.1;
  ForwardOptions sub = full;
  sub.probe_stride = 4;
  ForwardPass<double> a, b;
  model.forward(batch, cam.far, full, &a);
  model.forward(batch, cam.far, sub, &b);
  ASSERT_EQ(b.probes.size(), 8u);
  for (std::size_t j = 0; j < b.probes.size(); ++j) {
    const Eigen::Index i = b.probes[j];
    EXPECT_EQ(i, static_cast<Eigen::Index>(4 * j));
    EXPECT_LT((a.jacobians[i] - b.jacobians[j]).norm(), 1e-12);
    EXPECT_LT((a.previous.warped.col(i) - b.previous.warped.col(j)).norm(), 1e-12);
    EXPECT_LT((a.next.warped.col(i) - b.next.warped.col(j)).norm(), 1e-12);
  }
}

TEST(SceneModel, FloatAndDoubleAgree) {
  const PinholeCamera cam = camera();
  const SceneModel<double> md(tiny_model(), SceneBox::from_frustum(cam), 5);
  const SceneModel<float> mf(tiny_model(), SceneBox::from_frustum(cam), 5);
  std::mt19937_64 rng(3);
  const RayBatch<double> bd = random_batch(6, 8, 0.2, rng);
  RayBatch<float> bf{bd.origins.cast<float>(), bd.directions.cast<float>(), bd.s_values.cast<float>(), bd.time};
  const RayOutputs<double> od = md.render(bd, cam.far);
  const RayOutputs<float> of = mf.render(bf, cam.far);
  EXPECT_LT((od.color - of.color.cast<double>()).cwiseAbs().maxCoeff(), 1e-4);
}

}  // namespace
}  // namespace tissuefield
