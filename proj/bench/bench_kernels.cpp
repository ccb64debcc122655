// Parallel kernels against their serial counterparts. The thread-count
// argument sweeps 1 and the number of available processors; the reference
// variants are the plain single-threaded implementations used by the tests.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <set>

#include "tissuefield/metrics.hpp"
#include "tissuefield/mlp.hpp"
#include "tissuefield/model.hpp"
#include "tissuefield/render.hpp"
#include "tissuefield/synthetic.hpp"

namespace tissuefield {
namespace {

constexpr int kRays = 1024;
constexpr int kSamples = 64;

void thread_counts(benchmark::internal::Benchmark* b) {
  for (int t : std::set<int>{1, omp_get_num_procs()}) b->Arg(t);
  b->ArgName("threads");
}

struct CompositeInputs {
  MatrixX<float> radiance;
  MatrixX<float> s_values;
};

const CompositeInputs& composite_inputs() {
  static const CompositeInputs in = [] {
    CompositeInputs c;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    c.radiance.resize(4, kRays * kSamples);
    for (Eigen::Index i = 0; i < c.radiance.size(); ++i) c.radiance.data()[i] = u(rng);
    c.radiance.row(3) *= 20.0f;
    c.s_values.resize(kSamples, kRays);
    for (int r = 0; r < kRays; ++r) {
      for (int k = 0; k < kSamples; ++k) c.s_values(k, r) = 0.5f + 2.0f * (k + u(rng) * 0.9f) / kSamples;
    }
    return c;
  }();
  return in;
}

void BM_CompositeBatch(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const CompositeInputs& in = composite_inputs();
  RayOutputs<float> out;
  for (auto _ : state) {
    composite_batch(in.radiance, in.s_values, 2.5, &out);
    benchmark::DoNotOptimize(out.color.data());
  }
  state.SetItemsProcessed(state.iterations() * kRays);
}
BENCHMARK(BM_CompositeBatch)->Apply(thread_counts);

void BM_CompositeReference(benchmark::State& state) {
  const CompositeInputs& in = composite_inputs();
  std::vector<Eigen::Vector3d> colors(kSamples);
  std::vector<double> densities(kSamples), s(kSamples);
  for (auto _ : state) {
    for (int r = 0; r < kRays; ++r) {
      for (int k = 0; k < kSamples; ++k) {
        const Eigen::Index i = static_cast<Eigen::Index>(r) * kSamples + k;
        colors[k] = in.radiance.col(i).head<3>().cast<double>();
        densities[k] = in.radiance(3, i);
        s[k] = in.s_values(k, r);
      }
      benchmark::DoNotOptimize(composite(colors, densities, s, 2.5).color.data());
    }
  }
  state.SetItemsProcessed(state.iterations() * kRays);
}
BENCHMARK(BM_CompositeReference);

void BM_CompositeBackward(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const CompositeInputs& in = composite_inputs();
  RayOutputs<float> out;
  composite_batch(in.radiance, in.s_values, 2.5, &out);
  const MatrixX<float> d_color = MatrixX<float>::Ones(3, kRays);
  const MatrixX<float> d_depth = MatrixX<float>::Ones(1, kRays);
  for (auto _ : state) {
    benchmark::DoNotOptimize(composite_batch_backward(in.radiance, in.s_values, 2.5, out, d_color, d_depth).data());
  }
  state.SetItemsProcessed(state.iterations() * kRays);
}
BENCHMARK(BM_CompositeBackward)->Apply(thread_counts);

MlpLayout bench_layout() { return MlpLayout{63, 128, 4, 6, {}}; }

void BM_MlpForwardGemm(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const Mlp<float> mlp(bench_layout(), MlpInit{3, 0.0});
  const MatrixX<float> x = MatrixX<float>::Random(63, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(mlp.forward(x, nullptr).data());
  state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_MlpForwardGemm)->Apply(thread_counts);

void BM_MlpForwardReference(benchmark::State& state) {
  const Mlp<float> mlp(bench_layout(), MlpInit{3, 0.0});
  const MatrixX<float> x = MatrixX<float>::Random(63, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(mlp.forward_reference(x).data());
  state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_MlpForwardReference);

Image random_image(int size, std::uint64_t seed) {
  Image img(size, size, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : img.data) v = u(rng);
  return img;
}

void BM_Ssim(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const Image a = random_image(128, 1), b = random_image(128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Apply(thread_counts);

void BM_SsimReference(benchmark::State& state) {
  const Image a = random_image(128, 1), b = random_image(128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim_reference(a, b));
}
BENCHMARK(BM_SsimReference);

ModelConfig bench_model() {
  ModelConfig c;
  c.deformation.hidden_layers = 4;
  c.deformation.width = 64;
  c.deformation.skips = {};
  c.deformation.position_frequencies = 6;
  c.deformation.time_frequencies = 4;
  c.canonical.hidden_layers = 4;
  c.canonical.width = 64;
  c.canonical.skips = {};
  c.canonical.color_width = 32;
  c.canonical.position_frequencies = 8;
  c.canonical.direction_frequencies = 2;
  return c;
}

PinholeCamera bench_camera() {
  PinholeCamera cam;
  cam.fx = cam.fy = 48.0;
  cam.cx = cam.cy = 24.0;
  cam.width = cam.height = 48;
  cam.near = 0.5;
  cam.far = 2.5;
  return cam;
}

RayBatch<float> bench_batch(int rays, int samples) {
  const PinholeCamera cam = bench_camera();
  RayBatch<float> batch;
  batch.origins = MatrixX<float>::Zero(3, rays);
  batch.directions.resize(3, rays);
  batch.s_values.resize(samples, rays);
  batch.time = 0.4;
  for (int r = 0; r < rays; ++r) {
    const Ray ray = gen_ray(cam, r % cam.height, (r * 7) % cam.width, batch.time);
    batch.directions.col(r) = ray.direction.cast<float>();
    for (int k = 0; k < samples; ++k) {
      batch.s_values(k, r) = static_cast<float>(cam.near + (cam.far - cam.near) * (k + 0.5) / samples);
    }
  }
  return batch;
}

// One training step's model work: forward with regularizer probes and the
// full reverse pass.
void BM_ModelForwardBackward(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const PinholeCamera cam = bench_camera();
  SceneModel<float> model(bench_model(), SceneBox::from_frustum(cam), 1);
  const RayBatch<float> batch = bench_batch(128, 32);
  ForwardOptions options;
  options.jacobians = true;
  options.neighbor_dt = 0.1;
  options.probe_stride = 8;
  BackwardInputs<float> up;
  up.d_color = MatrixX<float>::Constant(3, batch.rays(), 1e-3f);
  up.d_depth = MatrixX<float>::Constant(1, batch.rays(), 1e-3f);
  ForwardPass<float> pass;
  for (auto _ : state) {
    model.forward(batch, cam.far, options, &pass);
    model.zero_grad();
    model.backward(pass, up);
  }
  state.SetItemsProcessed(state.iterations() * batch.rays());
}
BENCHMARK(BM_ModelForwardBackward)->Apply(thread_counts)->Unit(benchmark::kMillisecond);

void BM_OracleRender(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  SyntheticScene scene;
  scene.camera = bench_camera();
  scene.camera.width = scene.camera.height = 24;
  scene.camera.cx = scene.camera.cy = 12.0;
  scene.camera.fx = scene.camera.fy = 24.0;
  scene.quadrature_steps = 256;
  SyntheticBlob blob;
  blob.center = Eigen::Vector3d(0.0, 0.0, 1.4);
  blob.radius = 0.2;
  blob.peak = 40.0;
  blob.color = Eigen::Vector3d(0.8, 0.4, 0.4);
  scene.blobs.push_back(blob);
  scene.backdrop = SyntheticBackdrop{};
  for (auto _ : state) benchmark::DoNotOptimize(render_oracle(scene, 0.3).color.data.data());
}
BENCHMARK(BM_OracleRender)->Apply(thread_counts)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tissuefield

BENCHMARK_MAIN();
