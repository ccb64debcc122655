#include "tissuefield/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "tissuefield/errors.hpp"
#include "tissuefield/sampling.hpp"

namespace tissuefield {

namespace fs = std::filesystem;

namespace {

// Stream indices for derive_seed.
constexpr std::uint64_t kFrameStream = 1;
constexpr std::uint64_t kPatchStream = 2;
constexpr std::uint64_t kRayStream = 1000;

int surface_samples(const TrainConfig& c) {
  if (!c.depth_guided) return 0;
  return static_cast<int>(std::lround(c.samples_per_ray * c.surface_fraction));
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset)
    : config_(config), dataset_(&dataset), camera_(dataset.camera) {
  config_.validate();
  if (dataset.frames.size() < 1) throw InvalidArgument("dataset has no frames");
  if (config_.near > 0.0) camera_.near = config_.near;
  if (config_.far > 0.0) camera_.far = config_.far;
  camera_.validate();
  const int count = static_cast<int>(dataset.frames.size());
  train_frames_ = training_frames(config_, count);
  std::vector<Image> depths, masks;
  for (const FrameRecord& f : dataset.frames) {
    depths.push_back(f.depth);
    masks.push_back(f.mask);
  }
  prior_ = normalize_depth(depths, masks, camera_.near, camera_.far);
  model_ = SceneModel<float>(config_.model, SceneBox::from_frustum(camera_), config_.seed);
  std::vector<std::size_t> sizes;
  for (const auto& b : model_.parameter_blocks()) sizes.push_back(b.size());
  optimizer_ = Adam(sizes);
}

TrainingBatch Trainer::make_batch(long iteration) const {
  const int p = config_.patch_size;
  const int patches = config_.patches_per_batch();
  const std::uint64_t it = static_cast<std::uint64_t>(iteration);
  std::mt19937_64 frame_rng(derive_seed(config_.seed, it, kFrameStream));
  std::uniform_int_distribution<std::size_t> pick(0, train_frames_.size() - 1);
  TrainingBatch b;
  b.frame = train_frames_[pick(frame_rng)];
  const FrameRecord& f = dataset_->frames[b.frame];
  const Image& prior = prior_[b.frame];
  const std::vector<PixelCoord> corners = sample_patches(f.mask, p, patches, derive_seed(config_.seed, it, kPatchStream));

  b.grid = PatchGrid{patches, p};
  const int rays = b.grid.pixels();
  const int k = config_.samples_per_ray;
  const int n_surface = surface_samples(config_);
  const double range = camera_.far - camera_.near;
  const double sigma = annealed_sigma(config_.sigma_start, config_.sigma_end, iteration, config_.iterations) * range;
  b.rays.origins = MatrixX<float>::Zero(3, rays);
  b.rays.directions.resize(3, rays);
  b.rays.s_values.resize(k, rays);
  b.rays.time = f.time;
  b.color.resize(3 * rays);
  b.depth.resize(rays);
  b.mask.resize(rays);
  b.laplacian.resize(rays);
  for (int q = 0; q < patches; ++q) {
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) {
        const int i = b.grid.index(q, r, c);
        const int row = corners[q].row + r, col = corners[q].col + c;
        const Ray ray = gen_ray(camera_, row, col, f.time);
        b.rays.directions.col(i) = ray.direction.cast<float>();
        for (int ch = 0; ch < 3; ++ch) b.color[3 * i + ch] = f.image.at(row, col, ch);
        const double d = prior.at(row, col);
        b.depth[i] = (d - camera_.near) / range;
        b.mask[i] = f.mask.at(row, col);
        b.laplacian[i] = f.laplacian.at(row, col);
        const std::uint64_t ray_seed = derive_seed(config_.seed, it, kRayStream + static_cast<std::uint64_t>(i));
        const std::vector<double> s =
            sample_depth_guided(d, sigma, n_surface, k - n_surface, camera_.near, camera_.far, ray_seed);
        for (int j = 0; j < k; ++j) b.rays.s_values(j, i) = static_cast<float>(s[j]);
      }
    }
  }
  return b;
}

Trainer::Evaluation Trainer::compute(const TrainingBatch& batch, long iteration, bool gradients) const {
  const LossWeights& w = config_.weights;
  const int rays = batch.grid.pixels();
  const double range = camera_.far - camera_.near;
  const double dt = 1.0 / static_cast<double>(dataset_->frames.size());
  const double scale = model_.box().scale;

  Evaluation ev;
  ForwardOptions options;
  options.keep_cache = gradients;
  options.jacobians = w.jacobian > 0.0 && gradients;
  options.neighbor_dt = w.tv > 0.0 ? dt : 0.0;
  options.probe_stride = config_.probe_stride;
  if (w.jacobian > 0.0 && !gradients) {
    options.keep_cache = true;
    options.jacobians = true;
  }
  model_.forward(batch.rays, camera_.far, options, &ev.pass);
  const RayOutputs<float>& out = ev.pass.outputs;

  std::vector<double> color(3 * rays), depth(rays);
  for (int r = 0; r < rays; ++r) {
    for (int c = 0; c < 3; ++c) color[3 * r + c] = out.color(c, r);
    depth[r] = (static_cast<double>(out.depth(0, r)) - camera_.near) / range;
  }
  std::vector<double> g_color(gradients ? 3 * rays : 0);
  std::vector<double> g_depth(gradients ? rays : 0), g_grad(gradients ? rays : 0), g_smooth(gradients ? rays : 0);
  LossReport& rep = ev.report;
  rep.l_color = loss_color(color, batch.color, batch.mask, g_color);
  if (w.depth > 0.0) rep.l_depth = loss_depth(depth, batch.depth, batch.mask, config_.huber_delta, g_depth);
  if (w.gradient > 0.0) rep.l_grad = loss_grad(depth, batch.depth, batch.mask, batch.grid, g_grad);
  if (w.smooth > 0.0) rep.l_smooth = loss_smooth(depth, batch.laplacian, batch.mask, batch.grid, g_smooth);

  std::vector<Eigen::Matrix3d> g_jac;
  if (w.jacobian > 0.0) {
    if (gradients) g_jac.resize(ev.pass.jacobians.size());
    rep.l_jac = loss_jacobian(ev.pass.jacobians, config_.robust_scale, g_jac);
  }
  TvGradients g_tv;
  if (w.tv > 0.0) {
    // Measured in scene units.
    Eigen::Matrix3Xd cur(3, static_cast<Eigen::Index>(ev.pass.probes.size()));
    for (std::size_t j = 0; j < ev.pass.probes.size(); ++j) {
      cur.col(static_cast<Eigen::Index>(j)) = ev.pass.current.warped.col(ev.pass.probes[j]).cast<double>() / scale;
    }
    Eigen::Matrix3Xd prev, next;
    if (ev.pass.has_previous) prev = ev.pass.previous.warped.cast<double>() / scale;
    if (ev.pass.has_next) next = ev.pass.next.warped.cast<double>() / scale;
    rep.l_tv = loss_tv_points(cur, ev.pass.has_previous ? &prev : nullptr, ev.pass.has_next ? &next : nullptr,
                              gradients ? &g_tv : nullptr);
  }
  rep = total_loss(rep, w);

  if (!gradients) return ev;
  BackwardInputs<float>& up = ev.upstream;
  up.d_color.resize(3, rays);
  up.d_depth.resize(1, rays);
  for (int r = 0; r < rays; ++r) {
    for (int c = 0; c < 3; ++c) up.d_color(c, r) = static_cast<float>(g_color[3 * r + c]);
    const double dd = w.depth * g_depth[r] + w.gradient * g_grad[r] + w.smooth * g_smooth[r];
    up.d_depth(0, r) = static_cast<float>(dd / range);
  }
  if (w.jacobian > 0.0) {
    up.d_jacobians = std::move(g_jac);
    for (auto& g : up.d_jacobians) g *= w.jacobian;
  }
  if (w.tv > 0.0) {
    const double f = w.tv / scale;
    up.d_warped = MatrixX<float>::Zero(3, ev.pass.current.warped.cols());
    for (std::size_t j = 0; j < ev.pass.probes.size(); ++j) {
      up.d_warped.col(ev.pass.probes[j]) = (g_tv.d_current.col(static_cast<Eigen::Index>(j)) * f).cast<float>();
    }
    if (ev.pass.has_previous) up.d_warped_previous = (g_tv.d_previous * f).cast<float>();
    if (ev.pass.has_next) up.d_warped_next = (g_tv.d_next * f).cast<float>();
  }
  return ev;
}

LossReport Trainer::evaluate(const TrainingBatch& batch, long iteration) const {
  return compute(batch, iteration, false).report;
}

StepResult Trainer::step() {
  const TrainingBatch batch = make_batch(iteration_);
  Evaluation ev = compute(batch, iteration_, true);
  model_.zero_grad();
  model_.backward(ev.pass, ev.upstream);
  StepResult result;
  result.report = ev.report;
  result.learning_rate =
      exponential_learning_rate(config_.learning_rate, config_.learning_rate_final, iteration_, config_.iterations);
  const auto params = model_.parameter_blocks();
  const auto grads = model_.gradient_blocks();
  std::vector<std::span<float>> g(grads.begin(), grads.end());
  optimizer_.step(params, g, result.learning_rate);
  ++iteration_;
  return result;
}

CheckpointMeta Trainer::checkpoint_meta() const {
  CheckpointMeta m;
  m.model = model_.config();
  m.box = model_.box();
  m.camera = camera_;
  m.sampling.samples_per_ray = config_.samples_per_ray;
  m.sampling.surface_fraction = config_.surface_fraction;
  m.sampling.depth_guided = config_.depth_guided;
  m.sampling.sigma = config_.sigma_end;
  m.iteration = iteration_;
  return m;
}

void Trainer::save(const std::string& path) const { save_checkpoint(path, checkpoint_meta(), model_, &optimizer_); }

void Trainer::resume(const std::string& path) {
  const CheckpointMeta meta = load_checkpoint_into(path, model_, &optimizer_);
  iteration_ = static_cast<long>(meta.iteration);
}

std::string log_line(long iteration, const LossReport& r) {
  nlohmann::ordered_json j;
  j["iter"] = iteration;
  j["l_color"] = r.l_color;
  j["l_depth"] = r.l_depth;
  j["l_jac"] = r.l_jac;
  j["l_grad"] = r.l_grad;
  j["l_smooth"] = r.l_smooth;
  j["l_tv"] = r.l_tv;
  j["total"] = r.total;
  return j.dump();
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const std::string& out_dir,
                  const std::string& resume, const ProgressCallback& progress) {
  fs::create_directories(out_dir);
  Trainer trainer(config, dataset);
  const std::string log_path = (fs::path(out_dir) / "log.ndjson").string();
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
  std::vector<std::string> kept;
  if (!resume.empty()) {
    trainer.resume(resume);
    // Keep log lines from before the resume point.
    std::ifstream old(log_path);
    for (std::string line; std::getline(old, line);) {
      if (line.empty()) continue;
      if (nlohmann::json::parse(line).at("iter").get<long>() < trainer.iteration()) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write training log " + log_path);
  for (const std::string& line : kept) log << line << "\n";

  TrainResult result;
  while (trainer.iteration() < config.iterations) {
    const long it = trainer.iteration();
    const StepResult step = trainer.step();
    log << log_line(it, step.report) << "\n";
    if (!log) throw IoError("failed writing training log " + log_path);
    result.last = step.report;
    if (progress) progress(it, step.report);
    if (config.checkpoint_every > 0 && trainer.iteration() % config.checkpoint_every == 0 &&
        trainer.iteration() < config.iterations) {
      log.flush();
      trainer.save(ckpt);
    }
  }
  log.flush();
  trainer.save(ckpt);
  result.checkpoint = ckpt;
  result.iterations = trainer.iteration();
  return result;
}

}  // namespace tissuefield
