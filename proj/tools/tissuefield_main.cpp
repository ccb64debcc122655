#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tissuefield/checkpoint.hpp"
#include "tissuefield/config.hpp"
#include "tissuefield/dataset.hpp"
#include "tissuefield/errors.hpp"
#include "tissuefield/image_io.hpp"
#include "tissuefield/inference.hpp"
#include "tissuefield/runtime.hpp"
#include "tissuefield/synthetic.hpp"
#include "tissuefield/trainer.hpp"

namespace fs = std::filesystem;
using namespace tissuefield;

namespace {

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

int run_train(const std::string& config_path, const std::string& data, const std::string& out,
              const std::string& resume, int report_every) {
  const TrainConfig config = load_train_config(config_path);
  const Dataset dataset = ingest(data);
  fs::create_directories(out);
  std::ofstream(fs::path(out) / "config.json") << to_json(config).dump(2) << "\n";
  const TrainResult result = train(config, dataset, out, resume, [&](long it, const LossReport& r) {
    if (report_every > 0 && (it % report_every == 0 || it + 1 == config.iterations)) {
      std::cerr << log_line(it, r) << "\n";
    }
  });
  std::cout << "checkpoint " << result.checkpoint << " after " << result.iterations << " iterations\n";
  return 0;
}

int run_render(const std::string& ckpt_path, double t, const std::string& pose, int stride, const std::string& out,
               const std::string& depth_out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  ViewOptions options;
  options.stride = stride;
  if (!pose.empty()) options.pose = parse_pose(pose);
  const RenderedView view = render_view(ckpt.model, ckpt.meta, t, options);
  ensure_parent(out);
  write_png(out, view.color);
  if (!depth_out.empty()) {
    ensure_parent(depth_out);
    write_pfm(depth_out, view.depth);
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data, const std::string& out, int holdout) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Dataset dataset = ingest(data);
  const MetricReport report =
      evaluate_frames(ckpt.model, ckpt.meta, dataset, holdout_indices(static_cast<int>(dataset.frames.size()), holdout));
  ensure_parent(out);
  std::ofstream file(out);
  if (!file) throw IoError("cannot write " + out);
  file << report.to_json().dump(2) << "\n";
  std::cout << "mean psnr " << report.mean_psnr << " dB, mean ssim " << report.mean_ssim << " over "
            << report.frames.size() << " frames\n";
  return 0;
}

int run_synth(const std::string& spec, const std::string& out) {
  generate_synthetic(load_synthetic_scene(spec), out);
  return 0;
}

int run_export(const std::string& ckpt_path, double t, const std::string& out, const std::string& mask_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RenderedView view = render_view(ckpt.model, ckpt.meta, t);
  Image mask(view.depth.width, view.depth.height, 1, 1.0f);
  if (!mask_path.empty()) {
    mask = read_png(mask_path, 1);
    for (float& v : mask.data) v = v >= 0.5f ? 1.0f : 0.0f;
  }
  const std::vector<CloudPoint> points = back_project(ckpt.meta.camera, view.depth, mask, &view.color);
  ensure_parent(out);
  write_ply(out, points);
  std::cout << points.size() << " points\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformable neural radiance fields for monocular video"};
  app.require_subcommand(1);

  std::string config, data, out, resume, ckpt, pose, spec, depth_out, mask;
  double time = 0.0;
  int stride = 1, holdout = 8, report_every = 100;

  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model to a dataset directory");
  train_cmd->add_option("--config", config, "Training config JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  train_cmd->add_option("--report-every", report_every, "Print a loss line every N iterations (0 = quiet)");

  CLI::App* render_cmd = app.add_subcommand("render", "Render a view at time t");
  render_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  render_cmd->add_option("--time", time, "Time in [0, 1]")->required();
  render_cmd->add_option("--pose", pose, "yaw,pitch,roll (degrees),tx,ty,tz");
  render_cmd->add_option("--stride", stride, "Pixel stride for previews")->check(CLI::PositiveNumber);
  render_cmd->add_option("--depth-out", depth_out, "Also write the depth map as PFM");
  render_cmd->add_option("--out", out, "Output PNG")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR and SSIM on held-out frames");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--holdout", holdout, "Evaluate frames i % k == k / 2; 0 evaluates every frame");
  eval_cmd->add_option("--out", out, "Output metrics JSON")->required();

  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--spec", spec, "Scene JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", out, "Output dataset directory")->required();

  CLI::App* export_cmd = app.add_subcommand("export-ply", "Export the rendered depth as a point cloud");
  export_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  export_cmd->add_option("--time", time, "Time in [0, 1]")->required();
  export_cmd->add_option("--mask", mask, "Mask PNG; only unmasked pixels are exported");
  export_cmd->add_option("--out", out, "Output PLY")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  apply_thread_policy();

  try {
    if (*train_cmd) return run_train(config, data, out, resume, report_every);
    if (*render_cmd) return run_render(ckpt, time, pose, stride, out, depth_out);
    if (*eval_cmd) return run_eval(ckpt, data, out, holdout);
    if (*synth_cmd) return run_synth(spec, out);
    if (*export_cmd) return run_export(ckpt, time, out, mask);
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IncompatibleCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
