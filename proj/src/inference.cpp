#include "tissuefield/inference.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "tissuefield/errors.hpp"
#include "tissuefield/metrics.hpp"
#include "tissuefield/sampling.hpp"

namespace tissuefield {

namespace {

void set_samples(RayBatch<float>& batch, int ray, const std::vector<double>& s) {
  for (std::size_t k = 0; k < s.size(); ++k) batch.s_values(static_cast<Eigen::Index>(k), ray) = static_cast<float>(s[k]);
}

}  // namespace

RenderedView render_view(const SceneModel<float>& model, const CheckpointMeta& meta, double t,
                         const ViewOptions& options) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("render time must lie in [0, 1]");
  if (options.stride < 1) throw InvalidArgument("stride must be >= 1");
  const PinholeCamera& cam = meta.camera;
  if (options.prior && (options.prior->width != cam.width || options.prior->height != cam.height)) {
    throw InvalidArgument("depth prior must match the camera resolution");
  }
  const int out_w = (cam.width + options.stride - 1) / options.stride;
  const int out_h = (cam.height + options.stride - 1) / options.stride;
  const int rays = out_w * out_h;
  const int k = meta.sampling.samples_per_ray;
  const bool guided = meta.sampling.depth_guided;
  const int n_surface = guided ? static_cast<int>(std::lround(k * meta.sampling.surface_fraction)) : 0;
  const double range = cam.far - cam.near;
  const double sigma = meta.sampling.sigma * range;

  RayBatch<float> batch;
  batch.time = t;
  batch.origins.resize(3, rays);
  batch.directions.resize(3, rays);
  batch.s_values.resize(k, rays);
  const std::vector<double> uniform = quantile_depth_guided(cam.near, 1.0, 0, k, cam.near, cam.far);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const int i = r * out_w + c;
      Ray ray = gen_ray(cam, r * options.stride, c * options.stride, t);
      if (options.pose) ray = transform_ray(ray, *options.pose);
      batch.origins.col(i) = ray.origin.cast<float>();
      batch.directions.col(i) = ray.direction.cast<float>();
      if (guided && options.prior) {
        set_samples(batch, i,
                    quantile_depth_guided(options.prior->at(r * options.stride, c * options.stride), sigma, n_surface,
                                          k - n_surface, cam.near, cam.far));
      } else {
        set_samples(batch, i, uniform);
      }
    }
  }
  RayOutputs<float> out = model.render(batch, cam.far, options.chunk_rays);
  if (guided && !options.prior) {
    // Second pass guided by the coarse expected depth.
    for (int i = 0; i < rays; ++i) {
      const double d = out.acc(0, i) > 0.0f ? std::clamp(static_cast<double>(out.depth(0, i)), cam.near, cam.far)
                                            : cam.far;
      set_samples(batch, i, quantile_depth_guided(d, sigma, n_surface, k - n_surface, cam.near, cam.far));
    }
    out = model.render(batch, cam.far, options.chunk_rays);
  }
  RenderedView view{Image(out_w, out_h, 3), Image(out_w, out_h, 1), Image(out_w, out_h, 1)};
  for (int i = 0; i < rays; ++i) {
    for (int c = 0; c < 3; ++c) view.color.data[3 * i + c] = std::clamp(out.color(c, i), 0.0f, 1.0f);
    view.depth.data[i] = out.depth(0, i);
    view.acc.data[i] = out.acc(0, i);
  }
  return view;
}

se3::RigidTransform parse_pose(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("pose must be six comma-separated numbers, got '" + text + "'");
    }
  }
  if (v.size() != 6) throw InvalidArgument("pose must be six comma-separated numbers, got '" + text + "'");
  const double deg = std::numbers::pi / 180.0;
  se3::RigidTransform pose;
  pose.rotation = (Eigen::AngleAxisd(v[0] * deg, Eigen::Vector3d::UnitZ()) *
                   Eigen::AngleAxisd(v[1] * deg, Eigen::Vector3d::UnitY()) *
                   Eigen::AngleAxisd(v[2] * deg, Eigen::Vector3d::UnitX()))
                      .toRotationMatrix();
  pose.translation = Eigen::Vector3d(v[3], v[4], v[5]);
  return pose;
}

std::vector<CloudPoint> back_project(const PinholeCamera& camera, const Image& depth, const Image& mask,
                                     const Image* color) {
  if (depth.width != camera.width || depth.height != camera.height || !depth.same_extent(mask)) {
    throw InvalidArgument("depth and mask must match the camera resolution");
  }
  if (color && !color->same_extent(depth)) throw InvalidArgument("color must match the depth resolution");
  std::vector<CloudPoint> points;
  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      if (mask.at(row, col) < 0.5f) continue;
      const Ray ray = gen_ray(camera, row, col, 0.0);
      CloudPoint p;
      p.position = ray.at(depth.at(row, col));
      p.color = color ? Eigen::Vector3f(color->at(row, col, 0), color->at(row, col, 1), color->at(row, col, 2))
                      : Eigen::Vector3f::Ones();
      points.push_back(p);
    }
  }
  return points;
}

void write_ply(const std::string& path, const std::vector<CloudPoint>& points) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  out.precision(9);
  for (const CloudPoint& p : points) {
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z();
    for (int c = 0; c < 3; ++c) out << ' ' << std::lround(std::clamp(p.color[c], 0.0f, 1.0f) * 255.0f);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<CloudPoint> read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  std::size_t count = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) count = std::stoul(line.substr(15));
    if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw IoError("malformed PLY header in " + path);
  std::vector<CloudPoint> points(count);
  for (CloudPoint& p : points) {
    int r, g, b;
    if (!(in >> p.position.x() >> p.position.y() >> p.position.z() >> r >> g >> b)) {
      throw IoError("truncated PLY " + path);
    }
    p.color = Eigen::Vector3f(r, g, b) / 255.0f;
  }
  return points;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = nlohmann::ordered_json::array();
  j["psnr"] = nlohmann::ordered_json::array();
  j["ssim"] = nlohmann::ordered_json::array();
  for (const FrameMetrics& f : frames) {
    j["frames"].push_back(f.frame);
    j["psnr"].push_back(f.psnr);
    j["ssim"].push_back(f.ssim);
  }
  j["mean_psnr"] = mean_psnr;
  j["mean_ssim"] = mean_ssim;
  return j;
}

MetricReport evaluate_frames(const SceneModel<float>& model, const CheckpointMeta& meta, const Dataset& dataset,
                             const std::vector<int>& frames) {
  if (dataset.camera.width != meta.camera.width || dataset.camera.height != meta.camera.height) {
    throw InvalidArgument("dataset resolution differs from the checkpoint camera");
  }
  std::vector<Image> prior;
  if (meta.sampling.depth_guided) {
    std::vector<Image> depths, masks;
    for (const FrameRecord& f : dataset.frames) {
      depths.push_back(f.depth);
      masks.push_back(f.mask);
    }
    prior = normalize_depth(depths, masks, meta.camera.near, meta.camera.far);
  }
  MetricReport report;
  for (int i : frames) {
    if (i < 0 || i >= static_cast<int>(dataset.frames.size())) {
      throw InvalidArgument("frame " + std::to_string(i) + " not in dataset");
    }
    const FrameRecord& f = dataset.frames[i];
    ViewOptions options;
    if (!prior.empty()) options.prior = &prior[i];
    const RenderedView view = render_view(model, meta, f.time, options);
    FrameMetrics m{i, psnr(view.color, f.image), ssim(view.color, f.image)};
    report.frames.push_back(m);
    report.mean_psnr += m.psnr;
    report.mean_ssim += m.ssim;
  }
  if (!report.frames.empty()) {
    report.mean_psnr /= static_cast<double>(report.frames.size());
    report.mean_ssim /= static_cast<double>(report.frames.size());
  }
  return report;
}

std::vector<int> holdout_indices(int frame_count, int k) {
  std::vector<int> out;
  for (int i = 0; i < frame_count; ++i) {
    if (k <= 0 || i % k == k / 2) out.push_back(i);
  }
  return out;
}

}  // namespace tissuefield
