#include "tissuefield/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "tissuefield/config.hpp"
#include "tissuefield/errors.hpp"
#include "tissuefield/sampling.hpp"

namespace tissuefield {

namespace {

constexpr std::uint64_t kCorruptionStream = 7;

Eigen::Vector3d vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument(std::string(what) + " must be a 3-vector");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec3(const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

template <typename T>
void read(const nlohmann::json& j, const char* key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("scene key '") + key + "': " + e.what());
  }
}

PixelCoord pixel(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument(std::string(what) + " must be [row, col]");
  return PixelCoord{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

se3::RigidTransform SyntheticBlob::motion_at(double t) const {
  const double phase = std::sin(2.0 * std::numbers::pi * frequency * t);
  se3::ScrewAxis s;
  s.a = motion.a * phase;
  s.b = motion.b * phase;
  return se3::screw_to_transform(s, se3::TranslationMode::kUnnormalized);
}

Eigen::Vector3d SyntheticBlob::center_at(double t) const {
  const se3::RigidTransform m = motion_at(t);
  return center - m.rotation.transpose() * m.translation;
}

void SyntheticScene::validate() const {
  camera.validate();
  if (frames < 1) throw InvalidArgument("synthetic scene needs at least one frame");
  if (quadrature_steps < 2) throw InvalidArgument("quadrature_steps must be >= 2");
  for (const SyntheticBlob& b : blobs) {
    if (!(b.radius > 0.0) || !(b.peak >= 0.0)) throw InvalidArgument("blob radius must be > 0 and peak >= 0");
  }
  if (backdrop && !(backdrop->density >= 0.0)) throw InvalidArgument("backdrop density must be >= 0");
  if (mask_rectangle && (mask_rectangle->width < 0 || mask_rectangle->height < 0)) {
    throw InvalidArgument("mask rectangle size must be >= 0");
  }
}

SyntheticScene synthetic_scene_from_json(const nlohmann::json& j) {
  check_json_keys(j, {"camera", "frames", "seed", "quadrature_steps", "blobs", "backdrop", "depth_corruption", "mask_rectangle"},
                  "scene");
  SyntheticScene s;
  if (!j.contains("camera")) throw InvalidArgument("scene needs a camera");
  const nlohmann::json& c = j.at("camera");
  check_json_keys(c, {"fx", "fy", "cx", "cy", "width", "height", "near", "far"}, "camera");
  read(c, "fx", s.camera.fx);
  read(c, "fy", s.camera.fy);
  read(c, "cx", s.camera.cx);
  read(c, "cy", s.camera.cy);
  read(c, "width", s.camera.width);
  read(c, "height", s.camera.height);
  read(c, "near", s.camera.near);
  read(c, "far", s.camera.far);
  read(j, "frames", s.frames);
  read(j, "seed", s.seed);
  read(j, "quadrature_steps", s.quadrature_steps);
  if (j.contains("blobs")) {
    for (const nlohmann::json& b : j.at("blobs")) {
      check_json_keys(b, {"center", "radius", "peak", "color", "motion", "frequency"}, "blob");
      SyntheticBlob blob;
      if (b.contains("center")) blob.center = vec3(b.at("center"), "blob center");
      if (b.contains("color")) blob.color = vec3(b.at("color"), "blob color");
      read(b, "radius", blob.radius);
      read(b, "peak", blob.peak);
      read(b, "frequency", blob.frequency);
      if (b.contains("motion")) {
        const nlohmann::json& m = b.at("motion");
        check_json_keys(m, {"a", "b"}, "blob motion");
        if (m.contains("a")) blob.motion.a = vec3(m.at("a"), "motion a");
        if (m.contains("b")) blob.motion.b = vec3(m.at("b"), "motion b");
      }
      s.blobs.push_back(blob);
    }
  }
  if (j.contains("backdrop") && !j.at("backdrop").is_null()) {
    const nlohmann::json& b = j.at("backdrop");
    check_json_keys(b, {"z", "density", "color", "texture_amplitude", "texture_frequency"}, "backdrop");
    SyntheticBackdrop d;
    read(b, "z", d.z);
    read(b, "density", d.density);
    if (b.contains("color")) d.color = vec3(b.at("color"), "backdrop color");
    read(b, "texture_amplitude", d.texture_amplitude);
    read(b, "texture_frequency", d.texture_frequency);
    s.backdrop = d;
  }
  if (j.contains("depth_corruption")) {
    const nlohmann::json& d = j.at("depth_corruption");
    if (d.is_null()) {
      s.corruption.reset();
    } else {
      check_json_keys(d, {"scale", "offset", "noise"}, "depth_corruption");
      DepthCorruption dc;
      read(d, "scale", dc.scale);
      read(d, "offset", dc.offset);
      read(d, "noise", dc.noise);
      s.corruption = dc;
    }
  }
  if (j.contains("mask_rectangle") && !j.at("mask_rectangle").is_null()) {
    const nlohmann::json& m = j.at("mask_rectangle");
    check_json_keys(m, {"width", "height", "start", "end"}, "mask_rectangle");
    MaskRectangle r;
    read(m, "width", r.width);
    read(m, "height", r.height);
    if (m.contains("start")) r.start = pixel(m.at("start"), "mask_rectangle start");
    r.end = r.start;
    if (m.contains("end")) r.end = pixel(m.at("end"), "mask_rectangle end");
    s.mask_rectangle = r;
  }
  s.validate();
  return s;
}

nlohmann::ordered_json to_json(const SyntheticScene& s) {
  nlohmann::ordered_json j;
  j["camera"] = {{"fx", s.camera.fx},       {"fy", s.camera.fy},         {"cx", s.camera.cx},
                 {"cy", s.camera.cy},       {"width", s.camera.width},   {"height", s.camera.height},
                 {"near", s.camera.near},   {"far", s.camera.far}};
  j["frames"] = s.frames;
  j["seed"] = s.seed;
  j["quadrature_steps"] = s.quadrature_steps;
  j["blobs"] = nlohmann::ordered_json::array();
  for (const SyntheticBlob& b : s.blobs) {
    nlohmann::ordered_json o;
    o["center"] = vec3(b.center);
    o["radius"] = b.radius;
    o["peak"] = b.peak;
    o["color"] = vec3(b.color);
    o["motion"] = {{"a", vec3(b.motion.a)}, {"b", vec3(b.motion.b)}};
    o["frequency"] = b.frequency;
    j["blobs"].push_back(o);
  }
  if (s.backdrop) {
    const SyntheticBackdrop& d = *s.backdrop;
    j["backdrop"] = {{"z", d.z},
                     {"density", d.density},
                     {"color", vec3(d.color)},
                     {"texture_amplitude", d.texture_amplitude},
                     {"texture_frequency", d.texture_frequency}};
  }
  if (s.corruption) {
    j["depth_corruption"] = {{"scale", s.corruption->scale}, {"offset", s.corruption->offset}, {"noise", s.corruption->noise}};
  } else {
    j["depth_corruption"] = nullptr;
  }
  if (s.mask_rectangle) {
    const MaskRectangle& r = *s.mask_rectangle;
    j["mask_rectangle"] = {{"width", r.width},
                           {"height", r.height},
                           {"start", {r.start.row, r.start.col}},
                           {"end", {r.end.row, r.end.col}}};
  }
  return j;
}

SyntheticScene load_synthetic_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scene spec " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed scene spec " + path + ": " + e.what());
  }
  return synthetic_scene_from_json(j);
}

SyntheticField::SyntheticField(const SyntheticScene& scene, double t) : scene_(&scene) {
  for (const SyntheticBlob& b : scene.blobs) motions_.push_back(b.motion_at(t));
}

Radiance SyntheticField::radiance(const Eigen::Vector3d& x, const Eigen::Vector3d&) const {
  Radiance out;
  Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < scene_->blobs.size(); ++i) {
    const SyntheticBlob& b = scene_->blobs[i];
    const Eigen::Vector3d y = motions_[i].apply(x - b.center);
    const double tau = b.peak * std::exp(-y.squaredNorm() / (2.0 * b.radius * b.radius));
    out.density += tau;
    weighted += tau * b.color;
  }
  if (scene_->backdrop && x.z() >= scene_->backdrop->z) {
    const SyntheticBackdrop& d = *scene_->backdrop;
    const double texture =
        1.0 + d.texture_amplitude * std::sin(d.texture_frequency * x.x()) * std::sin(d.texture_frequency * x.y());
    out.density += d.density;
    weighted += d.density * (d.color * texture).cwiseMax(0.0).cwiseMin(1.0);
  }
  if (out.density > 0.0) out.color = weighted / out.density;
  return out;
}

std::vector<double> quadrature_samples(double near, double far, int steps) {
  std::vector<double> s(steps);
  const double h = (far - near) / steps;
  for (int k = 0; k < steps; ++k) s[k] = near + k * h;
  return s;
}

RadianceOutput render_oracle_ray(const SyntheticScene& scene, const Ray& ray) {
  const SyntheticField field(scene, ray.time);
  const std::vector<double> s = quadrature_samples(scene.camera.near, scene.camera.far, scene.quadrature_steps);
  return render_ray(ray, s, IdentityDeformation(), field, scene.camera.far).output;
}

OracleFrame render_oracle(const SyntheticScene& scene, double t, const std::optional<se3::RigidTransform>& pose) {
  const PinholeCamera& cam = scene.camera;
  OracleFrame f{Image(cam.width, cam.height, 3), Image(cam.width, cam.height, 1), Image(cam.width, cam.height, 1)};
  const SyntheticField field(scene, t);
  const std::vector<double> s = quadrature_samples(cam.near, cam.far, scene.quadrature_steps);
  const IdentityDeformation identity;
#pragma omp parallel for schedule(dynamic, 4)
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      Ray ray = gen_ray(cam, row, col, t);
      if (pose) ray = transform_ray(ray, *pose);
      const RadianceOutput out = render_ray(ray, s, identity, field, cam.far).output;
      for (int c = 0; c < 3; ++c) f.color.at(row, col, c) = static_cast<float>(std::clamp(out.color[c], 0.0, 1.0));
      f.depth.at(row, col) = static_cast<float>(out.depth);
      f.acc.at(row, col) = static_cast<float>(out.acc);
    }
  }
  return f;
}

Image synthetic_mask(const SyntheticScene& scene, int frame) {
  Image mask(scene.camera.width, scene.camera.height, 1, 1.0f);
  if (!scene.mask_rectangle) return mask;
  const MaskRectangle& r = *scene.mask_rectangle;
  const double u = scene.frames > 1 ? static_cast<double>(frame) / (scene.frames - 1) : 0.0;
  const int row0 = static_cast<int>(std::lround(r.start.row + u * (r.end.row - r.start.row)));
  const int col0 = static_cast<int>(std::lround(r.start.col + u * (r.end.col - r.start.col)));
  for (int row = std::max(row0, 0); row < std::min(row0 + r.height, mask.height); ++row) {
    for (int col = std::max(col0, 0); col < std::min(col0 + r.width, mask.width); ++col) mask.at(row, col) = 0.0f;
  }
  return mask;
}

Dataset generate_synthetic(const SyntheticScene& scene) {
  scene.validate();
  Dataset ds;
  ds.camera = scene.camera;
  const double range = scene.camera.far - scene.camera.near;
  for (int i = 0; i < scene.frames; ++i) {
    FrameRecord f;
    f.index = i;
    f.time = static_cast<double>(i) / scene.frames;
    OracleFrame o = render_oracle(scene, f.time);
    f.image = std::move(o.color);
    f.depth = std::move(o.depth);
    f.mask = synthetic_mask(scene, i);
    if (scene.corruption) {
      const DepthCorruption& c = *scene.corruption;
      std::mt19937_64 rng(derive_seed(scene.seed, static_cast<std::uint64_t>(i), kCorruptionStream));
      std::normal_distribution<double> noise(0.0, c.noise * range);
      for (float& d : f.depth.data) d = static_cast<float>(c.scale * d + c.offset * range + (c.noise > 0.0 ? noise(rng) : 0.0));
    }
    f.laplacian = color_laplacian(f.image);
    ds.frames.push_back(std::move(f));
  }
  return ds;
}

void generate_synthetic(const SyntheticScene& scene, const std::string& out_dir) {
  write_dataset(out_dir, generate_synthetic(scene));
}

}  // namespace tissuefield
