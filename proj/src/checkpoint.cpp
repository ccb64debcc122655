#include "tissuefield/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tissuefield/config.hpp"
#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'T', 'F', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IncompatibleCheckpoint("truncated checkpoint blob " + path);
  return v;
}

void put_floats(std::ostream& out, std::span<const float> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::istream& in, std::span<float> v, const std::string& path) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!in) throw IncompatibleCheckpoint("truncated checkpoint blob " + path);
}

nlohmann::ordered_json meta_to_json(const CheckpointMeta& m, const std::vector<std::size_t>& counts) {
  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["iteration"] = m.iteration;
  j["architecture"] = to_json(m.model);
  j["parameter_counts"] = counts;
  j["scene_box"] = {{"center", {m.box.center.x(), m.box.center.y(), m.box.center.z()}}, {"scale", m.box.scale}};
  j["camera"] = {{"fx", m.camera.fx},         {"fy", m.camera.fy},         {"cx", m.camera.cx},
                 {"cy", m.camera.cy},         {"width", m.camera.width},   {"height", m.camera.height},
                 {"near", m.camera.near},     {"far", m.camera.far}};
  j["sampling"] = {{"samples_per_ray", m.sampling.samples_per_ray},
                   {"surface_fraction", m.sampling.surface_fraction},
                   {"depth_guided", m.sampling.depth_guided},
                   {"sigma", m.sampling.sigma}};
  return j;
}

struct Sidecar {
  CheckpointMeta meta;
  std::uint32_t version = 0;
  std::vector<std::size_t> counts;
};

Sidecar read_sidecar(const std::string& path) {
  const std::string sidecar = checkpoint_sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open checkpoint sidecar " + sidecar);
  Sidecar s;
  try {
    nlohmann::json j;
    in >> j;
    s.version = j.at("format_version").get<std::uint32_t>();
    CheckpointMeta& m = s.meta;
    m.iteration = j.at("iteration").get<std::int64_t>();
    m.model = model_config_from_json(j.at("architecture"));
    s.counts = j.at("parameter_counts").get<std::vector<std::size_t>>();
    const auto& box = j.at("scene_box");
    for (int i = 0; i < 3; ++i) m.box.center[i] = box.at("center").at(i).get<double>();
    m.box.scale = box.at("scale").get<double>();
    const auto& cam = j.at("camera");
    m.camera.fx = cam.at("fx").get<double>();
    m.camera.fy = cam.at("fy").get<double>();
    m.camera.cx = cam.at("cx").get<double>();
    m.camera.cy = cam.at("cy").get<double>();
    m.camera.width = cam.at("width").get<int>();
    m.camera.height = cam.at("height").get<int>();
    m.camera.near = cam.at("near").get<double>();
    m.camera.far = cam.at("far").get<double>();
    const auto& smp = j.at("sampling");
    m.sampling.samples_per_ray = smp.at("samples_per_ray").get<int>();
    m.sampling.surface_fraction = smp.at("surface_fraction").get<double>();
    m.sampling.depth_guided = smp.at("depth_guided").get<bool>();
    m.sampling.sigma = smp.at("sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint("malformed checkpoint sidecar " + sidecar + ": " + e.what());
  }
  return s;
}

void read_blob(const std::string& path, const Sidecar& sidecar, SceneModel<float>& model, Adam* optimizer,
               bool* has_optimizer) {
  const std::string blob = checkpoint_blob_path(path);
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint blob " + blob);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IncompatibleCheckpoint(blob + " is not a checkpoint blob");
  const auto version = get<std::uint32_t>(in, blob);
  if (version != sidecar.version || version != kCheckpointVersion) {
    throw IncompatibleCheckpoint("checkpoint version mismatch: blob " + std::to_string(version) + ", sidecar " +
                                 std::to_string(sidecar.version) + ", supported " +
                                 std::to_string(kCheckpointVersion));
  }
  const auto blocks = get<std::uint32_t>(in, blob);
  auto params = model.parameter_blocks();
  if (blocks != params.size() || sidecar.counts.size() != params.size()) {
    throw IncompatibleCheckpoint("checkpoint block count does not match the model");
  }
  std::vector<std::uint64_t> sizes(blocks);
  for (auto& s : sizes) s = get<std::uint64_t>(in, blob);
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (sizes[b] != params[b].size() || sizes[b] != sidecar.counts[b]) {
      throw IncompatibleCheckpoint("checkpoint parameter block " + std::to_string(b) + " has " +
                                   std::to_string(sizes[b]) + " values, model expects " +
                                   std::to_string(params[b].size()));
    }
  }
  // Read everything into scratch first so a truncated blob leaves the model untouched.
  std::vector<std::vector<float>> staged(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    staged[b].resize(sizes[b]);
    get_floats(in, staged[b], blob);
  }
  const auto stored_optimizer = get<std::uint8_t>(in, blob);
  Adam staged_optimizer(std::vector<std::size_t>(sizes.begin(), sizes.end()));
  if (stored_optimizer) {
    staged_optimizer.set_steps(get<std::int64_t>(in, blob));
    for (auto& m : staged_optimizer.first_moments()) get_floats(in, m, blob);
    for (auto& v : staged_optimizer.second_moments()) get_floats(in, v, blob);
  }
  const auto iteration = get<std::int64_t>(in, blob);
  if (iteration != sidecar.meta.iteration) throw IncompatibleCheckpoint("blob and sidecar disagree on the iteration");
  for (std::size_t b = 0; b < blocks; ++b) std::copy(staged[b].begin(), staged[b].end(), params[b].begin());
  if (optimizer) *optimizer = std::move(staged_optimizer);
  if (has_optimizer) *has_optimizer = stored_optimizer != 0;
}

}  // namespace

std::string checkpoint_blob_path(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".json") p.replace_extension(".bin");
  return p.string();
}

std::string checkpoint_sidecar_path(const std::string& path) {
  fs::path p(checkpoint_blob_path(path));
  p.replace_extension(".json");
  return p.string();
}

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, const SceneModel<float>& model,
                     const Adam* optimizer) {
  const std::string blob = checkpoint_blob_path(path);
  if (fs::path(blob).has_parent_path()) fs::create_directories(fs::path(blob).parent_path());
  const auto params = model.parameter_blocks();
  std::vector<std::size_t> counts;
  for (const auto& p : params) counts.push_back(p.size());
  {
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint blob " + blob);
    out.write(kMagic, 8);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t n : counts) put<std::uint64_t>(out, n);
    for (const auto& p : params) put_floats(out, p);
    put<std::uint8_t>(out, optimizer ? 1 : 0);
    if (optimizer) {
      put<std::int64_t>(out, optimizer->steps());
      for (const auto& m : optimizer->first_moments()) put_floats(out, m);
      for (const auto& v : optimizer->second_moments()) put_floats(out, v);
    }
    put<std::int64_t>(out, meta.iteration);
    if (!out) throw IoError("failed writing checkpoint blob " + blob);
  }
  std::ofstream side(checkpoint_sidecar_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot write checkpoint sidecar " + checkpoint_sidecar_path(path));
  side << meta_to_json(meta, counts).dump(2) << "\n";
  if (!side) throw IoError("failed writing checkpoint sidecar " + checkpoint_sidecar_path(path));
}

CheckpointMeta read_checkpoint_meta(const std::string& path) { return read_sidecar(path).meta; }

Checkpoint load_checkpoint(const std::string& path) {
  const Sidecar sidecar = read_sidecar(path);
  Checkpoint ckpt;
  ckpt.meta = sidecar.meta;
  ckpt.model = SceneModel<float>(sidecar.meta.model, sidecar.meta.box, 0);
  read_blob(path, sidecar, ckpt.model, &ckpt.optimizer, &ckpt.has_optimizer);
  return ckpt;
}

CheckpointMeta load_checkpoint_into(const std::string& path, SceneModel<float>& model, Adam* optimizer) {
  const Sidecar sidecar = read_sidecar(path);
  if (!(sidecar.meta.model == model.config())) {
    throw IncompatibleCheckpoint("checkpoint architecture " + to_json(sidecar.meta.model).dump() +
                                 " does not match the model " + to_json(model.config()).dump());
  }
  read_blob(path, sidecar, model, optimizer, nullptr);
  return sidecar.meta;
}

}  // namespace tissuefield
