#include "tissuefield/config.hpp"

#include <algorithm>
#include <fstream>

#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw InvalidArgument(std::string("unknown ") + where + " key '" + key + "'");
    }
  }
}

}  // namespace

void check_json_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* where) {
  check_keys(j, known, where);
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid training config: ") + what);
  };
  require(patch_size >= 3, "patch_size must be >= 3");
  require(rays_per_batch > 0 && rays_per_batch % (patch_size * patch_size) == 0,
          "rays_per_batch must be a positive multiple of patch_size^2");
  require(samples_per_ray >= 2, "samples_per_ray must be >= 2");
  require(surface_fraction >= 0.0 && surface_fraction <= 1.0, "surface_fraction must be in [0, 1]");
  require(iterations >= 0, "iterations must be >= 0");
  require(learning_rate > 0.0 && learning_rate_final > 0.0, "learning rates must be positive");
  require(huber_delta > 0.0 && robust_scale > 0.0, "huber_delta and robust_scale must be positive");
  require(sigma_start > 0.0 && sigma_end > 0.0, "sigma schedule must be positive");
  require(probe_stride >= 1, "probe_stride must be >= 1");
  require(checkpoint_every >= 0 && holdout_every >= 0, "cadences must be >= 0");
  weights.validate();
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["deformation"] = {{"hidden_layers", c.deformation.hidden_layers},
                      {"width", c.deformation.width},
                      {"skips", c.deformation.skips},
                      {"position_frequencies", c.deformation.position_frequencies},
                      {"time_frequencies", c.deformation.time_frequencies},
                      {"output_init_scale", c.deformation.output_init_scale}};
  j["canonical"] = {{"hidden_layers", c.canonical.hidden_layers},
                    {"width", c.canonical.width},
                    {"skips", c.canonical.skips},
                    {"color_width", c.canonical.color_width},
                    {"position_frequencies", c.canonical.position_frequencies},
                    {"direction_frequencies", c.canonical.direction_frequencies}};
  j["unnormalized_translation"] = c.translation_mode == se3::TranslationMode::kUnnormalized;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"deformation", "canonical", "unnormalized_translation"}, "model");
  ModelConfig c;
  if (j.contains("deformation")) {
    const auto& d = j["deformation"];
    check_keys(d, {"hidden_layers", "width", "skips", "position_frequencies", "time_frequencies", "output_init_scale"},
               "deformation");
    read(d, "hidden_layers", c.deformation.hidden_layers);
    read(d, "width", c.deformation.width);
    read(d, "skips", c.deformation.skips);
    read(d, "position_frequencies", c.deformation.position_frequencies);
    read(d, "time_frequencies", c.deformation.time_frequencies);
    read(d, "output_init_scale", c.deformation.output_init_scale);
  }
  if (j.contains("canonical")) {
    const auto& n = j["canonical"];
    check_keys(n, {"hidden_layers", "width", "skips", "color_width", "position_frequencies", "direction_frequencies"},
               "canonical");
    read(n, "hidden_layers", c.canonical.hidden_layers);
    read(n, "width", c.canonical.width);
    read(n, "skips", c.canonical.skips);
    read(n, "color_width", c.canonical.color_width);
    read(n, "position_frequencies", c.canonical.position_frequencies);
    read(n, "direction_frequencies", c.canonical.direction_frequencies);
  }
  bool unnormalized = false;
  read(j, "unnormalized_translation", unnormalized);
  c.translation_mode = unnormalized ? se3::TranslationMode::kUnnormalized : se3::TranslationMode::kNormalizedAxis;
  return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"rays_per_batch", "patch_size", "samples_per_ray", "surface_fraction", "depth_guided", "iterations",
              "learning_rate", "learning_rate_final", "weights", "huber_delta", "robust_scale", "probe_stride", "sigma_start",
              "sigma_end", "near", "far", "seed", "checkpoint_every", "holdout_every", "frames", "model"},
             "config");
  TrainConfig c;
  read(j, "rays_per_batch", c.rays_per_batch);
  read(j, "patch_size", c.patch_size);
  read(j, "samples_per_ray", c.samples_per_ray);
  read(j, "surface_fraction", c.surface_fraction);
  read(j, "depth_guided", c.depth_guided);
  read(j, "iterations", c.iterations);
  read(j, "learning_rate", c.learning_rate);
  read(j, "learning_rate_final", c.learning_rate_final);
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    check_keys(w, {"depth", "jacobian", "gradient", "smooth", "tv"}, "weights");
    read(w, "depth", c.weights.depth);
    read(w, "jacobian", c.weights.jacobian);
    read(w, "gradient", c.weights.gradient);
    read(w, "smooth", c.weights.smooth);
    read(w, "tv", c.weights.tv);
  }
  read(j, "huber_delta", c.huber_delta);
  read(j, "robust_scale", c.robust_scale);
  read(j, "probe_stride", c.probe_stride);
  read(j, "sigma_start", c.sigma_start);
  read(j, "sigma_end", c.sigma_end);
  read(j, "near", c.near);
  read(j, "far", c.far);
  read(j, "seed", c.seed);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "holdout_every", c.holdout_every);
  read(j, "frames", c.frames);
  if (j.contains("model")) c.model = model_config_from_json(j["model"]);
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["rays_per_batch"] = c.rays_per_batch;
  j["patch_size"] = c.patch_size;
  j["samples_per_ray"] = c.samples_per_ray;
  j["surface_fraction"] = c.surface_fraction;
  j["depth_guided"] = c.depth_guided;
  j["iterations"] = c.iterations;
  j["learning_rate"] = c.learning_rate;
  j["learning_rate_final"] = c.learning_rate_final;
  j["weights"] = {{"depth", c.weights.depth},
                  {"jacobian", c.weights.jacobian},
                  {"gradient", c.weights.gradient},
                  {"smooth", c.weights.smooth},
                  {"tv", c.weights.tv}};
  j["huber_delta"] = c.huber_delta;
  j["robust_scale"] = c.robust_scale;
  j["probe_stride"] = c.probe_stride;
  j["sigma_start"] = c.sigma_start;
  j["sigma_end"] = c.sigma_end;
  j["near"] = c.near;
  j["far"] = c.far;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["holdout_every"] = c.holdout_every;
  j["frames"] = c.frames;
  j["model"] = to_json(c.model);
  return j;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed config " + path + ": " + e.what());
  }
  return train_config_from_json(j);
}

std::vector<int> held_out_frames(const TrainConfig& config, int frame_count) {
  std::vector<int> out;
  if (config.holdout_every <= 0) return out;
  for (int i = 0; i < frame_count; ++i) {
    if (i % config.holdout_every == config.holdout_every / 2) out.push_back(i);
  }
  return out;
}

std::vector<int> training_frames(const TrainConfig& config, int frame_count) {
  const std::vector<int> held = held_out_frames(config, frame_count);
  std::vector<int> out;
  if (!config.frames.empty()) {
    for (int i : config.frames) {
      if (i < 0 || i >= frame_count) throw InvalidArgument("config frame index " + std::to_string(i) + " out of range");
      out.push_back(i);
    }
    return out;
  }
  for (int i = 0; i < frame_count; ++i) {
    if (!std::binary_search(held.begin(), held.end(), i)) out.push_back(i);
  }
  if (out.empty()) throw InvalidArgument("no training frames left after the holdout");
  return out;
}

}  // namespace tissuefield
