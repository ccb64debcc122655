#pragma once

// Training configuration, read from and written to JSON. Every key is
// optional; missing keys keep the defaults below.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tissuefield/model.hpp"
#include "tissuefield/objective.hpp"

namespace tissuefield {

struct TrainConfig {
  int rays_per_batch = 1024;  // multiple of patch_size^2
  int patch_size = 4;
  int samples_per_ray = 64;
  double surface_fraction = 0.75;
  bool depth_guided = true;
  int iterations = 50000;
  double learning_rate = 5e-4;
  double learning_rate_final = 5e-5;
  LossWeights weights;
  double huber_delta = 0.2;   // normalized depth units
  double robust_scale = 0.03;
  /// Jacobian and TV terms use every probe_stride-th sample of the batch.
  int probe_stride = 1;
  double sigma_start = 0.05;  // fractions of far - near
  double sigma_end = 0.01;
  /// Scene bounds; negative means "take them from meta.json".
  double near = -1.0;
  double far = -1.0;
  std::uint64_t seed = 0;
  int checkpoint_every = 5000;
  /// Every k-th frame (index % k == k / 2) is held out; 0 trains on all frames.
  int holdout_every = 8;
  /// Restricts training to these frame indices when non-empty.
  std::vector<int> frames;
  ModelConfig model;

  int patches_per_batch() const { return rays_per_batch / (patch_size * patch_size); }
  /// Throws InvalidArgument on unusable values.
  void validate() const;
};

/// Throws InvalidArgument when ``j`` is not an object or has keys outside ``known``.
void check_json_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* where);

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig load_train_config(const std::string& path);

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Frame indices used for training and held out under ``config``.
std::vector<int> training_frames(const TrainConfig& config, int frame_count);
std::vector<int> held_out_frames(const TrainConfig& config, int frame_count);

}  // namespace tissuefield
