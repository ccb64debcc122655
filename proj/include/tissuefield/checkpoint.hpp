#pragma once

// Checkpoints are a binary blob (``name.bin``: parameters, optimizer state,
// iteration) plus a JSON sidecar (``name.json``) describing the architecture,
// scene box, camera and sampling settings, so a checkpoint is self-describing.

#include <cstdint>
#include <string>

#include "tissuefield/camera.hpp"
#include "tissuefield/model.hpp"
#include "tissuefield/optimizer.hpp"

namespace tissuefield {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// What inference needs to reproduce the training-time ray sampling.
struct SamplingSettings {
  int samples_per_ray = 64;
  double surface_fraction = 0.75;
  bool depth_guided = true;
  double sigma = 0.01;  // fraction of far - near
};

struct CheckpointMeta {
  ModelConfig model;
  SceneBox box;
  PinholeCamera camera;  // near/far are the training bounds
  SamplingSettings sampling;
  std::int64_t iteration = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  SceneModel<float> model;
  Adam optimizer;
  bool has_optimizer = false;
};

/// ``path`` may name either file; returns the blob and sidecar paths.
std::string checkpoint_blob_path(const std::string& path);
std::string checkpoint_sidecar_path(const std::string& path);

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, const SceneModel<float>& model,
                     const Adam* optimizer);

CheckpointMeta read_checkpoint_meta(const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Loads parameters (and optimizer state when ``optimizer`` is non-null) into
/// an existing model. Throws IncompatibleCheckpoint before touching any
/// parameter if the stored architecture differs from the model's.
CheckpointMeta load_checkpoint_into(const std::string& path, SceneModel<float>& model, Adam* optimizer);

}  // namespace tissuefield
