#pragma once

#include "tissuefield/config.hpp"
#include "tissuefield/synthetic.hpp"

namespace tissuefield::testing {

/// Small two-blob scene in front of a backdrop, cheap enough for unit tests.
inline SyntheticScene tiny_scene(int frames = 4, int size = 16) {
  SyntheticScene s;
  s.camera.fx = s.camera.fy = size;
  s.camera.cx = s.camera.cy = size / 2.0;
  s.camera.width = s.camera.height = size;
  s.camera.near = 0.5;
  s.camera.far = 2.5;
  s.frames = frames;
  s.quadrature_steps = 128;
  SyntheticBlob a;
  a.center = Eigen::Vector3d(-0.15, 0.0, 1.3);
  a.radius = 0.15;
  a.peak = 40.0;
  a.color = Eigen::Vector3d(0.9, 0.3, 0.3);
  a.motion.b = Eigen::Vector3d(0.06, 0.0, 0.0);
  SyntheticBlob b = a;
  b.center = Eigen::Vector3d(0.2, 0.1, 1.5);
  b.color = Eigen::Vector3d(0.3, 0.8, 0.5);
  b.motion.b = Eigen::Vector3d(0.0, -0.05, 0.0);
  s.blobs = {a, b};
  s.backdrop = SyntheticBackdrop{};
  return s;
}

inline TrainConfig tiny_train_config(int iterations) {
  TrainConfig c;
  c.rays_per_batch = 64;
  c.patch_size = 4;
  c.samples_per_ray = 12;
  c.iterations = iterations;
  c.learning_rate = 3e-3;
  c.learning_rate_final = 1e-3;
  c.checkpoint_every = 0;
  c.holdout_every = 0;
  c.model.deformation.hidden_layers = 2;
  c.model.deformation.width = 16;
  c.model.deformation.skips = {};
  c.model.deformation.position_frequencies = 3;
  c.model.deformation.time_frequencies = 2;
  c.model.canonical.hidden_layers = 2;
  c.model.canonical.width = 24;
  c.model.canonical.skips = {};
  c.model.canonical.color_width = 12;
  c.model.canonical.position_frequencies = 4;
  c.model.canonical.direction_frequencies = 1;
  return c;
}

}  // namespace tissuefield::testing
