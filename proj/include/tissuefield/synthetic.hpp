#pragma once

// Analytic deforming scenes with exact ground truth: Gaussian density blobs,
// each moving rigidly under its own time-varying screw, optionally in front
// of an opaque textured backdrop. Rendered by fine quadrature.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tissuefield/camera.hpp"
#include "tissuefield/dataset.hpp"
#include "tissuefield/fields.hpp"
#include "tissuefield/render.hpp"

namespace tissuefield {

struct SyntheticBlob {
  Eigen::Vector3d center = Eigen::Vector3d(0.0, 0.0, 1.0);
  double radius = 0.1;
  double peak = 50.0;  // density at the center, per scene unit
  Eigen::Vector3d color = Eigen::Vector3d(1.0, 0.5, 0.5);
  /// Amplitude of the motion screw, applied about the blob center.
  se3::ScrewAxis motion;
  double frequency = 1.0;  // cycles over t in [0, 1]

  /// Canonical-to-observed motion is undone by this map: observed x at time
  /// t has density tau(motion_at(t).apply(x - center) + center).
  se3::RigidTransform motion_at(double t) const;
  /// Observed position of the blob center at time t.
  Eigen::Vector3d center_at(double t) const;
};

struct SyntheticBackdrop {
  double z = 2.0;          // the half-space z >= z is opaque
  double density = 200.0;  // per scene unit
  Eigen::Vector3d color = Eigen::Vector3d(0.7, 0.35, 0.3);
  double texture_amplitude = 0.15;
  double texture_frequency = 6.0;  // radians per scene unit
};

struct DepthCorruption {
  double scale = 0.8;
  double offset = 0.1;  // fraction of far - near
  double noise = 0.01;  // std dev as a fraction of far - near
};

/// Rectangle of tool pixels (mask 0) moving linearly from ``start`` to ``end``.
struct MaskRectangle {
  int width = 0;
  int height = 0;
  PixelCoord start;
  PixelCoord end;
};

struct SyntheticScene {
  PinholeCamera camera;
  int frames = 16;
  std::vector<SyntheticBlob> blobs;
  std::optional<SyntheticBackdrop> backdrop;
  std::optional<DepthCorruption> corruption = DepthCorruption{};
  std::optional<MaskRectangle> mask_rectangle;
  int quadrature_steps = 1024;
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticScene synthetic_scene_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SyntheticScene& scene);
SyntheticScene load_synthetic_scene(const std::string& path);

/// The observed scene at a fixed time as a radiance source (view-independent).
class SyntheticField final : public RadianceSource {
 public:
  SyntheticField(const SyntheticScene& scene, double t);
  Radiance radiance(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const override;

 private:
  const SyntheticScene* scene_;
  std::vector<se3::RigidTransform> motions_;
};

/// Midpoint quadrature sample distances over [near, far].
std::vector<double> quadrature_samples(double near, double far, int steps);

/// Fine-quadrature oracle render of one ray at the given time.
RadianceOutput render_oracle_ray(const SyntheticScene& scene, const Ray& ray);

struct OracleFrame {
  Image color;  // H x W x 3
  Image depth;  // H x W expected ray distance, 0 where nothing accumulates
  Image acc;    // H x W
};

/// Full-frame oracle render at time t for an optional camera pose.
OracleFrame render_oracle(const SyntheticScene& scene, double t,
                          const std::optional<se3::RigidTransform>& pose = std::nullopt);

/// Mask image of frame i (1 = tissue).
Image synthetic_mask(const SyntheticScene& scene, int frame);

/// Renders every frame, applies the depth corruption and returns a dataset
/// with times i / frames.
Dataset generate_synthetic(const SyntheticScene& scene);
/// Same, written to a dataset directory.
void generate_synthetic(const SyntheticScene& scene, const std::string& out_dir);

}  // namespace tissuefield
