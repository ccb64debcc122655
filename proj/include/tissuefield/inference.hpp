#pragma once

// Rendering a trained model at arbitrary times and poses, point-cloud export
// and per-frame evaluation against a dataset.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tissuefield/checkpoint.hpp"
#include "tissuefield/dataset.hpp"
#include "tissuefield/image.hpp"
#include "tissuefield/model.hpp"

namespace tissuefield {

struct ViewOptions {
  /// Camera-to-scene pose applied to every ray.
  std::optional<se3::RigidTransform> pose;
  /// Renders every stride-th pixel in each direction.
  int stride = 1;
  /// Per-pixel depth prior in scene units (full resolution); without it a
  /// coarse uniform pass supplies the guide.
  const Image* prior = nullptr;
  int chunk_rays = 4096;
};

struct RenderedView {
  Image color;  // 3 channels
  Image depth;  // ray distance, scene units
  Image acc;
};

/// Throws InvalidArgument if t is outside [0, 1] or stride < 1.
RenderedView render_view(const SceneModel<float>& model, const CheckpointMeta& meta, double t,
                         const ViewOptions& options = {});

/// Parses "yaw,pitch,roll,tx,ty,tz" (degrees, scene units); rotation is
/// Rz(yaw) Ry(pitch) Rx(roll).
se3::RigidTransform parse_pose(const std::string& text);

struct CloudPoint {
  Eigen::Vector3d position;
  Eigen::Vector3f color;
};

/// Back-projects every unmasked pixel (mask >= 0.5) along its ray to the
/// given ray distance.
std::vector<CloudPoint> back_project(const PinholeCamera& camera, const Image& depth, const Image& mask,
                                     const Image* color = nullptr);

/// ASCII PLY with x y z and 8-bit red green blue.
void write_ply(const std::string& path, const std::vector<CloudPoint>& points);
std::vector<CloudPoint> read_ply(const std::string& path);

struct FrameMetrics {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  nlohmann::ordered_json to_json() const;
};

/// Full-frame metrics of the model against the listed dataset frames. A
/// depth-guided model is guided by the dataset's normalized depth.
MetricReport evaluate_frames(const SceneModel<float>& model, const CheckpointMeta& meta, const Dataset& dataset,
                             const std::vector<int>& frames);

/// Frames with index % k == k / 2; every frame when k <= 0.
std::vector<int> holdout_indices(int frame_count, int k);

}  // namespace tissuefield
