#pragma once

// Dataset directory layout:
//   meta.json            fx, fy, cx, cy, width, height, near, far, frame_count
//   frames/%06d.png      8-bit RGB
//   masks/%06d.png       8-bit, 0 (tool) or 255 (tissue)
//   depth/%06d.pfm       32-bit float relative depth

#include <string>
#include <vector>

#include "tissuefield/camera.hpp"
#include "tissuefield/image.hpp"

namespace tissuefield {

struct FrameRecord {
  int index = 0;
  double time = 0.0;  // index / frame_count
  Image image;        // H x W x 3 in [0, 1]
  Image mask;         // H x W, 1 = tissue, 0 = tool
  Image depth;        // H x W relative depth
  Image laplacian;    // H x W, |5-point Laplacian| averaged over channels
};

struct Dataset {
  PinholeCamera camera;
  std::vector<FrameRecord> frames;
};

std::string frame_path(const std::string& dir, int index);
std::string mask_path(const std::string& dir, int index);
std::string depth_path(const std::string& dir, int index);

/// Loads, validates and precomputes per-frame data; frames sorted by index.
Dataset ingest(const std::string& dir);

/// Writes every frame and meta.json; inverse of ``ingest`` up to 8-bit quantization.
void write_dataset(const std::string& dir, const Dataset& dataset);

PinholeCamera read_meta(const std::string& path, int* frame_count);
void write_meta(const std::string& path, const PinholeCamera& camera, int frame_count);

/// Mean over channels of |5-point Laplacian|, with edge pixels replicated.
Image color_laplacian(const Image& image);

/// One affine map for the whole video sending the 2nd and 98th percentiles of
/// unmasked depth to near and far, then clamped to [near, far].
std::vector<Image> normalize_depth(const std::vector<Image>& depths, const std::vector<Image>& masks,
                                   double near, double far);

/// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

}  // namespace tissuefield
