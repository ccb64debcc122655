#include "tissuefield/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tissuefield/errors.hpp"
#include "tissuefield/image_io.hpp"

namespace tissuefield {

namespace fs = std::filesystem;

namespace {

std::string numbered(const std::string& dir, const char* sub, int index, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.%s", index, ext);
  return (fs::path(dir) / sub / name).string();
}

double required_number(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw IngestionError(std::string("meta.json lacks numeric field '") + key + "'", path);
  }
  return j[key].get<double>();
}

}  // namespace

std::string frame_path(const std::string& dir, int index) { return numbered(dir, "frames", index, "png"); }
std::string mask_path(const std::string& dir, int index) { return numbered(dir, "masks", index, "png"); }
std::string depth_path(const std::string& dir, int index) { return numbered(dir, "depth", index, "pfm"); }

PinholeCamera read_meta(const std::string& path, int* frame_count) {
  std::ifstream in(path);
  if (!in) throw IngestionError("missing dataset metadata", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed metadata (") + e.what() + ")", path);
  }
  PinholeCamera cam;
  cam.fx = required_number(j, "fx", path);
  cam.fy = required_number(j, "fy", path);
  cam.cx = required_number(j, "cx", path);
  cam.cy = required_number(j, "cy", path);
  cam.width = static_cast<int>(required_number(j, "width", path));
  cam.height = static_cast<int>(required_number(j, "height", path));
  cam.near = required_number(j, "near", path);
  cam.far = required_number(j, "far", path);
  if (frame_count) *frame_count = static_cast<int>(required_number(j, "frame_count", path));
  try {
    cam.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("invalid camera in ") + path + ": " + e.what());
  }
  return cam;
}

void write_meta(const std::string& path, const PinholeCamera& camera, int frame_count) {
  nlohmann::ordered_json j;
  j["fx"] = camera.fx;
  j["fy"] = camera.fy;
  j["cx"] = camera.cx;
  j["cy"] = camera.cy;
  j["width"] = camera.width;
  j["height"] = camera.height;
  j["near"] = camera.near;
  j["far"] = camera.far;
  j["frame_count"] = frame_count;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Image color_laplacian(const Image& image) {
  Image out(image.width, image.height, 1);
  const int h = image.height, w = image.width;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      float sum = 0.0f;
      for (int ch = 0; ch < image.channels; ++ch) {
        const float center = image.at(r, c, ch);
        const float lap = image.at(std::max(r - 1, 0), c, ch) + image.at(std::min(r + 1, h - 1), c, ch) +
                          image.at(r, std::max(c - 1, 0), ch) + image.at(r, std::min(c + 1, w - 1), ch) -
                          4.0f * center;
        sum += lap;
      }
      out.at(r, c) = std::abs(sum / static_cast<float>(image.channels));
    }
  }
  return out;
}

Dataset ingest(const std::string& dir) {
  const std::string meta = (fs::path(dir) / "meta.json").string();
  int count = 0;
  Dataset ds;
  ds.camera = read_meta(meta, &count);
  if (count < 2) throw ValidationError("dataset needs at least two frames, meta.json declares " + std::to_string(count));
  ds.frames.resize(count);
  for (int i = 0; i < count; ++i) {
    for (const std::string& p : {frame_path(dir, i), mask_path(dir, i), depth_path(dir, i)}) {
      if (!fs::exists(p)) throw IngestionError("missing dataset file", p);
    }
    FrameRecord& f = ds.frames[i];
    f.index = i;
    f.time = static_cast<double>(i) / count;
    try {
      f.image = read_png(frame_path(dir, i), 3);
      f.mask = read_png(mask_path(dir, i), 1);
      f.depth = read_pfm(depth_path(dir, i));
    } catch (const IoError& e) {
      throw IngestionError(e.what(), frame_path(dir, i));
    }
    auto check = [&](const Image& img, const std::string& path) {
      if (img.width != ds.camera.width || img.height != ds.camera.height) {
        throw ValidationError(path + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              ", expected " + std::to_string(ds.camera.width) + "x" +
                              std::to_string(ds.camera.height));
      }
    };
    check(f.image, frame_path(dir, i));
    check(f.mask, mask_path(dir, i));
    check(f.depth, depth_path(dir, i));
    if (f.depth.channels != 1) throw ValidationError(depth_path(dir, i) + " must be single-channel");
    for (float& m : f.mask.data) m = m >= 0.5f ? 1.0f : 0.0f;
    for (std::size_t p = 0; p < f.depth.data.size(); ++p) {
      if (f.mask.data[p] > 0.0f && !std::isfinite(f.depth.data[p])) {
        throw ValidationError(depth_path(dir, i) + " has non-finite depth on tissue pixels");
      }
    }
    f.laplacian = color_laplacian(f.image);
  }
  return ds;
}

void write_dataset(const std::string& dir, const Dataset& dataset) {
  for (const char* sub : {"frames", "masks", "depth"}) fs::create_directories(fs::path(dir) / sub);
  write_meta((fs::path(dir) / "meta.json").string(), dataset.camera, static_cast<int>(dataset.frames.size()));
  for (const FrameRecord& f : dataset.frames) {
    write_png(frame_path(dir, f.index), f.image);
    write_png(mask_path(dir, f.index), f.mask);
    write_pfm(depth_path(dir, f.index), f.depth);
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<Image> normalize_depth(const std::vector<Image>& depths, const std::vector<Image>& masks,
                                   double near, double far) {
  if (!(near < far)) throw InvalidArgument("normalize_depth requires near < far");
  if (depths.size() != masks.size()) throw InvalidArgument("depth and mask counts differ");
  std::vector<double> values;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!depths[i].same_extent(masks[i])) throw InvalidArgument("depth and mask sizes differ");
    for (std::size_t p = 0; p < depths[i].data.size(); ++p) {
      if (masks[i].data[p] >= 0.5f && std::isfinite(depths[i].data[p])) values.push_back(depths[i].data[p]);
    }
  }
  if (values.empty()) throw NormalizationError("no unmasked depth values to normalize");
  const double lo = percentile(values, 2.0);
  const double hi = percentile(values, 98.0);
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
    throw NormalizationError("depth maps are degenerate (2nd and 98th percentiles coincide)");
  }
  const double gain = (far - near) / (hi - lo);
  std::vector<Image> out = depths;
  for (Image& img : out) {
    for (float& v : img.data) {
      v = std::isfinite(v) ? static_cast<float>(std::clamp(near + (v - lo) * gain, near, far))
                           : static_cast<float>(far);
    }
  }
  return out;
}

}  // namespace tissuefield
