#pragma once

#include <cstddef>
#include <vector>

namespace tissuefield {

/// Row-major float image with interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int width_, int height_, int channels_, float fill = 0.0f)
      : width(width_),
        height(height_),
        channels(channels_),
        data(static_cast<std::size_t>(width_) * height_ * channels_, fill) {}

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }
  float& at(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
  float at(int row, int col, int ch = 0) const { return data[index(row, col, ch)]; }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
  bool same_extent(const Image& other) const {
    return width == other.width && height == other.height;
  }
};

}  // namespace tissuefield
