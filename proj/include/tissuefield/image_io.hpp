#pragma once

// 8-bit PNG and 32-bit PFM file access. PNG values map to [0, 1].

#include <string>

#include "tissuefield/image.hpp"

namespace tissuefield {

/// Decodes to ``channels`` (1 or 3), converting the stored format if needed.
Image read_png(const std::string& path, int channels);
/// Values are clamped to [0, 1] and rounded to the nearest 8-bit level.
void write_png(const std::string& path, const Image& image);

/// Reads a 1- or 3-channel PFM in either byte order.
Image read_pfm(const std::string& path);
/// Writes little-endian PFM (negative scale), rows bottom to top as the format requires.
void write_pfm(const std::string& path, const Image& image);

}  // namespace tissuefield
