#include "tissuefield/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tissuefield/errors.hpp"

namespace tissuefield {

Image read_png(const std::string& path, int channels) {
  if (channels != 1 && channels != 3) throw InvalidArgument("PNG channels must be 1 or 3");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path + ": " + png.message);
  }
  png.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path + ": " + message);
  }
  Image image(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  for (std::size_t i = 0; i < buffer.size(); ++i) image.data[i] = buffer[i] / 255.0f;
  return image;
}

void write_png(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw InvalidArgument("PNG channels must be 1 or 3");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const float v = std::isfinite(image.data[i]) ? std::clamp(image.data[i], 0.0f, 1.0f) : 0.0f;
    buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path + ": " + png.message);
  }
}

Image read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PFM " + path);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  in.get();  // single whitespace byte before the raster
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else throw IoError("not a PFM file: " + path);
  if (!in || width <= 0 || height <= 0 || scale == 0.0) throw IoError("malformed PFM header: " + path);
  const bool little = scale < 0.0;
  Image image(width, height, channels);
  const std::size_t row_values = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint32_t> row(row_values);
  for (int r = height - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_values * 4));
    if (!in) throw IoError("truncated PFM raster: " + path);
    for (std::size_t i = 0; i < row_values; ++i) {
      std::uint32_t bits = row[i];
      if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
      float v;
      std::memcpy(&v, &bits, 4);
      image.data[static_cast<std::size_t>(r) * row_values + i] = v;
    }
  }
  return image;
}

void write_pfm(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw InvalidArgument("PFM channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PFM " + path);
  out << (image.channels == 1 ? "Pf" : "PF") << "\n" << image.width << " " << image.height << "\n-1.0\n";
  const std::size_t row_values = static_cast<std::size_t>(image.width) * image.channels;
  std::vector<std::uint32_t> row(row_values);
  for (int r = image.height - 1; r >= 0; --r) {
    for (std::size_t i = 0; i < row_values; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &image.data[static_cast<std::size_t>(r) * row_values + i], 4);
      if (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
      row[i] = bits;
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row_values * 4));
  }
  if (!out) throw IoError("failed writing PFM " + path);
}

}  // namespace tissuefield
