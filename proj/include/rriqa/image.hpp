#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rriqa {

// Three same-sized planes of samples in [0,1], row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> r, g, b;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  const std::vector<double>& channel(int c) const {
    return c == 0 ? r : (c == 1 ? g : b);
  }
  std::vector<double>& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }
};

// Minimum image side accepted by the pipeline: a 4-scale pyramid keeps a
// 2x2 residual at the coarsest level only for sides >= 32.
inline constexpr int kMinImageSide = 32;
inline constexpr int kPyramidScales = 4;

// Decodes PPM bytes (P3 or P6, maxval 255) into [0,1] planes, any size.
// Used by load_image and by tests that need sub-minimum images.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

// Reads and validates an image file for the pipeline.
// Throws UnsupportedFormat, CorruptFile, NonRgb, TooSmall, IoError.
RgbImage load_image(const std::filesystem::path& path);

// Canonical P6 encoding: "P6\n<w> <h>\n255\n" + interleaved RGB bytes,
// samples quantized by round(v*255).
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

// Centered crop to the largest multiples of 2^scales not exceeding the
// input dimensions. Throws TooSmall when a side would become zero.
RgbImage crop_to_pyramid_size(const RgbImage& img, int scales);

}  // namespace rriqa
