#include "rriqa/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "rriqa/errors.hpp"

namespace rriqa {
namespace {

// Incremental PPM header tokenizer. Whitespace separates tokens; '#'
// starts a comment running to end of line.
class PpmReader {
 public:
  explicit PpmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string next_token() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(Err::CorruptFile, "truncated PPM header");
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    }
    return tok;
  }

  int next_int(const char* what, int max_value) {
    const std::string tok = next_token();
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      fail(Err::CorruptFile, std::string("bad ") + what + " '" + tok + "'");
    long v = std::strtol(tok.c_str(), nullptr, 10);
    if (v < 0 || v > max_value)
      fail(Err::CorruptFile, std::string(what) + " out of range: " + tok);
    return static_cast<int>(v);
  }

  // P6 payload begins after exactly one whitespace byte following maxval.
  std::span<const std::uint8_t> binary_rest() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      fail(Err::CorruptFile, "missing separator before P6 payload");
    ++pos_;
    return bytes_.subspan(pos_);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) fail(Err::CorruptFile, "file too short for a PPM header");
  const char m0 = static_cast<char>(bytes[0]);
  const char m1 = static_cast<char>(bytes[1]);
  if (m0 != 'P') fail(Err::UnsupportedFormat, "not a PNM file");
  if (m1 == '1' || m1 == '2' || m1 == '4' || m1 == '5')
    fail(Err::NonRgb, "grayscale/bitmap PNM rejected, need RGB (P3/P6)");
  if (m1 != '3' && m1 != '6')
    fail(Err::UnsupportedFormat, std::string("unsupported PNM type P") + m1);
  const bool binary = (m1 == '6');

  PpmReader rd(bytes.subspan(2));
  const int width = rd.next_int("width", 1 << 20);
  const int height = rd.next_int("height", 1 << 20);
  if (width == 0 || height == 0) fail(Err::CorruptFile, "zero image dimension");
  const int maxval = rd.next_int("maxval", 1 << 16);
  if (maxval != 255)
    fail(Err::UnsupportedFormat, "only maxval 255 is supported, got " +
                                     std::to_string(maxval));

  RgbImage img;
  img.width = width;
  img.height = height;
  const std::size_t n = img.pixel_count();
  img.r.resize(n);
  img.g.resize(n);
  img.b.resize(n);

  if (binary) {
    const auto payload = rd.binary_rest();
    if (payload.size() < n * 3) fail(Err::CorruptFile, "truncated P6 payload");
    for (std::size_t i = 0; i < n; ++i) {
      img.r[i] = payload[3 * i + 0] / 255.0;
      img.g[i] = payload[3 * i + 1] / 255.0;
      img.b[i] = payload[3 * i + 2] / 255.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      img.r[i] = rd.next_int("sample", 255) / 255.0;
      img.g[i] = rd.next_int("sample", 255) / 255.0;
      img.b[i] = rd.next_int("sample", 255) / 255.0;
    }
  }
  return img;
}

RgbImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Err::IoError, "read failure on " + path.string());

  RgbImage img = decode_ppm(bytes);
  if (img.width < kMinImageSide || img.height < kMinImageSide)
    fail(Err::TooSmall, path.string() + " is " + std::to_string(img.width) +
                            "x" + std::to_string(img.height) + ", need >= " +
                            std::to_string(kMinImageSide) + " per side");
  return img;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixel_count() * 3);
  auto quantize = [](double v) {
    const double q = std::lround(v * 255.0);
    return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
  };
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    out.push_back(quantize(img.r[i]));
    out.push_back(quantize(img.g[i]));
    out.push_back(quantize(img.b[i]));
  }
  return out;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Err::IoError, "write failure on " + path.string());
}

RgbImage crop_to_pyramid_size(const RgbImage& img, int scales) {
  if (scales < 1) fail(Err::BadDimensions, "scales must be >= 1");
  const int block = 1 << scales;
  const int new_w = (img.width / block) * block;
  const int new_h = (img.height / block) * block;
  if (new_w == 0 || new_h == 0)
    fail(Err::TooSmall, "image smaller than one " + std::to_string(block) +
                            "-pixel block");
  if (new_w == img.width && new_h == img.height) return img;

  const int x0 = (img.width - new_w) / 2;
  const int y0 = (img.height - new_h) / 2;
  RgbImage out;
  out.width = new_w;
  out.height = new_h;
  for (int c = 0; c < 3; ++c) {
    const auto& src = img.channel(c);
    auto& dst = out.channel(c);
    dst.resize(static_cast<std::size_t>(new_w) * new_h);
    for (int y = 0; y < new_h; ++y) {
      const double* s = src.data() + static_cast<std::size_t>(y + y0) * img.width + x0;
      std::copy(s, s + new_w, dst.data() + static_cast<std::size_t>(y) * new_w);
    }
  }
  return out;
}

}  // namespace rriqa
