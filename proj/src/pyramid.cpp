#include "rriqa/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include "fft.hpp"
#include "rriqa/errors.hpp"

namespace rriqa {
namespace {

constexpr double kPi = std::numbers::pi;

// Raised-cosine radial pair with a one-octave transition on [pi/4, pi/2];
// low^2 + high^2 == 1 pointwise.
double radial_low(double rho) {
  if (rho <= kPi / 4.0) return 1.0;
  if (rho >= kPi / 2.0) return 0.0;
  return std::cos(kPi / 2.0 * std::log2(4.0 * rho / kPi));
}

double radial_high(double rho) {
  if (rho <= kPi / 4.0) return 0.0;
  if (rho >= kPi / 2.0) return 1.0;
  return std::cos(kPi / 2.0 * std::log2(2.0 * rho / kPi));
}

// cos^2 angular window, scaled so the three orientations tile:
// sum_o g(theta - o*pi/3)^2 == 1 for every theta.
const double kAngularGain = std::sqrt(8.0 / 9.0);

double angular(double theta, int orientation) {
  const double c = std::cos(theta - (orientation - 1) * kPi / 3.0);
  return kAngularGain * c * c;
}

// Signed frequency index: bins above Nyquist wrap to negative frequencies.
inline int signed_bin(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

FilterBank build_filter_bank(int width, int height) {
  const int block = 1 << FilterBank::kScales;
  if (width <= 0 || height <= 0 || width % block != 0 || height % block != 0)
    fail(Err::BadDimensions,
         "pyramid needs dimensions divisible by " + std::to_string(block) +
             ", got " + std::to_string(width) + "x" + std::to_string(height));

  FilterBank bank;
  bank.width = width;
  bank.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  bank.highpass.resize(n);
  bank.lowpass.resize(n);
  for (auto& b : bank.band) b.resize(n);

  for (int ky = 0; ky < height; ++ky) {
    const double wy = 2.0 * kPi * signed_bin(ky, height) / height;
    for (int kx = 0; kx < width; ++kx) {
      const double wx = 2.0 * kPi * signed_bin(kx, width) / width;
      const std::size_t idx = static_cast<std::size_t>(ky) * width + kx;
      const double r = std::hypot(wx, wy);
      const double theta = std::atan2(wy, wx);

      bank.highpass[idx] = radial_high(r / 2.0);
      double low_chain = radial_low(r / 2.0);
      for (int s = 1; s <= FilterBank::kScales; ++s) {
        const double band_radial = low_chain * radial_high((1 << (s - 1)) * r);
        for (int o = 1; o <= FilterBank::kOrientations; ++o) {
          bank.band[FilterBank::band_index({s, o})][idx] =
              band_radial * angular(theta, o);
        }
        low_chain *= radial_low((1 << (s - 1)) * r);
      }
      bank.lowpass[idx] = low_chain;
    }
  }
  return bank;
}

double max_tiling_deviation(const FilterBank& bank) {
  double worst = 0.0;
  for (std::size_t i = 0; i < bank.highpass.size(); ++i) {
    double acc = bank.highpass[i] * bank.highpass[i] +
                 bank.lowpass[i] * bank.lowpass[i];
    for (const auto& b : bank.band) acc += b[i] * b[i];
    worst = std::max(worst, std::abs(acc - 1.0));
  }
  return worst;
}

namespace {

// Multiply the full-resolution spectrum by a mask, keep the central
// (width/factor) x (height/factor) frequency block and invert on the small
// grid. The masks vanish on and outside the retained block's boundary, so
// the crop is alias-free.
Plane masked_band(const std::vector<std::complex<double>>& spectrum,
                  const std::vector<double>& mask, int width, int height,
                  int factor) {
  const int sw = width / factor;
  const int sh = height / factor;
  std::vector<std::complex<double>> small(static_cast<std::size_t>(sw) * sh);
  for (int ky = 0; ky < sh; ++ky) {
    const int full_ky = ky <= sh / 2 ? ky : ky - sh + height;
    for (int kx = 0; kx < sw; ++kx) {
      const int full_kx = kx <= sw / 2 ? kx : kx - sw + width;
      const std::size_t src = static_cast<std::size_t>(full_ky) * width + full_kx;
      small[static_cast<std::size_t>(ky) * sw + kx] = mask[src] * spectrum[src];
    }
  }
  detail::fft2d(sw, sh, small, /*inverse=*/true);

  Plane out;
  out.width = sw;
  out.height = sh;
  out.v.resize(small.size());
  const double scale = 1.0 / (static_cast<double>(factor) * factor);
  for (std::size_t i = 0; i < small.size(); ++i) out.v[i] = small[i].real() * scale;
  return out;
}

}  // namespace

Decomposition decompose(std::span<const double> plane, int width, int height,
                        const FilterBank& bank) {
  if (width != bank.width || height != bank.height ||
      plane.size() != static_cast<std::size_t>(width) * height)
    fail(Err::DimensionMismatch,
         "plane " + std::to_string(width) + "x" + std::to_string(height) +
             " does not match filter bank " + std::to_string(bank.width) + "x" +
             std::to_string(bank.height));

  std::vector<std::complex<double>> spectrum(plane.begin(), plane.end());
  detail::fft2d(width, height, spectrum, /*inverse=*/false);

  Decomposition dec;
  dec.width = width;
  dec.height = height;
  dec.highpass = masked_band(spectrum, bank.highpass, width, height, 1);
  for (int s = 1; s <= FilterBank::kScales; ++s) {
    for (int o = 1; o <= FilterBank::kOrientations; ++o) {
      const SubbandKey key{s, o};
      dec.bands[FilterBank::band_index(key)] =
          masked_band(spectrum, bank.band_mask(key), width, height,
                      FilterBank::downsample_factor(s));
    }
  }
  dec.lowpass = masked_band(spectrum, bank.lowpass, width, height,
                            FilterBank::lowpass_factor());
  return dec;
}

std::vector<SubbandKey> default_selection() {
  return {{1, 1}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 3}};
}

std::vector<CoefficientMatrix> select_subbands(
    const std::array<Decomposition, 3>& channels,
    std::span<const SubbandKey> selection) {
  if (selection.size() != 6)
    fail(Err::BadSelection,
         "selection must name exactly 6 subbands, got " +
             std::to_string(selection.size()));
  std::set<SubbandKey> seen;
  for (const auto& key : selection) {
    if (key.scale < 1 || key.scale > FilterBank::kScales ||
        key.orientation < 1 || key.orientation > FilterBank::kOrientations)
      fail(Err::BadSelection, "subband (" + std::to_string(key.scale) + "," +
                                  std::to_string(key.orientation) +
                                  ") out of range");
    if (!seen.insert(key).second)
      fail(Err::BadSelection, "duplicate subband (" +
                                  std::to_string(key.scale) + "," +
                                  std::to_string(key.orientation) + ")");
  }
  for (int c = 1; c < 3; ++c) {
    if (channels[c].width != channels[0].width ||
        channels[c].height != channels[0].height)
      fail(Err::DimensionMismatch, "channel decompositions differ in size");
  }

  std::vector<CoefficientMatrix> out;
  out.reserve(selection.size());
  for (const auto& key : selection) {
    const std::size_t n = channels[0].band(key).v.size();
    CoefficientMatrix cm;
    cm.key = key;
    cm.data.resize(3, static_cast<Eigen::Index>(n));
    for (int c = 0; c < 3; ++c) {
      const auto& v = channels[c].band(key).v;
      if (v.size() != n)
        fail(Err::DimensionMismatch, "channel decompositions differ in size");
      Eigen::Map<const Eigen::RowVectorXd> row(v.data(),
                                               static_cast<Eigen::Index>(n));
      cm.data.row(c) = row.array() - row.mean();
    }
    out.push_back(std::move(cm));
  }
  return out;
}

void write_plane_dump(const Plane& plane, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoError, "cannot open " + path.string() + " for writing");
  const char magic[4] = {'S', 'P', 'B', 'D'};
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(plane.width),
                                   static_cast<std::uint32_t>(plane.height), 0};
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(plane.v.data()),
            static_cast<std::streamsize>(plane.v.size() * sizeof(double)));
  if (!out) fail(Err::IoError, "write failure on " + path.string());
}

Plane read_plane_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path.string());
  char magic[4];
  std::uint32_t header[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, "SPBD", 4) != 0)
    fail(Err::ParseError, path.string() + " is not a subband dump");
  Plane plane;
  plane.width = static_cast<int>(header[0]);
  plane.height = static_cast<int>(header[1]);
  plane.v.resize(static_cast<std::size_t>(plane.width) * plane.height);
  in.read(reinterpret_cast<char*>(plane.v.data()),
          static_cast<std::streamsize>(plane.v.size() * sizeof(double)));
  if (!in) fail(Err::ParseError, "truncated subband dump " + path.string());
  return plane;
}

}  // namespace rriqa
