#pragma once

#include <Eigen/Core>
#include <array>
#include <compare>
#include <filesystem>
#include <span>
#include <vector>

namespace rriqa {

// One (scale, orientation) slot of the pyramid; scale 1 is the finest.
struct SubbandKey {
  int scale = 1;        // 1..4
  int orientation = 1;  // 1..3
  auto operator<=>(const SubbandKey&) const = default;
};

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;
};

// Frequency-plane masks for a 4-scale, 3-orientation steerable pyramid.
// All masks live on the full-resolution grid; they are real, lie in [0,1],
// and their squares sum to one at every frequency bin (the tiling
// invariant that stands in for perfect reconstruction).
struct FilterBank {
  static constexpr int kScales = 4;
  static constexpr int kOrientations = 3;

  int width = 0;
  int height = 0;
  std::vector<double> highpass;
  std::array<std::vector<double>, kScales * kOrientations> band;
  std::vector<double> lowpass;

  static int band_index(SubbandKey key) {
    return (key.scale - 1) * kOrientations + (key.orientation - 1);
  }
  const std::vector<double>& band_mask(SubbandKey key) const {
    return band[band_index(key)];
  }
  // Oriented subband at scale s is held at 1/2^(s-1) of the input
  // resolution; the lowpass residual at 1/2^kScales.
  static int downsample_factor(int scale) { return 1 << (scale - 1); }
  static int lowpass_factor() { return 1 << kScales; }
};

// Requires width and height divisible by 2^kScales; throws BadDimensions.
FilterBank build_filter_bank(int width, int height);

// max over frequency bins of |sum of squared mask responses - 1|; the
// transform's self-inversion witness.
double max_tiling_deviation(const FilterBank& bank);

// Result of decomposing one channel plane: 12 oriented subbands plus the
// two residuals.
struct Decomposition {
  int width = 0;
  int height = 0;
  Plane highpass;
  std::array<Plane, FilterBank::kScales * FilterBank::kOrientations> bands;
  Plane lowpass;

  const Plane& band(SubbandKey key) const {
    return bands[FilterBank::band_index(key)];
  }
};

// Pure frequency-domain analysis: multiply the plane's DFT by each mask,
// crop to the subband's resolution and invert. Throws DimensionMismatch
// when the plane does not match the bank.
Decomposition decompose(std::span<const double> plane, int width, int height,
                        const FilterBank& bank);

// R,G,B coefficients of one subband stacked as a 3 x n matrix, each row
// mean-centered.
struct CoefficientMatrix {
  SubbandKey key;
  Eigen::Matrix<double, 3, Eigen::Dynamic> data;
};

// Two orientations (1 and 3) from each of the three finest scales; the
// six subbands the metric transmits, in canonical order.
std::vector<SubbandKey> default_selection();

// Stacks the three channel decompositions into one CoefficientMatrix per
// selected subband. Selection must hold exactly 6 distinct in-range keys.
std::vector<CoefficientMatrix> select_subbands(
    const std::array<Decomposition, 3>& channels,
    std::span<const SubbandKey> selection);

// Debug dump of one subband plane: 16-byte header (magic "SPBD", u32
// width, u32 height, u32 reserved) followed by row-major little-endian
// binary64 samples. Test-harness interface only.
void write_plane_dump(const Plane& plane, const std::filesystem::path& path);
Plane read_plane_dump(const std::filesystem::path& path);

}  // namespace rriqa
