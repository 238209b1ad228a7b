#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rriqa/image.hpp"
#include "rriqa/pyramid.hpp"

namespace rriqa {

// Pooling constant of the log score Q = log2(1 + D/D0).
inline constexpr double kPoolingD0 = 0.1;

// The side information transmitted per reference image: 6 subband
// covariance matrices (54 scalars) plus the header metadata needed for
// dimension checks.
struct FeatureSet {
  int width = 0;   // pyramid dimensions (after centered crop)
  int height = 0;
  double beta = 1.0;  // 1 in metric mode; other values are experimental
  std::vector<SubbandKey> selection;        // 6 keys, canonical order
  std::vector<Eigen::Matrix3d> covariances; // one per selection entry
};

struct QualityScore {
  std::array<double, 6> subband = {};  // D_1..D_6
  double pooled = 0.0;                 // D = sum D_i
  double q = 0.0;                      // log2(1 + D/D0)
};

struct ExtractOptions {
  std::vector<SubbandKey> selection = default_selection();
  // Shape used when fitting each subband's covariance. 1 (the metric-mode
  // default) makes the fit the ridge-stabilized sample second moment and
  // scoring uses the Gaussian closed form; any other value routes scoring
  // through the seeded Monte-Carlo divergence.
  double shape = 1.0;
};

// Sender side: crop, decompose the three channels, fit one covariance per
// selected subband. A prebuilt bank for the cropped size may be supplied
// to amortize mask construction; pass nullptr to build one.
FeatureSet extract_features(const RgbImage& img, const ExtractOptions& opts = {},
                            const FilterBank* bank = nullptr);

// KLD(reference || distorted) between two subband covariance models.
double subband_distance(const Eigen::Matrix3d& sigma_ref,
                        const Eigen::Matrix3d& sigma_dist);

// D = sum of the six distances, Q = log2(1 + D/D0).
QualityScore pool_and_score(std::span<const double> distances);

// Receiver side: extract the distorted image's features with the
// reference's selection/shape and pool the per-subband divergences.
QualityScore score_image(const FeatureSet& reference, const RgbImage& distorted,
                         const FilterBank* bank = nullptr);

// RRF version-1 feature file (line-oriented text, shortest round-trip
// decimals, NaN/inf rejected):
//   RRF 1
//   size <width> <height>
//   beta <shape>
//   selection (s,o) x6
//   cov <s> <o> <9 row-major reals>   x6
std::string serialize_features(const FeatureSet& fs);
FeatureSet parse_features(std::string_view text);
void write_features(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet read_features(const std::filesystem::path& path);

}  // namespace rriqa
