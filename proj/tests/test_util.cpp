#include "test_util.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <unistd.h>
#include <vector>

namespace rriqa::testutil {
namespace {

// Bilinearly upsampled white noise at 1/2^octave resolution.
std::vector<double> value_noise_octave(int width, int height, int octave,
                                       std::mt19937_64& rng) {
  const int gw = std::max(2, (width >> octave) + 1);
  const int gh = std::max(2, (height >> octave) + 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid) v = uniform(rng);

  std::vector<double> out(static_cast<std::size_t>(width) * height);
  const double sx = static_cast<double>(gw - 1) / width;
  const double sy = static_cast<double>(gh - 1) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), gh - 2);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), gw - 2);
      const double tx = fx - x0;
      const double a = grid[static_cast<std::size_t>(y0) * gw + x0];
      const double b = grid[static_cast<std::size_t>(y0) * gw + x0 + 1];
      const double c = grid[static_cast<std::size_t>(y0 + 1) * gw + x0];
      const double d = grid[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
      out[static_cast<std::size_t>(y) * width + x] =
          (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    }
  }
  return out;
}

std::vector<double> fractal_noise(int width, int height, std::mt19937_64& rng) {
  std::vector<double> acc(static_cast<std::size_t>(width) * height, 0.0);
  double weight = 1.0, total = 0.0;
  for (int octave = 5; octave >= 0; --octave) {
    const auto layer = value_noise_octave(width, height, octave, rng);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * layer[i];
    total += weight;
    weight *= 0.55;
  }
  for (auto& v : acc) v /= total;
  return acc;
}

}  // namespace

RgbImage make_natural_image(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto lum = fractal_noise(width, height, rng);
  const auto chroma1 = fractal_noise(width, height, rng);
  const auto chroma2 = fractal_noise(width, height, rng);

  RgbImage img;
  img.width = width;
  img.height = height;
  img.r.resize(lum.size());
  img.g.resize(lum.size());
  img.b.resize(lum.size());
  for (std::size_t i = 0; i < lum.size(); ++i) {
    const double l = lum[i];
    const double c1 = chroma1[i] - 0.5;
    const double c2 = chroma2[i] - 0.5;
    img.r[i] = std::clamp(0.1 + 0.8 * l + 0.20 * c1, 0.0, 1.0);
    img.g[i] = std::clamp(0.1 + 0.8 * l - 0.12 * c1 + 0.15 * c2, 0.0, 1.0);
    img.b[i] = std::clamp(0.1 + 0.8 * l - 0.22 * c2, 0.0, 1.0);
  }
  return img;
}

RgbImage add_gaussian_noise(const RgbImage& img, double sigma,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  RgbImage out = img;
  for (int c = 0; c < 3; ++c)
    for (auto& v : out.channel(c)) v = std::clamp(v + normal(rng), 0.0, 1.0);
  return out;
}

RgbImage quantize8(const RgbImage& img) { return decode_ppm(encode_ppm(img)); }

Eigen::MatrixXd random_spd(int dim, std::mt19937_64& rng, double min_eig,
                           double max_eig) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(min_eig, max_eig);
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = normal(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eigs(dim);
  for (int i = 0; i < dim; ++i) eigs[i] = uniform(rng);
  return q * eigs.asDiagonal() * q.transpose();
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return acc * h / 3.0;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("rriqa_test_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace rriqa::testutil
