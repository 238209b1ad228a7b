#include "rriqa/metric.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rriqa/divergence.hpp"
#include "rriqa/errors.hpp"
#include "rriqa/mggd.hpp"

namespace rriqa {
namespace {

std::vector<SubbandKey> canonical_selection(std::span<const SubbandKey> sel) {
  std::vector<SubbandKey> out(sel.begin(), sel.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail(Err::ParseError, "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

FeatureSet extract_features(const RgbImage& img, const ExtractOptions& opts,
                            const FilterBank* bank) {
  if (img.width < kMinImageSide || img.height < kMinImageSide)
    fail(Err::TooSmall, "image must be at least " +
                            std::to_string(kMinImageSide) + " pixels per side");
  const RgbImage cropped = crop_to_pyramid_size(img, kPyramidScales);

  FilterBank local_bank;
  if (bank == nullptr || bank->width != cropped.width ||
      bank->height != cropped.height) {
    local_bank = build_filter_bank(cropped.width, cropped.height);
    bank = &local_bank;
  }

  std::array<Decomposition, 3> channels;
  for (int c = 0; c < 3; ++c)
    channels[c] = decompose(cropped.channel(c), cropped.width, cropped.height,
                            *bank);

  const auto selection = canonical_selection(opts.selection);
  const auto matrices = select_subbands(channels, selection);

  FeatureSet fs;
  fs.width = cropped.width;
  fs.height = cropped.height;
  fs.beta = opts.shape;
  fs.selection = selection;
  fs.covariances.reserve(matrices.size());
  for (const auto& cm : matrices)
    fs.covariances.push_back(estimate_ml(cm.data, opts.shape).sigma);
  return fs;
}

double subband_distance(const Eigen::Matrix3d& sigma_ref,
                        const Eigen::Matrix3d& sigma_dist) {
  return kld_gaussian_multivariate(sigma_ref, sigma_dist);
}

QualityScore pool_and_score(std::span<const double> distances) {
  if (distances.size() != 6)
    fail(Err::BadInput, "pooling needs exactly 6 distances, got " +
                            std::to_string(distances.size()));
  QualityScore score;
  for (std::size_t i = 0; i < 6; ++i) {
    const double d = distances[i];
    if (!std::isfinite(d) || d < 0.0)
      fail(Err::BadInput, "distance " + std::to_string(i + 1) +
                              " must be finite and nonnegative");
    score.subband[i] = d;
    score.pooled += d;
  }
  score.q = std::log2(1.0 + score.pooled / kPoolingD0);
  return score;
}

namespace {

// Experimental general-shape path: no closed form exists for the KLD of
// trivariate GGDs, so the distance falls back to the seeded Monte-Carlo
// estimator.
double mc_subband_distance(const Eigen::Matrix3d& ref,
                           const Eigen::Matrix3d& dist, double shape,
                           std::uint64_t seed) {
  const LogDensity lp1 = [&ref, shape](const Eigen::VectorXd& x) {
    return mggd_log_pdf_any(x, ref, shape);
  };
  const LogDensity lp2 = [&dist, shape](const Eigen::VectorXd& x) {
    return mggd_log_pdf_any(x, dist, shape);
  };
  const Sampler sampler = [&ref, shape](int n, std::uint64_t s) {
    return sample_mggd_any(ref, shape, n, s);
  };
  const auto mc = kld_monte_carlo(lp1, lp2, sampler, 100000, seed);
  return std::max(mc.estimate, 0.0);
}

}  // namespace

QualityScore score_image(const FeatureSet& reference, const RgbImage& distorted,
                         const FilterBank* bank) {
  ExtractOptions opts;
  opts.selection = reference.selection;
  opts.shape = reference.beta;
  const FeatureSet dist_fs = extract_features(distorted, opts, bank);

  if (dist_fs.width != reference.width || dist_fs.height != reference.height)
    fail(Err::DimensionMismatch,
         "distorted image cropped to " + std::to_string(dist_fs.width) + "x" +
             std::to_string(dist_fs.height) + " but features describe " +
             std::to_string(reference.width) + "x" +
             std::to_string(reference.height));
  if (dist_fs.selection != reference.selection)
    fail(Err::SelectionMismatch, "subband selections differ");

  std::array<double, 6> distances;
  for (std::size_t i = 0; i < 6; ++i) {
    if (reference.beta == 1.0) {
      distances[i] =
          subband_distance(reference.covariances[i], dist_fs.covariances[i]);
    } else {
      distances[i] = mc_subband_distance(reference.covariances[i],
                                         dist_fs.covariances[i],
                                         reference.beta, 0x52524651u + i);
    }
    // Equal models evaluate to divergences a few ulp below zero; only
    // rounding-level negatives are clamped.
    if (distances[i] < 0.0 && distances[i] > -1e-9) distances[i] = 0.0;
  }
  return pool_and_score(distances);
}

std::string serialize_features(const FeatureSet& fs) {
  if (fs.selection.size() != 6 || fs.covariances.size() != 6)
    fail(Err::BadInput, "feature set must hold exactly 6 subbands");
  std::string out;
  out += "RRF 1\n";
  out += "size " + std::to_string(fs.width) + " " + std::to_string(fs.height) +
         "\n";
  out += "beta " + format_double(fs.beta) + "\n";
  out += "selection";
  for (const auto& key : fs.selection)
    out += " (" + std::to_string(key.scale) + "," +
           std::to_string(key.orientation) + ")";
  out += "\n";
  for (std::size_t i = 0; i < 6; ++i) {
    out += "cov " + std::to_string(fs.selection[i].scale) + " " +
           std::to_string(fs.selection[i].orientation);
    const auto& m = fs.covariances[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out += " " + format_double(m(r, c));
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

double parse_real(const std::string& tok, int line) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    parse_fail(line, "bad real '" + tok + "'");
  if (!std::isfinite(v)) parse_fail(line, "non-finite real '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line) {
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    parse_fail(line, "bad integer '" + tok + "'");
  return v;
}

}  // namespace

FeatureSet parse_features(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) parse_fail(line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };

  {
    const auto toks = tokenize(next_line());
    if (toks.size() != 2 || toks[0] != "RRF")
      parse_fail(line_no, "expected 'RRF <version>' header");
    const int version = parse_int(toks[1], line_no);
    if (version != 1)
      fail(Err::VersionMismatch,
           "feature file declares version " + std::to_string(version) +
               ", this reader handles version 1");
  }

  FeatureSet fs;
  {
    const auto toks = tokenize(next_line());
    if (toks.size() != 3 || toks[0] != "size")
      parse_fail(line_no, "expected 'size <width> <height>'");
    fs.width = parse_int(toks[1], line_no);
    fs.height = parse_int(toks[2], line_no);
    if (fs.width <= 0 || fs.height <= 0)
      parse_fail(line_no, "dimensions must be positive");
  }
  {
    const auto toks = tokenize(next_line());
    if (toks.size() != 2 || toks[0] != "beta")
      parse_fail(line_no, "expected 'beta <shape>'");
    fs.beta = parse_real(toks[1], line_no);
    if (!(fs.beta > 0.0)) parse_fail(line_no, "shape must be positive");
  }
  {
    const auto toks = tokenize(next_line());
    if (toks.size() != 7 || toks[0] != "selection")
      parse_fail(line_no, "expected 'selection' with 6 subband keys");
    for (std::size_t i = 1; i < toks.size(); ++i) {
      int s = 0, o = 0, consumed = 0;
      if (std::sscanf(toks[i].c_str(), "(%d,%d)%n", &s, &o, &consumed) != 2 ||
          consumed != static_cast<int>(toks[i].size()))
        parse_fail(line_no, "bad subband key '" + toks[i] + "'");
      fs.selection.push_back({s, o});
    }
    for (const auto& key : fs.selection) {
      if (key.scale < 1 || key.scale > FilterBank::kScales ||
          key.orientation < 1 || key.orientation > FilterBank::kOrientations)
        parse_fail(line_no, "subband key out of range");
    }
    if (!std::is_sorted(fs.selection.begin(), fs.selection.end()) ||
        std::adjacent_find(fs.selection.begin(), fs.selection.end()) !=
            fs.selection.end())
      parse_fail(line_no, "selection must be 6 distinct keys in canonical order");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    const auto toks = tokenize(next_line());
    if (toks.size() != 12 || toks[0] != "cov")
      parse_fail(line_no, "expected 'cov <s> <o>' with 9 reals");
    const SubbandKey key{parse_int(toks[1], line_no), parse_int(toks[2], line_no)};
    if (key != fs.selection[i])
      parse_fail(line_no, "cov record order does not match the selection");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        m(r, c) = parse_real(toks[3 + r * 3 + c], line_no);
    if ((m.array() != m.transpose().array()).any())
      parse_fail(line_no, "covariance is not exactly symmetric");
    Eigen::LLT<Eigen::Matrix3d> llt(m);
    if (llt.info() != Eigen::Success)
      parse_fail(line_no, "covariance is not positive definite");
    fs.covariances.push_back(m);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!tokenize(line).empty()) parse_fail(line_no, "trailing content");
  }
  return fs;
}

void write_features(const FeatureSet& fs, const std::filesystem::path& path) {
  const std::string text = serialize_features(fs);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Err::IoError, "cannot open " + tmp + " for writing");
    out << text;
    if (!out) fail(Err::IoError, "write failure on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Err::IoError, "cannot move " + tmp + " to " + path.string());
}

FeatureSet read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_features(buf.str());
}

}  // namespace rriqa
