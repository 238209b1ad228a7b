#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rriqa/errors.hpp"
#include "rriqa/metric.hpp"
#include "test_util.hpp"

using namespace rriqa;
using testutil::TempDir;

namespace {

int count_cov_scalars(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int scalars = 0;
  while (std::getline(in, line)) {
    if (line.rfind("cov ", 0) != 0) continue;
    std::istringstream ls(line);
    std::string tok;
    int fields = 0;
    while (ls >> tok) ++fields;
    scalars += fields - 3;  // "cov <s> <o>" prefix
  }
  return scalars;
}

}  // namespace

TEST_CASE("extract_features on identical channels: ridge-dominated rank-1 covariances") {
  RgbImage img = testutil::make_natural_image(64, 64, 200);
  img.g = img.r;
  img.b = img.r;
  const FeatureSet fs = extract_features(img);
  REQUIRE(fs.covariances.size() == 6);
  for (const auto& sigma : fs.covariances) {
    const double diag = sigma(0, 0);
    // Off-diagonals equal the diagonal up to the 1e-10-relative ridge.
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (r == c) continue;
        CHECK(std::abs(sigma(r, c) - diag) < 1e-8 * diag);
      }
    Eigen::LLT<Eigen::Matrix3d> llt(sigma);
    CHECK(llt.info() == Eigen::Success);  // ridge keeps it invertible
  }
}

TEST_CASE("extraction is deterministic down to the serialized bytes") {
  const RgbImage img = testutil::make_natural_image(96, 64, 201);
  const std::string a = serialize_features(extract_features(img));
  const std::string b = serialize_features(extract_features(img));
  CHECK(a == b);
}

TEST_CASE("white noise decorrelates the channels (statistic over draws)") {
  // Mean absolute channel correlation per subband across 10 independent
  // draws; per-draw estimates carry O(1/sqrt(n)) sampling noise, the mean
  // does not.
  constexpr int kDraws = 10;
  const int side = 128;
  std::mt19937_64 seeder(202);
  Eigen::Matrix<double, 6, 3> mean_abs_corr = Eigen::Matrix<double, 6, 3>::Zero();
  for (int draw = 0; draw < kDraws; ++draw) {
    RgbImage img;
    img.width = side;
    img.height = side;
    std::mt19937_64 rng(seeder());
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
      img.channel(c).resize(static_cast<std::size_t>(side) * side);
      for (auto& v : img.channel(c)) v = uniform(rng);
    }
    const FeatureSet fs = extract_features(img);
    for (int b = 0; b < 6; ++b) {
      const auto& sigma = fs.covariances[b];
      int pair = 0;
      for (int r = 0; r < 3; ++r)
        for (int c = r + 1; c < 3; ++c)
          mean_abs_corr(b, pair++) +=
              std::abs(sigma(r, c)) / std::sqrt(sigma(r, r) * sigma(c, c));
    }
  }
  mean_abs_corr /= kDraws;
  CHECK(mean_abs_corr.maxCoeff() < 0.10);
}

TEST_CASE("subband_distance") {
  const Eigen::Matrix3d identity = Eigen::Matrix3d::Identity();
  CHECK(subband_distance(identity, identity) == 0.0);
  CHECK(subband_distance(identity, 2.0 * identity) ==
        doctest::Approx(0.5 * (3.0 * std::numbers::ln2 - 1.5)).epsilon(1e-14));

  std::mt19937_64 rng(203);
  const Eigen::Matrix3d a = testutil::random_spd(3, rng);
  const Eigen::Matrix3d b = testutil::random_spd(3, rng);
  CHECK(subband_distance(a, b) != subband_distance(b, a));
}

TEST_CASE("pool_and_score") {
  const double zeros[6] = {0, 0, 0, 0, 0, 0};
  CHECK(pool_and_score(zeros).q == 0.0);

  const double tenth[6] = {0.02, 0.02, 0.02, 0.02, 0.01, 0.01};
  CHECK(pool_and_score(tenth).pooled == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(pool_and_score(tenth).q == doctest::Approx(1.0).epsilon(1e-12));

  const double seven[6] = {0.2, 0.2, 0.1, 0.1, 0.05, 0.05};
  CHECK(pool_and_score(seven).q == doctest::Approx(3.0).epsilon(1e-12));

  const double five[5] = {0.1, 0.1, 0.1, 0.1, 0.1};
  CHECK_THROWS_WITH_AS(static_cast<void>(pool_and_score(five)),
                       doctest::Contains("BadInput"), Error);
  const double negative[6] = {0.1, -0.1, 0.1, 0.1, 0.1, 0.1};
  CHECK_THROWS_WITH_AS(static_cast<void>(pool_and_score(negative)),
                       doctest::Contains("BadInput"), Error);
  const double nan6[6] = {0.1, 0.1, std::nan(""), 0.1, 0.1, 0.1};
  CHECK_THROWS_WITH_AS(static_cast<void>(pool_and_score(nan6)),
                       doctest::Contains("BadInput"), Error);
}

TEST_CASE("monotone pooling: any larger subband distance raises Q") {
  const double base[6] = {0.1, 0.2, 0.05, 0.3, 0.15, 0.08};
  const double q0 = pool_and_score(base).q;
  for (int i = 0; i < 6; ++i) {
    double bumped[6];
    std::copy(base, base + 6, bumped);
    bumped[i] += 0.07;
    CHECK(pool_and_score(bumped).q > q0);
  }
}

TEST_CASE("self-score is zero within the ridge slack") {
  const RgbImage img = testutil::quantize8(testutil::make_natural_image(96, 96, 204));
  const FeatureSet fs = extract_features(img);
  const QualityScore score = score_image(fs, img);
  CHECK(score.q < 1e-9);
  CHECK(score.q >= 0.0);
}

TEST_CASE("the minimum 32x32 geometry goes through the whole pipeline") {
  const RgbImage img = testutil::quantize8(testutil::make_natural_image(32, 32, 219));
  const FeatureSet fs = extract_features(img);
  CHECK(fs.width == 32);
  CHECK(fs.height == 32);
  CHECK(score_image(fs, img).q < 1e-9);
}

TEST_CASE("Q grows with the noise level") {
  const RgbImage ref = testutil::make_natural_image(128, 128, 205);
  const FeatureSet fs = extract_features(ref);
  double previous = score_image(fs, ref).q;
  for (double sigma : {5.0 / 255.0, 15.0 / 255.0, 35.0 / 255.0}) {
    const RgbImage noisy =
        testutil::quantize8(testutil::add_gaussian_noise(ref, sigma, 206));
    const double q = score_image(fs, noisy).q;
    CHECK(q > previous);
    previous = q;
  }
}

TEST_CASE("a constant distorted image stays finite through the ridge") {
  const RgbImage ref = testutil::make_natural_image(64, 64, 207);
  const FeatureSet fs = extract_features(ref);
  RgbImage flat;
  flat.width = 64;
  flat.height = 64;
  flat.r.assign(64 * 64, 0.5);
  flat.g = flat.r;
  flat.b = flat.r;
  const QualityScore score = score_image(fs, flat);
  CHECK(std::isfinite(score.q));
  CHECK(score.q > 1.0);  // wildly different statistics
}

TEST_CASE("identical channel permutation leaves Q unchanged") {
  const RgbImage ref = testutil::make_natural_image(96, 64, 208);
  const RgbImage dist =
      testutil::add_gaussian_noise(ref, 10.0 / 255.0, 209);

  auto permute = [](const RgbImage& img) {
    RgbImage out = img;
    out.r = img.b;
    out.g = img.r;
    out.b = img.g;
    return out;
  };

  const double q = score_image(extract_features(ref), dist).q;
  const double q_perm = score_image(extract_features(permute(ref)), permute(dist)).q;
  CHECK(q_perm == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("score_image rejects mismatched dimensions") {
  const FeatureSet fs = extract_features(testutil::make_natural_image(64, 64, 210));
  const RgbImage other = testutil::make_natural_image(96, 96, 211);
  CHECK_THROWS_WITH_AS(static_cast<void>(score_image(fs, other)),
                       doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("RRF round-trip is bitwise exact") {
  TempDir dir;
  const FeatureSet fs = extract_features(testutil::make_natural_image(64, 48, 212));
  const auto path = dir.path() / "ref.rrf";
  write_features(fs, path);
  const FeatureSet back = read_features(path);

  CHECK(back.width == fs.width);
  CHECK(back.height == fs.height);
  CHECK(back.beta == fs.beta);
  CHECK(back.selection == fs.selection);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK((back.covariances[i].array() == fs.covariances[i].array()).all());

  // Serialization is a fixed point after one round-trip.
  CHECK(serialize_features(back) == serialize_features(fs));
}

TEST_CASE("the feature budget is exactly 54 scalars") {
  const FeatureSet fs = extract_features(testutil::make_natural_image(64, 64, 213));
  const std::string text = serialize_features(fs);
  CHECK(count_cov_scalars(text) == 54);
}

TEST_CASE("feature file parse errors") {
  const FeatureSet fs = extract_features(testutil::make_natural_image(64, 64, 214));
  const std::string good = serialize_features(fs);

  auto check_throws = [](const std::string& text, const char* what) {
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_features(text)),
                         doctest::Contains(what), Error);
  };

  SUBCASE("five cov records") {
    const auto pos = good.rfind("cov ");
    check_throws(good.substr(0, pos), "ParseError");
  }
  SUBCASE("declared version 2") {
    std::string v2 = good;
    v2.replace(0, 5, "RRF 2");
    check_throws(v2, "VersionMismatch");
  }
  SUBCASE("NaN rejected") {
    std::string bad = good;
    const auto pos = bad.find("cov 1 1 ");
    const auto val_end = bad.find(' ', pos + 8);
    bad.replace(pos + 8, val_end - pos - 8, "nan");
    check_throws(bad, "ParseError");
  }
  SUBCASE("asymmetric covariance rejected") {
    // Swap the whole cov payload for an asymmetric row-major matrix.
    std::string bad = good;
    const auto pos = bad.find("cov 1 1 ");
    const auto eol = bad.find('\n', pos);
    bad.replace(pos, eol - pos, "cov 1 1 1 0.5 0 0.5000001 1 0 0 0 1");
    check_throws(bad, "ParseError");
  }
  SUBCASE("non-positive-definite covariance rejected") {
    std::string bad = good;
    const auto pos = bad.find("cov 1 1 ");
    const auto eol = bad.find('\n', pos);
    bad.replace(pos, eol - pos, "cov 1 1 1 2 0 2 1 0 0 0 1");
    check_throws(bad, "ParseError");
  }
  SUBCASE("trailing content rejected") { check_throws(good + "extra\n", "ParseError"); }
  SUBCASE("selection out of canonical order rejected") {
    std::string bad = good;
    const auto pos = bad.find("selection");
    const auto eol = bad.find('\n', pos);
    bad.replace(pos, eol - pos,
                "selection (1,3) (1,1) (2,1) (2,3) (3,1) (3,3)");
    check_throws(bad, "ParseError");
  }
  SUBCASE("subband key with trailing junk rejected") {
    std::string bad = good;
    const auto pos = bad.find("(1,1)");
    bad.replace(pos, 5, "(1,1)x");
    check_throws(bad, "ParseError");
  }
  SUBCASE("error message carries the line number") {
    try {
      static_cast<void>(parse_features("RRF 1\nsize 64 64\nbeta oops\n"));
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}

TEST_CASE("scoring through a file round-trip is identical") {
  TempDir dir;
  const RgbImage ref = testutil::make_natural_image(64, 64, 215);
  const RgbImage dist = testutil::add_gaussian_noise(ref, 0.05, 216);
  const FeatureSet fs = extract_features(ref);
  const auto path = dir.path() / "roundtrip.rrf";
  write_features(fs, path);
  const double direct = score_image(fs, dist).q;
  const double through_file = score_image(read_features(path), dist).q;
  CHECK(direct == through_file);
}

TEST_CASE("concurrent scoring against one shared feature set") {
  const RgbImage ref = testutil::make_natural_image(96, 96, 230);
  const FeatureSet fs = extract_features(ref);

  std::vector<RgbImage> images;
  std::vector<double> serial;
  for (int i = 0; i < 4; ++i) {
    images.push_back(testutil::add_gaussian_noise(ref, 0.02 * (i + 1), 231 + i));
    serial.push_back(score_image(fs, images.back()).q);
  }

  std::vector<double> parallel(4, -1.0);
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i)
    workers.emplace_back(
        [&, i]() { parallel[i] = score_image(fs, images[i]).q; });
  for (auto& w : workers) w.join();
  CHECK(parallel == serial);
}

TEST_CASE("experimental general-shape path stays deterministic and sane") {
  const RgbImage ref = testutil::make_natural_image(64, 64, 217);
  ExtractOptions opts;
  opts.shape = 0.8;
  const FeatureSet fs = extract_features(ref, opts);
  CHECK(fs.beta == 0.8);
  const RgbImage noisy = testutil::add_gaussian_noise(ref, 0.08, 218);
  const double q1 = score_image(fs, noisy).q;
  const double q2 = score_image(fs, noisy).q;
  CHECK(q1 == q2);
  CHECK(q1 > 0.0);
  CHECK(std::isfinite(q1));
  CHECK(score_image(fs, ref).q < 1e-3);  // Monte-Carlo noise floor, not 1e-9
}
