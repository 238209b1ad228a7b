#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rriqa/cli.hpp"
#include "rriqa/errors.hpp"
#include "rriqa/metric.hpp"
#include "test_util.hpp"

using namespace rriqa;
using testutil::TempDir;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_selection") {
  const auto keys = cli::parse_selection({"1,1", "1,3", "2,1", "2,3", "3,1", "3,3"});
  CHECK(keys == default_selection());
  CHECK_THROWS_WITH_AS(
      static_cast<void>(cli::parse_selection({"1,1", "2,2"})),
      doctest::Contains("BadSelection"), Error);
  CHECK_THROWS_WITH_AS(
      static_cast<void>(cli::parse_selection(
          {"xx", "1,3", "2,1", "2,3", "3,1", "3,3"})),
      doctest::Contains("BadSelection"), Error);
  // Trailing junk after a well-formed pair is rejected too.
  CHECK_THROWS_WITH_AS(
      static_cast<void>(cli::parse_selection(
          {"1,1junk", "1,3", "2,1", "2,3", "3,1", "3,3"})),
      doctest::Contains("BadSelection"), Error);
}

TEST_CASE("cmd_extract") {
  TempDir dir;
  const auto img_path = dir.path() / "ref.ppm";
  write_ppm(testutil::make_natural_image(64, 64, 900), img_path);
  const auto out_path = dir.path() / "ref.rrf";

  SUBCASE("writes the feature file and reports the scalar budget") {
    std::ostringstream out, err;
    const int status = cli::cmd_extract(img_path.string(), out_path.string(),
                                        default_selection(), out, err);
    CHECK(status == cli::kExitOk);
    const auto printed = lines_of(out.str());
    REQUIRE(printed.size() == 2);
    CHECK(printed[0] == "scalars=54");
    CHECK(printed[1] == "selection=(1,1) (1,3) (2,1) (2,3) (3,1) (3,3)");

    // 6 cov records in the file.
    int cov_lines = 0;
    for (const auto& line : lines_of(slurp(out_path)))
      if (line.rfind("cov ", 0) == 0) ++cov_lines;
    CHECK(cov_lines == 6);
  }

  SUBCASE("an explicit default selection produces an identical file") {
    std::ostringstream out, err;
    cli::cmd_extract(img_path.string(), out_path.string(), default_selection(),
                     out, err);
    const std::string default_bytes = slurp(out_path);
    const auto out2 = dir.path() / "ref2.rrf";
    cli::cmd_extract(img_path.string(), out2.string(),
                     cli::parse_selection({"1,1", "1,3", "2,1", "2,3", "3,1", "3,3"}),
                     out, err);
    CHECK(slurp(out2) == default_bytes);
  }

  SUBCASE("a 24x24 image exits 3 with a TooSmall message") {
    const auto tiny = dir.path() / "tiny.ppm";
    {
      RgbImage img;
      img.width = 24;
      img.height = 24;
      img.r.assign(24 * 24, 0.5);
      img.g = img.r;
      img.b = img.r;
      std::ofstream f(tiny, std::ios::binary);
      const auto bytes = encode_ppm(img);
      f.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    }
    std::ostringstream out, err;
    const int status = cli::cmd_extract(tiny.string(), out_path.string(),
                                        default_selection(), out, err);
    CHECK(status == cli::kExitPipeline);
    CHECK(err.str().find("TooSmall") != std::string::npos);
  }

  SUBCASE("a missing image exits 2") {
    std::ostringstream out, err;
    const int status = cli::cmd_extract((dir.path() / "none.ppm").string(),
                                        out_path.string(), default_selection(),
                                        out, err);
    CHECK(status == cli::kExitIo);
  }
}

TEST_CASE("cmd_score") {
  TempDir dir;
  const RgbImage ref = testutil::make_natural_image(64, 64, 901);
  const auto img_path = dir.path() / "ref.ppm";
  write_ppm(ref, img_path);
  const auto rrf_path = dir.path() / "ref.rrf";
  {
    std::ostringstream out, err;
    REQUIRE(cli::cmd_extract(img_path.string(), rrf_path.string(),
                             default_selection(), out, err) == 0);
  }

  SUBCASE("self-score prints zeros in the fixed line order") {
    std::ostringstream out, err;
    const int status =
        cli::cmd_score(rrf_path.string(), img_path.string(), out, err);
    CHECK(status == cli::kExitOk);
    const auto printed = lines_of(out.str());
    REQUIRE(printed.size() == 8);
    for (int i = 0; i < 6; ++i)
      CHECK(printed[i] == ("D" + std::to_string(i + 1) + "=0.000000000"));
    CHECK(printed[6] == "D=0.000000000");
    CHECK(printed[7] == "Q=0.000000000");
  }

  SUBCASE("mismatched image size exits 4") {
    const auto other = dir.path() / "other.ppm";
    write_ppm(testutil::make_natural_image(96, 96, 902), other);
    std::ostringstream out, err;
    const int status = cli::cmd_score(rrf_path.string(), other.string(), out, err);
    CHECK(status == cli::kExitMismatch);
  }

  SUBCASE("a corrupt feature file exits 2") {
    const auto bad = dir.path() / "bad.rrf";
    std::ofstream(bad) << "RRF 1\nsize 64 64\nbeta x\n";
    std::ostringstream out, err;
    CHECK(cli::cmd_score(bad.string(), img_path.string(), out, err) ==
          cli::kExitIo);
  }

  SUBCASE("a version-2 feature file exits 4") {
    const auto v2 = dir.path() / "v2.rrf";
    std::ofstream(v2) << "RRF 2\n";
    std::ostringstream out, err;
    CHECK(cli::cmd_score(v2.string(), img_path.string(), out, err) ==
          cli::kExitMismatch);
  }
}

namespace {

std::filesystem::path write_toy_manifest(const TempDir& dir, int rows_per_type,
                                         int types) {
  const RgbImage ref = testutil::make_natural_image(64, 64, 903);
  const auto ref_path = dir.path() / "ref.ppm";
  write_ppm(ref, ref_path);
  const auto manifest = dir.path() / "manifest.csv";
  std::ofstream f(manifest);
  f << "distorted,reference,type,level,mos\n";
  int seed = 0;
  for (int t = 0; t < types; ++t) {
    for (int i = 0; i < rows_per_type; ++i) {
      const double sigma = 0.01 + 0.012 * i;
      const auto path =
          dir.path() / ("d" + std::to_string(t) + "_" + std::to_string(i) + ".ppm");
      write_ppm(testutil::add_gaussian_noise(ref, sigma, 904 + seed++), path);
      f << path.string() << "," << ref_path.string() << ",type" << t << "," << i
        << "," << (9.0 - i) << "\n";
    }
  }
  return manifest;
}

}  // namespace

TEST_CASE("cmd_evaluate") {
  TempDir dir;

  SUBCASE("toy manifest produces report and scatter files") {
    const auto manifest = write_toy_manifest(dir, 12, 1);
    cli::EvaluateArgs args;
    args.manifest_path = manifest.string();
    args.out_dir = (dir.path() / "out").string();
    std::ostringstream out, err;
    const int status = cli::cmd_evaluate(args, out, err);
    CHECK(status == cli::kExitOk);
    CHECK(std::filesystem::exists(dir.path() / "out" / "report.csv"));
    CHECK(std::filesystem::exists(dir.path() / "out" / "scatter.csv"));
    const auto report_lines = lines_of(slurp(dir.path() / "out" / "report.csv"));
    REQUIRE(report_lines.size() == 3);  // header + one group + overall
    CHECK(report_lines[1].rfind("type0,12,", 0) == 0);
    CHECK(report_lines[2].rfind("overall,12,", 0) == 0);
    CHECK(out.str().find("overall_srcc=") != std::string::npos);
  }

  SUBCASE("psnr baseline switch") {
    const auto manifest = write_toy_manifest(dir, 12, 1);
    cli::EvaluateArgs args;
    args.manifest_path = manifest.string();
    args.out_dir = (dir.path() / "out_psnr").string();
    args.metric = MetricKind::kPsnr;
    std::ostringstream out, err;
    CHECK(cli::cmd_evaluate(args, out, err) == cli::kExitOk);
    // Noise level anticorrelates with MOS in the fixture, so PSNR must
    // correlate positively.
    const auto report_lines = lines_of(slurp(dir.path() / "out_psnr" / "report.csv"));
    REQUIRE(report_lines.size() == 3);
    const auto& row = report_lines[1];
    const auto first_comma = row.find(',');
    const auto second_comma = row.find(',', first_comma + 1);
    const double srcc_val =
        std::stod(row.substr(second_comma + 1, row.find(',', second_comma + 1)));
    CHECK(srcc_val > 0.9);
  }

  SUBCASE("a missing row file warns but exits 0") {
    const auto manifest = write_toy_manifest(dir, 12, 1);
    std::ofstream(manifest, std::ios::app)
        << (dir.path() / "missing.ppm").string() << ","
        << (dir.path() / "ref.ppm").string() << ",type0,99,1.0\n";
    cli::EvaluateArgs args;
    args.manifest_path = manifest.string();
    args.out_dir = (dir.path() / "out_warn").string();
    std::ostringstream out, err;
    CHECK(cli::cmd_evaluate(args, out, err) == cli::kExitOk);
    CHECK(err.str().find("warning:") != std::string::npos);
  }

  SUBCASE("strict mode exits 5 on an insufficient group") {
    const auto manifest = write_toy_manifest(dir, 4, 1);
    cli::EvaluateArgs args;
    args.manifest_path = manifest.string();
    args.out_dir = (dir.path() / "out_strict").string();
    args.strict = true;
    std::ostringstream out, err;
    CHECK(cli::cmd_evaluate(args, out, err) == cli::kExitStrict);
  }

  SUBCASE("missing manifest exits 2") {
    cli::EvaluateArgs args;
    args.manifest_path = (dir.path() / "none.csv").string();
    args.out_dir = dir.path().string();
    std::ostringstream out, err;
    CHECK(cli::cmd_evaluate(args, out, err) == cli::kExitIo);
  }
}

TEST_CASE("manifest-tid2008 feeds evaluate end to end") {
  TempDir dir;
  const auto refs = dir.path() / "reference_images";
  const auto dists = dir.path() / "distorted_images";
  std::filesystem::create_directories(refs);
  std::filesystem::create_directories(dists);

  std::ostringstream mos_text;
  for (int img = 1; img <= 3; ++img) {
    const RgbImage ref = testutil::make_natural_image(96, 96, 950 + img);
    char ref_name[16];
    std::snprintf(ref_name, sizeof(ref_name), "i%02d.ppm", img);
    write_ppm(ref, refs / ref_name);
    for (int type = 1; type <= 2; ++type) {
      for (int level = 1; level <= 4; ++level) {
        const double sigma = 0.01 * level * type;
        char name[32];
        std::snprintf(name, sizeof(name), "i%02d_%02d_%d", img, type, level);
        write_ppm(testutil::add_gaussian_noise(ref, sigma, 960 + 10 * type + level),
                  dists / (std::string(name) + ".ppm"));
        mos_text << (7.0 - 1.2 * level) << " " << name << ".bmp\n";
      }
    }
  }
  const auto mos_file = dir.path() / "mos_with_names.txt";
  std::ofstream(mos_file) << mos_text.str();

  const auto manifest = dir.path() / "manifest.csv";
  std::ostringstream out, err;
  REQUIRE(cli::cmd_manifest_tid2008(mos_file.string(), dists.string(),
                                    refs.string(), manifest.string(), out,
                                    err) == cli::kExitOk);
  CHECK(out.str() == "rows=24\n");

  cli::EvaluateArgs args;
  args.manifest_path = manifest.string();
  args.out_dir = (dir.path() / "out").string();
  std::ostringstream eval_out, eval_err;
  REQUIRE(cli::cmd_evaluate(args, eval_out, eval_err) == cli::kExitOk);

  const auto report = lines_of(slurp(dir.path() / "out" / "report.csv"));
  REQUIRE(report.size() == 4);  // header + 2 types + overall
  CHECK(report[1].rfind("Additive Gaussian noise,12,", 0) == 0);
  CHECK(report[2].rfind("Additive noise in color components,12,", 0) == 0);
  // Heavier noise was assigned lower MOS, so MOS and Q anticorrelate.
  const auto srcc_field = [](const std::string& row) {
    std::size_t p = row.find(',');
    p = row.find(',', p + 1);
    return std::stod(row.substr(p + 1));
  };
  CHECK(srcc_field(report[1]) < -0.9);
}

TEST_CASE("diag commands") {
  std::ostringstream out, err;
  SUBCASE("tiling") {
    CHECK(cli::cmd_diag_tiling(64, 64, out, err) == cli::kExitOk);
    CHECK(out.str().find("max_tiling_deviation=") != std::string::npos);
    CHECK(cli::cmd_diag_tiling(30, 30, out, err) == cli::kExitPipeline);
  }
  SUBCASE("mc-kld") {
    CHECK(cli::cmd_diag_mc_kld(20000, 7, out, err) == cli::kExitOk);
    CHECK(out.str().find("closed=0.289720771") != std::string::npos);
  }
  SUBCASE("sampler") {
    CHECK(cli::cmd_diag_sampler(0.8, 50000, 9, out, err) == cli::kExitOk);
    CHECK(out.str().find("pass=1") != std::string::npos);
  }
}
