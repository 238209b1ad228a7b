#include "rriqa/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rriqa/divergence.hpp"
#include "rriqa/image.hpp"
#include "rriqa/metric.hpp"
#include "rriqa/mggd.hpp"

namespace rriqa::cli {
namespace {

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string selection_string(const std::vector<SubbandKey>& selection) {
  std::string s;
  for (const auto& key : selection) {
    if (!s.empty()) s += " ";
    s += "(" + std::to_string(key.scale) + "," +
         std::to_string(key.orientation) + ")";
  }
  return s;
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Err::IoError:
    case Err::UnsupportedFormat:
    case Err::CorruptFile:
    case Err::ParseError:
      return kExitIo;
    case Err::DimensionMismatch:
    case Err::SelectionMismatch:
    case Err::VersionMismatch:
      return kExitMismatch;
    default:
      return kExitPipeline;
  }
}

std::vector<SubbandKey> parse_selection(const std::vector<std::string>& tokens) {
  std::vector<SubbandKey> keys;
  for (const auto& tok : tokens) {
    int s = 0, o = 0, consumed = 0;
    if (std::sscanf(tok.c_str(), "%d,%d%n", &s, &o, &consumed) != 2 ||
        consumed != static_cast<int>(tok.size()))
      fail(Err::BadSelection, "expected 'scale,orientation', got '" + tok + "'");
    keys.push_back({s, o});
  }
  if (keys.size() != 6)
    fail(Err::BadSelection, "selection needs exactly 6 subbands, got " +
                                std::to_string(keys.size()));
  return keys;
}

int cmd_extract(const std::string& image_path, const std::string& out_path,
                const std::vector<SubbandKey>& selection, std::ostream& out,
                std::ostream& err) {
  try {
    const RgbImage img = load_image(image_path);
    ExtractOptions opts;
    opts.selection = selection;
    const FeatureSet fs = extract_features(img, opts);
    write_features(fs, out_path);
    out << "scalars=" << fs.covariances.size() * 9 << "\n";
    out << "selection=" << selection_string(fs.selection) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_score(const std::string& features_path, const std::string& image_path,
              std::ostream& out, std::ostream& err) {
  try {
    const FeatureSet fs = read_features(features_path);
    const RgbImage img = load_image(image_path);
    const QualityScore score = score_image(fs, img);
    for (std::size_t i = 0; i < score.subband.size(); ++i)
      out << "D" << (i + 1) << "=" << fixed9(score.subband[i]) << "\n";
    out << "D=" << fixed9(score.pooled) << "\n";
    out << "Q=" << fixed9(score.q) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto rows = read_manifest(args.manifest_path);
    EvalOptions opts;
    opts.fit_scope = args.fit_scope;
    opts.metric = args.metric;
    opts.selection = args.selection;
    if (!args.cache_dir.empty()) opts.cache_dir = args.cache_dir;

    const EvaluationReport report = evaluate_dataset(rows, opts);

    std::filesystem::create_directories(args.out_dir);
    write_report_csv(report, std::filesystem::path(args.out_dir) / "report.csv");
    write_scatter_csv(report, std::filesystem::path(args.out_dir) / "scatter.csv");

    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    out << "groups=" << report.groups.size() << "\n";
    out << "rows=" << report.overall.n << "\n";
    out << "overall_srcc=" << fixed9(report.overall.srcc) << "\n";
    out << "overall_plcc=" << fixed9(report.overall.plcc) << "\n";

    if (args.strict) {
      bool shortfall = !report.overall.sufficient;
      for (const auto& g : report.groups)
        if (!g.sufficient) shortfall = true;
      if (shortfall) {
        err << "strict mode: at least one group has too few valid rows\n";
        return kExitStrict;
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_manifest_tid2008(const std::string& mos_file,
                         const std::string& distorted_dir,
                         const std::string& reference_dir,
                         const std::string& out_path, std::ostream& out,
                         std::ostream& err) {
  try {
    const auto rows = tid2008_manifest(mos_file, distorted_dir, reference_dir);
    const auto tmp = out_path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) fail(Err::IoError, "cannot open " + tmp + " for writing");
      f << "distorted,reference,type,level,mos\n";
      for (const auto& r : rows) {
        if (r.distorted.find(',') != std::string::npos ||
            r.reference.find(',') != std::string::npos)
          fail(Err::ParseError, "path contains a comma: " + r.distorted);
        char mos_buf[32];
        std::snprintf(mos_buf, sizeof(mos_buf), "%.4f", r.mos);
        f << r.distorted << "," << r.reference << "," << r.type << ","
          << r.level << "," << mos_buf << "\n";
      }
      if (!f) fail(Err::IoError, "write failure on " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, out_path, ec);
    if (ec) fail(Err::IoError, "cannot move " + tmp + " to " + out_path);
    out << "rows=" << rows.size() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_diag_tiling(int width, int height, std::ostream& out, std::ostream& err) {
  try {
    const FilterBank bank = build_filter_bank(width, height);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", max_tiling_deviation(bank));
    out << "size=" << width << "x" << height << "\n";
    out << "max_tiling_deviation=" << buf << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_diag_mc_kld(int n, std::uint64_t seed, std::ostream& out,
                    std::ostream& err) {
  try {
    const Eigen::MatrixXd s1 = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd s2 = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    const double closed = kld_gaussian_multivariate(s1, s2);
    const auto mc = kld_monte_carlo(
        [&](const Eigen::VectorXd& x) { return mggd_log_pdf_any(x, s1, 1.0); },
        [&](const Eigen::VectorXd& x) { return mggd_log_pdf_any(x, s2, 1.0); },
        [&](int count, std::uint64_t s) {
          return sample_mggd_any(s1, 1.0, count, s);
        },
        n, seed);
    out << "closed=" << fixed9(closed) << "\n";
    out << "mc=" << fixed9(mc.estimate) << "\n";
    out << "stderr=" << fixed9(mc.standard_error) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_diag_sampler(double beta, int n, std::uint64_t seed, std::ostream& out,
                     std::ostream& err) {
  try {
    const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd samples = sample_mggd_any(sigma, beta, n, seed);
    const RadialGof gof = radial_chi_square_gof(samples, sigma, beta);
    out << "hist=";
    for (int i = 0; i < gof.bins; ++i)
      out << (i ? " " : "") << static_cast<long>(gof.observed[i]);
    out << "\n";
    out << "expected_per_bin=" << n / gof.bins << "\n";
    out << "chisq=" << fixed9(gof.statistic) << "\n";
    out << "bins=" << gof.bins << "\n";
    out << "critical=" << fixed9(gof.critical_001) << "\n";
    out << "pass=" << (gof.pass ? 1 : 0) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace rriqa::cli
