#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rriqa/image.hpp"
#include "rriqa/pyramid.hpp"

namespace rriqa {

// Average ranks (1-based) with tied groups sharing their mean rank.
std::vector<double> rank_with_ties(std::span<const double> values);

// Spearman rank correlation, computed as the Pearson correlation of the
// tie-averaged rank vectors (equal to 1 - 6 sum d^2 / (N(N^2-1)) when no
// ties are present).
double srcc(std::span<const double> subjective, std::span<const double> objective);

// Pearson linear correlation.
double plcc(std::span<const double> subjective, std::span<const double> objective);

// Five-parameter VQEG mapping from objective score to predicted MOS:
// Quality(x) = b1 * (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5.
struct LogisticParams {
  double b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0, b5 = 0.0;
};

double logistic_predict(const LogisticParams& p, double x);

struct LogisticFit {
  LogisticParams params;
  double rmse = 0.0;
};

// Least-squares fit of the logistic by Nelder-Mead restarted from three
// deterministic initializations (positive span, negated span, and a
// linear-only least-squares start).
LogisticFit fit_logistic(std::span<const double> objective,
                         std::span<const double> mos);

struct ManifestRow {
  std::string distorted;
  std::string reference;
  std::string type;
  int level = 0;
  double mos = 0.0;
};

// CSV with header 'distorted,reference,type,level,mos'; no quoting, a path
// containing a comma is rejected.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Builds manifest rows from a TID2008-style listing ('<mos> iXX_YY_Z.bmp'
// per line): distortion type YY, level Z, reference iXX. Image paths are
// resolved against the supplied directories with the extension found on
// disk (the harness reads PPM, so a converted copy is expected).
std::vector<ManifestRow> tid2008_manifest(const std::filesystem::path& mos_file,
                                          const std::filesystem::path& distorted_dir,
                                          const std::filesystem::path& reference_dir);

enum class FitScope { kGroup, kGlobal };
enum class MetricKind { kRr, kPsnr };

struct EvalOptions {
  FitScope fit_scope = FitScope::kGroup;
  MetricKind metric = MetricKind::kRr;
  std::filesystem::path cache_dir;  // empty: in-memory feature cache only
  int min_group_size = 10;
  std::vector<SubbandKey> selection = default_selection();
};

struct GroupResult {
  std::string type;
  int n = 0;
  double srcc = 0.0;
  double plcc = 0.0;
  LogisticParams logistic;
  double rmse = 0.0;
  bool sufficient = true;  // false when fewer than min_group_size valid rows
};

struct ScatterRecord {
  std::string distorted;
  std::string type;
  double objective = 0.0;
  double mos = 0.0;
  double predicted_mos = 0.0;
};

struct EvaluationReport {
  std::vector<GroupResult> groups;  // sorted by type name
  GroupResult overall;
  std::vector<ScatterRecord> scatter;
  std::vector<std::string> warnings;
};

// Scores every manifest row (reference features computed once per
// reference image), groups by distortion type and reports SRCC plus
// logistic-fitted PLCC per group and overall. Per-row failures become
// warnings and the row is skipped.
EvaluationReport evaluate_dataset(std::span<const ManifestRow> rows,
                                  const EvalOptions& opts = {});

// 10 log10(1 / MSE) over the three [0,1] channels, capped at 99 dB.
double psnr_baseline(const RgbImage& reference, const RgbImage& distorted);

inline constexpr double kPsnrCapDb = 99.0;

void write_report_csv(const EvaluationReport& report,
                      const std::filesystem::path& path);
void write_scatter_csv(const EvaluationReport& report,
                       const std::filesystem::path& path);

}  // namespace rriqa
