#include "rriqa/benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rriqa/errors.hpp"
#include "rriqa/metric.hpp"
#include "rriqa/optim.hpp"

namespace rriqa {
namespace {

void check_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) fail(Err::NonFinite, "non-finite value in input");
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    fail(Err::DegenerateVariance, "an input has zero variance");
  return sab / (std::sqrt(saa) * std::sqrt(sbb));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<double> rank_with_ties(std::span<const double> values) {
  if (values.empty()) fail(Err::EmptyInput, "cannot rank an empty list");
  check_finite(values);

  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> subjective, std::span<const double> objective) {
  if (subjective.size() != objective.size())
    fail(Err::LengthMismatch, "score lists differ in length");
  if (subjective.size() < 3)
    fail(Err::LengthMismatch, "need at least 3 pairs");
  const auto rs = rank_with_ties(subjective);
  const auto ro = rank_with_ties(objective);
  return pearson(rs, ro);
}

double plcc(std::span<const double> subjective, std::span<const double> objective) {
  if (subjective.size() != objective.size())
    fail(Err::LengthMismatch, "score lists differ in length");
  if (subjective.size() < 3)
    fail(Err::LengthMismatch, "need at least 3 pairs");
  check_finite(subjective);
  check_finite(objective);
  return pearson(subjective, objective);
}

double logistic_predict(const LogisticParams& p, double x) {
  // exp saturates cleanly in IEEE arithmetic; clamp only to dodge the
  // inf*0 corner when b2 is itself infinite.
  const double t = std::clamp(p.b2 * (x - p.b3), -745.0, 745.0);
  const double logistic = 0.5 - 1.0 / (1.0 + std::exp(t));
  return p.b1 * logistic + p.b4 * x + p.b5;
}

LogisticFit fit_logistic(std::span<const double> objective,
                         std::span<const double> mos) {
  const std::size_t n = objective.size();
  if (n != mos.size()) fail(Err::LengthMismatch, "score lists differ in length");
  if (n < 10) fail(Err::BadInput, "need at least 10 points to fit");
  check_finite(objective);
  check_finite(mos);

  auto sse = [&](const Eigen::VectorXd& v) {
    const LogisticParams p{v[0], v[1], v[2], v[3], v[4]};
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = mos[i] - logistic_predict(p, objective[i]);
      acc += e * e;
    }
    return std::isfinite(acc) ? acc : std::numeric_limits<double>::max();
  };

  std::vector<double> sorted_x(objective.begin(), objective.end());
  std::sort(sorted_x.begin(), sorted_x.end());
  const double median_x = sorted_x[sorted_x.size() / 2];
  const auto [mos_min_it, mos_max_it] = std::minmax_element(mos.begin(), mos.end());
  const double span = *mos_max_it - *mos_min_it;

  // Linear least squares for the b4 x + b5 start.
  const double mean_x = std::accumulate(objective.begin(), objective.end(), 0.0) / n;
  const double mean_y = std::accumulate(mos.begin(), mos.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (objective[i] - mean_x) * (objective[i] - mean_x);
    sxy += (objective[i] - mean_x) * (mos[i] - mean_y);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;

  std::vector<Eigen::VectorXd> starts;
  Eigen::VectorXd s0(5);
  s0 << span, 1.0, median_x, 0.0, *mos_min_it;
  starts.push_back(s0);
  s0[0] = -span;
  starts.push_back(s0);
  Eigen::VectorXd s2(5);
  s2 << 0.0, 1.0, median_x, slope, mean_y - slope * mean_x;
  starts.push_back(s2);

  NelderMeadOptions nm;
  nm.max_iterations = 4000;
  bool any = false;
  Eigen::VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    const auto r = nelder_mead(sse, start, nm);
    if (std::isfinite(r.fmin) && r.fmin < best_f) {
      best_f = r.fmin;
      best_x = r.x;
      any = true;
    }
  }
  if (!any) fail(Err::FitFailed, "all restarts diverged");

  // Re-polish from the winner until the simplex stops improving.
  for (int round = 0; round < 3; ++round) {
    const auto r = nelder_mead(sse, best_x, nm);
    if (!(r.fmin < best_f)) break;
    best_f = r.fmin;
    best_x = r.x;
  }

  LogisticFit fit;
  fit.params = {best_x[0], best_x[1], best_x[2], best_x[3], best_x[4]};
  fit.rmse = std::sqrt(best_f / static_cast<double>(n));
  return fit;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open " + path.string());

  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    return f;
  };

  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) fail(Err::ParseError, "empty manifest");
  ++line_no;
  if (split(line) != std::vector<std::string>{"distorted", "reference", "type",
                                              "level", "mos"})
    fail(Err::ParseError, "line 1: expected header "
                          "'distorted,reference,type,level,mos'");

  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 5)
      fail(Err::ParseError, "line " + std::to_string(line_no) +
                                ": expected 5 comma-separated fields, got " +
                                std::to_string(f.size()));
    ManifestRow row;
    row.distorted = f[0];
    row.reference = f[1];
    row.type = f[2];
    if (row.distorted.empty() || row.reference.empty() || row.type.empty())
      fail(Err::ParseError,
           "line " + std::to_string(line_no) + ": empty field");
    {
      const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(),
                                       row.level);
      if (res.ec != std::errc{} || res.ptr != f[3].data() + f[3].size())
        fail(Err::ParseError,
             "line " + std::to_string(line_no) + ": bad level '" + f[3] + "'");
    }
    {
      const auto res = std::from_chars(f[4].data(), f[4].data() + f[4].size(),
                                       row.mos);
      if (res.ec != std::errc{} || res.ptr != f[4].data() + f[4].size() ||
          !std::isfinite(row.mos))
        fail(Err::ParseError,
             "line " + std::to_string(line_no) + ": bad mos '" + f[4] + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

const char* kTid2008Types[17] = {
    "Additive Gaussian noise",
    "Additive noise in color components",
    "Spatially correlated noise",
    "Masked noise",
    "High frequency noise",
    "Impulse noise",
    "Quantization noise",
    "Gaussian blur",
    "Image denoising",
    "JPEG compression",
    "JPEG2000 compression",
    "JPEG transmission errors",
    "JPEG2000 transmission errors",
    "Non eccentricity pattern noise",
    "Local block-wise distortions",
    "Mean shift (intensity shift)",
    "Contrast change",
};

std::filesystem::path resolve_stem(const std::filesystem::path& dir,
                                   const std::string& stem) {
  for (const char* ext : {".ppm", ".PPM", ".pnm"}) {
    for (const bool upper : {false, true}) {
      std::string name = stem;
      if (upper && !name.empty())
        name[0] = static_cast<char>(std::toupper(name[0]));
      auto candidate = dir / (name + ext);
      if (std::filesystem::exists(candidate)) return candidate;
    }
  }
  return dir / (stem + ".ppm");
}

}  // namespace

std::vector<ManifestRow> tid2008_manifest(const std::filesystem::path& mos_file,
                                          const std::filesystem::path& distorted_dir,
                                          const std::filesystem::path& reference_dir) {
  std::ifstream in(mos_file);
  if (!in) fail(Err::IoError, "cannot open " + mos_file.string());

  std::vector<ManifestRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    double mos = 0.0;
    std::string name;
    if (!(ls >> mos >> name)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      fail(Err::ParseError, "line " + std::to_string(line_no) +
                                ": expected '<mos> <filename>'");
    }
    // iXX_YY_Z.bmp -> reference iXX, distortion YY, level Z
    int img = 0, type = 0, level = 0;
    if (std::sscanf(name.c_str(), "%*1[iI]%2d_%2d_%d", &img, &type, &level) != 3 ||
        type < 1 || type > 17)
      fail(Err::ParseError, "line " + std::to_string(line_no) +
                                ": unrecognized image name '" + name + "'");
    char stem[32];
    std::snprintf(stem, sizeof(stem), "i%02d_%02d_%d", img, type, level);
    char ref_stem[16];
    std::snprintf(ref_stem, sizeof(ref_stem), "i%02d", img);

    ManifestRow row;
    row.distorted = resolve_stem(distorted_dir, stem).string();
    row.reference = resolve_stem(reference_dir, ref_stem).string();
    row.type = kTid2008Types[type - 1];
    row.level = level;
    row.mos = mos;
    rows.push_back(std::move(row));
  }
  return rows;
}

double psnr_baseline(const RgbImage& reference, const RgbImage& distorted) {
  if (reference.width != distorted.width || reference.height != distorted.height)
    fail(Err::DimensionMismatch, "images differ in size");
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto& a = reference.channel(c);
    const auto& b = distorted.channel(c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
  }
  const double mse = acc / (3.0 * reference.pixel_count());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(10.0 * std::log10(1.0 / mse), kPsnrCapDb);
}

namespace {

struct ScoredRow {
  const ManifestRow* row;
  double objective;
};

GroupResult insufficient_group(const std::string& type, int n) {
  GroupResult g;
  g.type = type;
  g.n = n;
  g.srcc = g.plcc = g.rmse = std::numeric_limits<double>::quiet_NaN();
  g.logistic = {std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
  g.sufficient = false;
  return g;
}

}  // namespace

EvaluationReport evaluate_dataset(std::span<const ManifestRow> rows,
                                  const EvalOptions& opts) {
  EvaluationReport report;

  // Deterministic processing order regardless of manifest order.
  std::vector<const ManifestRow*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ManifestRow* a, const ManifestRow* b) {
                     return a->distorted < b->distorted;
                   });

  std::map<std::string, FeatureSet> feature_cache;
  std::map<std::pair<int, int>, FilterBank> bank_cache;
  std::map<std::string, RgbImage> reference_cache;  // PSNR baseline only

  auto bank_for = [&](int w, int h) -> const FilterBank* {
    const auto key = std::make_pair(w, h);
    auto it = bank_cache.find(key);
    if (it == bank_cache.end())
      it = bank_cache.emplace(key, build_filter_bank(w, h)).first;
    return &it->second;
  };

  ExtractOptions extract_opts;
  extract_opts.selection = opts.selection;

  auto features_for = [&](const std::string& ref_path) -> const FeatureSet& {
    auto it = feature_cache.find(ref_path);
    if (it != feature_cache.end()) return it->second;

    std::filesystem::path cached;
    if (!opts.cache_dir.empty()) {
      cached = opts.cache_dir /
               (std::to_string(std::hash<std::string>{}(ref_path)) + ".rrf");
      if (std::filesystem::exists(cached))
        return feature_cache.emplace(ref_path, read_features(cached))
            .first->second;
    }
    const RgbImage img = load_image(ref_path);
    const RgbImage cropped = crop_to_pyramid_size(img, kPyramidScales);
    const FeatureSet fs = extract_features(
        img, extract_opts, bank_for(cropped.width, cropped.height));
    if (!cached.empty()) {
      std::filesystem::create_directories(opts.cache_dir);
      write_features(fs, cached);
    }
    return feature_cache.emplace(ref_path, fs).first->second;
  };

  std::map<std::string, std::vector<ScoredRow>> groups;
  std::vector<ScoredRow> all;
  for (const ManifestRow* row : sorted) {
    try {
      double objective = 0.0;
      if (opts.metric == MetricKind::kRr) {
        const FeatureSet& ref = features_for(row->reference);
        const RgbImage dist = load_image(row->distorted);
        const RgbImage cropped = crop_to_pyramid_size(dist, kPyramidScales);
        objective =
            score_image(ref, dist, bank_for(cropped.width, cropped.height)).q;
      } else {
        auto it = reference_cache.find(row->reference);
        if (it == reference_cache.end())
          it = reference_cache.emplace(row->reference, load_image(row->reference))
                   .first;
        objective = psnr_baseline(it->second, load_image(row->distorted));
      }
      groups[row->type].push_back({row, objective});
      all.push_back({row, objective});
    } catch (const Error& e) {
      report.warnings.push_back(row->distorted + ": " + e.what());
    }
  }

  auto extract_columns = [](const std::vector<ScoredRow>& v) {
    std::pair<std::vector<double>, std::vector<double>> cols;  // mos, objective
    for (const auto& s : v) {
      cols.first.push_back(s.row->mos);
      cols.second.push_back(s.objective);
    }
    return cols;
  };

  auto fit_group = [&](const std::string& label,
                       const std::vector<ScoredRow>& members,
                       const LogisticFit* forced_fit) -> GroupResult {
    const auto [mos_col, obj_col] = extract_columns(members);
    GroupResult g;
    g.type = label;
    g.n = static_cast<int>(members.size());
    try {
      g.srcc = srcc(mos_col, obj_col);
      const LogisticFit fit =
          forced_fit ? *forced_fit : fit_logistic(obj_col, mos_col);
      g.logistic = fit.params;
      std::vector<double> predicted;
      predicted.reserve(members.size());
      double sse = 0.0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        predicted.push_back(logistic_predict(fit.params, obj_col[i]));
        const double e = mos_col[i] - predicted.back();
        sse += e * e;
      }
      g.rmse = std::sqrt(sse / static_cast<double>(members.size()));
      g.plcc = plcc(mos_col, predicted);
    } catch (const Error& e) {
      report.warnings.push_back("group " + label + ": " + e.what());
      GroupResult bad = insufficient_group(label, g.n);
      bad.sufficient = true;  // enough rows, statistics degenerate
      return bad;
    }
    return g;
  };

  // Global fit backs the overall row and, under global scope, every group.
  LogisticFit global_fit;
  bool have_global_fit = false;
  if (all.size() >= static_cast<std::size_t>(opts.min_group_size)) {
    const auto [all_mos, all_obj] = extract_columns(all);
    try {
      global_fit = fit_logistic(all_obj, all_mos);
      have_global_fit = true;
    } catch (const Error& e) {
      report.warnings.push_back(std::string("global fit: ") + e.what());
    }
  }

  std::map<std::string, LogisticFit> group_fits;
  for (const auto& [type, members] : groups) {
    if (members.size() < static_cast<std::size_t>(opts.min_group_size)) {
      report.groups.push_back(insufficient_group(type, static_cast<int>(members.size())));
      report.warnings.push_back("group " + type + ": only " +
                                std::to_string(members.size()) +
                                " valid rows, need " +
                                std::to_string(opts.min_group_size));
      continue;
    }
    const LogisticFit* forced = nullptr;
    if (opts.fit_scope == FitScope::kGlobal && have_global_fit)
      forced = &global_fit;
    GroupResult g = fit_group(type, members, forced);
    if (g.sufficient && opts.fit_scope == FitScope::kGroup)
      group_fits[type] = LogisticFit{g.logistic, g.rmse};
    report.groups.push_back(std::move(g));
  }

  if (all.size() >= static_cast<std::size_t>(opts.min_group_size)) {
    report.overall =
        fit_group("overall", all, have_global_fit ? &global_fit : nullptr);
  } else {
    report.overall = insufficient_group("overall", static_cast<int>(all.size()));
    report.warnings.push_back("overall: only " + std::to_string(all.size()) +
                              " valid rows, need " +
                              std::to_string(opts.min_group_size));
  }

  for (const auto& [type, members] : groups) {
    const LogisticFit* fit = nullptr;
    if (opts.fit_scope == FitScope::kGroup) {
      auto it = group_fits.find(type);
      if (it != group_fits.end()) fit = &it->second;
    }
    if (!fit && have_global_fit) fit = &global_fit;
    for (const auto& s : members) {
      ScatterRecord rec;
      rec.distorted = s.row->distorted;
      rec.type = type;
      rec.objective = s.objective;
      rec.mos = s.row->mos;
      rec.predicted_mos =
          fit ? logistic_predict(fit->params, s.objective)
              : std::numeric_limits<double>::quiet_NaN();
      report.scatter.push_back(std::move(rec));
    }
  }

  return report;
}

void write_report_csv(const EvaluationReport& report,
                      const std::filesystem::path& path) {
  std::ostringstream out;
  out << "type,n,srcc,plcc,b1,b2,b3,b4,b5,rmse\n";
  auto emit = [&](const GroupResult& g) {
    out << g.type << "," << g.n << "," << format_double(g.srcc) << ","
        << format_double(g.plcc) << "," << format_double(g.logistic.b1) << ","
        << format_double(g.logistic.b2) << "," << format_double(g.logistic.b3)
        << "," << format_double(g.logistic.b4) << ","
        << format_double(g.logistic.b5) << "," << format_double(g.rmse) << "\n";
  };
  for (const auto& g : report.groups) emit(g);
  emit(report.overall);

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open " + tmp + " for writing");
    f << out.str();
    if (!f) fail(Err::IoError, "write failure on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Err::IoError, "cannot move " + tmp + " to " + path.string());
}

void write_scatter_csv(const EvaluationReport& report,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  out << "distorted,type,q,mos,predicted_mos\n";
  for (const auto& s : report.scatter) {
    out << s.distorted << "," << s.type << "," << format_double(s.objective)
        << "," << format_double(s.mos) << "," << format_double(s.predicted_mos)
        << "\n";
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open " + tmp + " for writing");
    f << out.str();
    if (!f) fail(Err::IoError, "write failure on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Err::IoError, "cannot move " + tmp + " to " + path.string());
}

}  // namespace rriqa
