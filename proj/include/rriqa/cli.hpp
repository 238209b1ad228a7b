#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rriqa/benchmark.hpp"
#include "rriqa/errors.hpp"
#include "rriqa/pyramid.hpp"

namespace rriqa::cli {

// Exit-code taxonomy: 2 I/O and file-format failures, 3 pipeline failures,
// 4 dimension/selection/version mismatches, 5 strict-evaluation shortfall.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 2;
inline constexpr int kExitPipeline = 3;
inline constexpr int kExitMismatch = 4;
inline constexpr int kExitStrict = 5;

int exit_code_for(const Error& e);

// Parses 6 "scale,orientation" tokens; throws BadSelection.
std::vector<SubbandKey> parse_selection(const std::vector<std::string>& tokens);

int cmd_extract(const std::string& image_path, const std::string& out_path,
                const std::vector<SubbandKey>& selection, std::ostream& out,
                std::ostream& err);

int cmd_score(const std::string& features_path, const std::string& image_path,
              std::ostream& out, std::ostream& err);

struct EvaluateArgs {
  std::string manifest_path;
  std::string out_dir;
  FitScope fit_scope = FitScope::kGroup;
  MetricKind metric = MetricKind::kRr;
  bool strict = false;
  std::vector<SubbandKey> selection = default_selection();
  std::string cache_dir;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

int cmd_manifest_tid2008(const std::string& mos_file,
                         const std::string& distorted_dir,
                         const std::string& reference_dir,
                         const std::string& out_path, std::ostream& out,
                         std::ostream& err);

// Diagnostic witnesses for the acceptance checks.
int cmd_diag_tiling(int width, int height, std::ostream& out, std::ostream& err);
int cmd_diag_mc_kld(int n, std::uint64_t seed, std::ostream& out,
                    std::ostream& err);
int cmd_diag_sampler(double beta, int n, std::uint64_t seed, std::ostream& out,
                     std::ostream& err);

}  // namespace rriqa::cli
