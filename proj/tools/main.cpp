#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "rriqa/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reduced-reference color image quality assessment"};
  app.require_subcommand(1);

  std::string image_path, out_path, features_path;
  std::vector<std::string> selection_tokens;
  std::string manifest_path, out_dir = ".", cache_dir;
  std::string fit_scope = "group", metric = "rr";
  bool strict = false;
  std::uint64_t seed = 1;
  std::string mos_file, distorted_dir, reference_dir;
  int diag_width = 64, diag_height = 64, diag_n = 100000;
  double diag_beta = 1.0;

  auto* extract = app.add_subcommand("extract", "Extract reference features");
  extract->add_option("image", image_path, "Reference image (PPM)")->required();
  extract->add_option("-o,--out", out_path, "Output feature file")->required();
  extract->add_option("--selection", selection_tokens,
                      "6 subbands as scale,orientation")
      ->expected(6);

  auto* score = app.add_subcommand("score", "Score a distorted image");
  score->add_option("features", features_path, "Reference feature file")
      ->required();
  score->add_option("image", image_path, "Distorted image (PPM)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Run a dataset evaluation");
  evaluate->add_option("manifest", manifest_path, "Manifest CSV")->required();
  evaluate->add_option("-o,--out", out_dir, "Output directory");
  evaluate->add_option("--fit-scope", fit_scope, "Logistic fit scope")
      ->check(CLI::IsMember({"group", "global"}));
  evaluate->add_option("--metric", metric, "Objective metric")
      ->check(CLI::IsMember({"rr", "psnr"}));
  evaluate->add_flag("--strict", strict, "Fail when a group is insufficient");
  evaluate->add_option("--selection", selection_tokens,
                       "6 subbands as scale,orientation")
      ->expected(6);
  evaluate->add_option("--cache-dir", cache_dir, "Feature cache directory");

  auto* manifest =
      app.add_subcommand("manifest-tid2008", "Build a manifest from TID2008");
  manifest->add_option("--mos", mos_file, "mos_with_names.txt")->required();
  manifest->add_option("--images", distorted_dir, "distorted images directory")
      ->required();
  manifest->add_option("--refs", reference_dir, "reference images directory")
      ->required();
  manifest->add_option("-o,--out", out_path, "Output manifest CSV")->required();

  auto* diag = app.add_subcommand("diag", "Diagnostics");
  diag->group("");  // hidden
  auto* tiling = diag->add_subcommand("tiling", "Filter tiling deviation");
  tiling->add_option("--width", diag_width);
  tiling->add_option("--height", diag_height);
  auto* mc = diag->add_subcommand("mc-kld", "Monte-Carlo KLD cross-check");
  mc->add_option("--n", diag_n);
  mc->add_option("--seed", seed);
  auto* sampler = diag->add_subcommand("sampler", "Sampler radial fit");
  sampler->add_option("--beta", diag_beta);
  sampler->add_option("--n", diag_n);
  sampler->add_option("--seed", seed);
  diag->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      const auto selection = selection_tokens.empty()
                                 ? rriqa::default_selection()
                                 : rriqa::cli::parse_selection(selection_tokens);
      return rriqa::cli::cmd_extract(image_path, out_path, selection, std::cout,
                                     std::cerr);
    }
    if (*score)
      return rriqa::cli::cmd_score(features_path, image_path, std::cout,
                                   std::cerr);
    if (*evaluate) {
      rriqa::cli::EvaluateArgs args;
      args.manifest_path = manifest_path;
      args.out_dir = out_dir;
      args.fit_scope = fit_scope == "global" ? rriqa::FitScope::kGlobal
                                             : rriqa::FitScope::kGroup;
      args.metric =
          metric == "psnr" ? rriqa::MetricKind::kPsnr : rriqa::MetricKind::kRr;
      args.strict = strict;
      args.cache_dir = cache_dir;
      if (!selection_tokens.empty())
        args.selection = rriqa::cli::parse_selection(selection_tokens);
      return rriqa::cli::cmd_evaluate(args, std::cout, std::cerr);
    }
    if (*manifest)
      return rriqa::cli::cmd_manifest_tid2008(mos_file, distorted_dir,
                                              reference_dir, out_path,
                                              std::cout, std::cerr);
    if (*tiling)
      return rriqa::cli::cmd_diag_tiling(diag_width, diag_height, std::cout,
                                         std::cerr);
    if (*mc) return rriqa::cli::cmd_diag_mc_kld(diag_n, seed, std::cout, std::cerr);
    if (*sampler)
      return rriqa::cli::cmd_diag_sampler(diag_beta, diag_n, seed, std::cout,
                                          std::cerr);
  } catch (const rriqa::Error& e) {
    std::cerr << e.what() << "\n";
    return rriqa::cli::exit_code_for(e);
  }
  return 0;
}
