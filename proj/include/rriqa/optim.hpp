#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace rriqa {

struct NelderMeadOptions {
  int max_iterations = 5000;
  double f_tolerance = 1e-15;   // spread of simplex values
  double x_tolerance = 1e-12;   // simplex diameter
  double initial_step = 0.25;   // per-coordinate simplex edge, relative
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fmin = 0.0;
  int iterations = 0;
  // Best simplex value after each iteration; nonincreasing by construction.
  std::vector<double> best_history;
};

// Downhill simplex with the standard reflection/expansion/contraction/
// shrink coefficients (1, 2, 0.5, 0.5). Deterministic.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start,
                             const NelderMeadOptions& opts = {});

}  // namespace rriqa
