#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "rriqa/mggd.hpp"

namespace rriqa {

// Gauss hypergeometric 2F1(a, b; c; z) for |z| < 1 by direct series; the
// Pfaff transformation handles z < 0. Throws InvalidC when c is a
// non-positive integer and NoConvergence past 10^4 terms.
double gauss_2f1(double a, double b, double c, double z);

// Closed-form KLD(p1 || p2) between univariate zero-mean generalized
// Gaussians in the dispersion parametrization.
double kld_ggd_univariate(const GgdSigmaParams& p1, const GgdSigmaParams& p2);

// KLD(N(0, sigma1) || N(0, sigma2)) for zero-mean multivariate Gaussians:
// (ln(|S2|/|S1|) + tr(S2^{-1} S1) - m) / 2, all via Cholesky factors.
double kld_gaussian_multivariate(const Eigen::MatrixXd& sigma1,
                                 const Eigen::MatrixXd& sigma2);

struct BivariateGgdParams {
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
  double beta = 1.0;
};

// Closed-form KLD(p1 || p2) between bivariate zero-mean generalized
// Gaussians.
//
// Direction convention: gamma_1, gamma_2 are the eigenvalues of
// Sigma2^{-1} Sigma1 (computed from the symmetrized product
// L2^{-1} Sigma1 L2^{-T}), NOT their reciprocals. With reciprocals the
// beta = 1 case reduces to the Gaussian KLD with the arguments swapped;
// the convention used here is the one the Monte-Carlo estimator of
// E_1[ln p1 - ln p2] confirms.
double kld_bivariate_ggd(const BivariateGgdParams& p1,
                         const BivariateGgdParams& p2);

struct McKld {
  double estimate = 0.0;
  double standard_error = 0.0;
  bool overflow = false;  // a non-finite log-ratio was encountered
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;
using Sampler = std::function<Eigen::MatrixXd(int n, std::uint64_t seed)>;

// Direct Monte-Carlo estimate of KLD(p1 || p2): mean and standard error
// of log p1(x) - log p2(x) over n draws from p1. Deterministic per seed.
McKld kld_monte_carlo(const LogDensity& log_p1, const LogDensity& log_p2,
                      const Sampler& sample_p1, int n, std::uint64_t seed);

}  // namespace rriqa
