#include "rriqa/divergence.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rriqa/errors.hpp"

namespace rriqa {
namespace {

constexpr int kMaxSeriesTerms = 10000;

bool is_nonpositive_integer(double v) {
  return v <= 0.0 && v == std::floor(v);
}

double gauss_2f1_series(double a, double b, double c, double z) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
    sum += term;
    if (term == 0.0 || std::abs(term) < 1e-15 * std::abs(sum)) return sum;
  }
  fail(Err::NoConvergence, "2F1 series did not converge for z=" +
                               std::to_string(z));
}

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& s, Err err) {
  if (s.rows() != s.cols()) fail(Err::InvalidParams, "sigma must be square");
  if (!s.allFinite()) fail(Err::InvalidParams, "sigma has non-finite entries");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(Err::InvalidParams, "sigma is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) fail(err, "matrix is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

double gauss_2f1(double a, double b, double c, double z) {
  if (is_nonpositive_integer(c))
    fail(Err::InvalidC, "c must not be a non-positive integer, got " +
                            std::to_string(c));
  if (!(std::abs(z) < 1.0))
    fail(Err::HypergeometricDomain, "|z| must be < 1, got " + std::to_string(z));
  if (z == 0.0) return 1.0;
  if (z < 0.0) {
    // Pfaff: 2F1(a,b;c;z) = (1-z)^{-b} 2F1(c-a, b; c; z/(z-1)); the mapped
    // argument lies in (0, 1) where the series converges.
    return std::pow(1.0 - z, -b) * gauss_2f1_series(c - a, b, c, z / (z - 1.0));
  }
  return gauss_2f1_series(a, b, c, z);
}

double kld_ggd_univariate(const GgdSigmaParams& p1, const GgdSigmaParams& p2) {
  for (const auto* p : {&p1, &p2}) {
    if (!(p->sigma > 0.0) || !(p->beta > 0.0) || !std::isfinite(p->sigma) ||
        !std::isfinite(p->beta))
      fail(Err::InvalidParams, "GGD parameters must be positive and finite");
  }
  const double inv2b1 = 1.0 / (2.0 * p1.beta);
  const double inv2b2 = 1.0 / (2.0 * p2.beta);
  const double log_ratio = std::log(p1.beta) - std::log(p2.beta) +
                           (inv2b2 - inv2b1) * std::numbers::ln2 +
                           std::log(p2.sigma) - std::log(p1.sigma) +
                           std::lgamma(inv2b2) - std::lgamma(inv2b1);
  const double log_scale = inv2b1 * std::numbers::ln2 + std::log(p1.sigma) -
                           inv2b2 * std::numbers::ln2 - std::log(p2.sigma);
  const double moment = std::exp(2.0 * p2.beta * log_scale +
                                 std::lgamma((2.0 * p2.beta + 1.0) / (2.0 * p1.beta)) -
                                 std::lgamma(inv2b1));
  return log_ratio + moment - inv2b1;
}

double kld_gaussian_multivariate(const Eigen::MatrixXd& sigma1,
                                 const Eigen::MatrixXd& sigma2) {
  if (sigma1.rows() != sigma2.rows() || sigma1.cols() != sigma2.cols())
    fail(Err::DimensionMismatch, "covariance dimensions differ");
  const auto llt1 = spd_factor(sigma1, Err::SingularSigma);
  const auto llt2 = spd_factor(sigma2, Err::SingularSigma);
  const double m = static_cast<double>(sigma1.rows());
  const double trace_term = llt2.solve(sigma1).trace();
  return 0.5 * (log_det(llt2) - log_det(llt1) + trace_term - m);
}

double kld_bivariate_ggd(const BivariateGgdParams& p1,
                         const BivariateGgdParams& p2) {
  if (!(p1.beta > 0.0) || !(p2.beta > 0.0))
    fail(Err::InvalidParams, "shape must be positive");
  const auto llt1 = spd_factor(p1.sigma, Err::SingularSigma);
  const auto llt2 = spd_factor(p2.sigma, Err::SingularSigma);

  // Eigenvalues of Sigma2^{-1} Sigma1 via the SPD-similar product
  // L2^{-1} Sigma1 L2^{-T}.
  const Eigen::MatrixXd l2 = llt2.matrixL();
  Eigen::MatrixXd w = l2.triangularView<Eigen::Lower>().solve(p1.sigma);
  w = l2.triangularView<Eigen::Lower>()
          .solve(w.transpose())
          .transpose();  // now L2^{-1} Sigma1 L2^{-T}
  const Eigen::Matrix2d symmetrized = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(symmetrized);
  const double gamma1 = es.eigenvalues()[0];
  const double gamma2 = es.eigenvalues()[1];
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
    fail(Err::SingularSigma, "relative eigenvalues must be positive");

  const double a_ratio = (gamma1 - gamma2) / (gamma1 + gamma2);
  if (!(std::abs(a_ratio) < 1.0))
    fail(Err::HypergeometricDomain, "eigenvalue ratio outside (-1, 1)");

  const double b1 = p1.beta, b2 = p2.beta;
  const double log_first = std::lgamma(1.0 / b2) - std::lgamma(1.0 / b1) +
                           (1.0 / b2 - 1.0 / b1) * std::numbers::ln2 +
                           0.5 * (log_det(llt2) - log_det(llt1));
  const double hyper =
      gauss_2f1((1.0 - b2) / 2.0, -b2 / 2.0, 1.0, a_ratio * a_ratio);
  const double moment =
      std::exp((b2 / b1 - 1.0) * std::numbers::ln2 +
               std::lgamma((b2 + 1.0) / b1) - std::lgamma(1.0 / b1) +
               b2 * std::log(0.5 * (gamma1 + gamma2))) *
      hyper;
  return log_first + std::log(b1 / b2) - 1.0 / b1 + moment;
}

McKld kld_monte_carlo(const LogDensity& log_p1, const LogDensity& log_p2,
                      const Sampler& sample_p1, int n, std::uint64_t seed) {
  if (n < 10000) fail(Err::InvalidParams, "need at least 10^4 samples");
  const Eigen::MatrixXd samples = sample_p1(n, seed);

  McKld result;
  double mean = 0.0;
  double m2 = 0.0;
  Eigen::VectorXd x(samples.rows());
  for (int i = 0; i < n; ++i) {
    x = samples.col(i);
    const double d = log_p1(x) - log_p2(x);
    if (!std::isfinite(d)) {
      result.overflow = true;
      result.estimate = std::numeric_limits<double>::infinity();
      result.standard_error = std::numeric_limits<double>::infinity();
      return result;
    }
    const double delta = d - mean;
    mean += delta / (i + 1.0);
    m2 += delta * (d - mean);
  }
  result.estimate = mean;
  result.standard_error = std::sqrt(m2 / (static_cast<double>(n) - 1.0) / n);
  return result;
}

}  // namespace rriqa
