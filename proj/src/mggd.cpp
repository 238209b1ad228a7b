#include "rriqa/mggd.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rriqa/errors.hpp"

namespace rriqa {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMinSamples = 30;
constexpr double kInnerTol = 1e-10;
constexpr int kInnerMaxIter = 200;
constexpr double kOuterTol = 1e-6;
constexpr int kOuterMaxIter = 50;
constexpr double kBetaTol = 1e-9;  // finer than the 1e-6 contract so the
                                   // outer alternation can settle below it

void check_shape(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    fail(Err::InvalidParams, "shape must be positive, got " + std::to_string(beta));
}

void check_symmetric(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.rows() < 1)
    fail(Err::InvalidParams, "sigma must be square");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (((s - s.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale)
    fail(Err::InvalidParams, "sigma is not symmetric");
  if (!s.allFinite()) fail(Err::InvalidParams, "sigma has non-finite entries");
}

Eigen::LLT<Eigen::MatrixXd> cholesky_or_fail(const Eigen::MatrixXd& s, Err err) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    fail(err, "matrix is not positive definite");
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

}  // namespace

double ggd_pdf(double x, const GgdAlphaParams& p) {
  if (!(p.alpha > 0.0)) fail(Err::InvalidParams, "alpha must be positive");
  check_shape(p.beta);
  const double log_norm = std::log(p.beta) - std::log(2.0 * p.alpha) -
                          std::lgamma(1.0 / p.beta);
  return std::exp(log_norm - std::pow(std::abs(x) / p.alpha, p.beta));
}

double ggd_sigma_log_pdf(double x, const GgdSigmaParams& p) {
  if (!(p.sigma > 0.0)) fail(Err::InvalidParams, "sigma must be positive");
  check_shape(p.beta);
  const double inv2b = 1.0 / (2.0 * p.beta);
  const double log_norm = std::log(p.beta) - std::log(p.sigma) -
                          inv2b * std::numbers::ln2 - std::lgamma(inv2b);
  const double t = x / p.sigma;
  return log_norm - 0.5 * std::pow(t * t, p.beta);
}

double mggd_log_pdf_any(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma,
                        double beta) {
  check_shape(beta);
  check_symmetric(sigma);
  if (x.size() != sigma.rows())
    fail(Err::InvalidParams, "dimension mismatch between x and sigma");
  const auto llt = cholesky_or_fail(sigma, Err::InvalidParams);
  const double m = static_cast<double>(sigma.rows());
  const double m2b = m / (2.0 * beta);
  const double log_norm = std::lgamma(m / 2.0) - (m / 2.0) * std::log(kPi) -
                          std::lgamma(m2b) - m2b * std::numbers::ln2 +
                          std::log(beta) - 0.5 * log_det_from_llt(llt);
  const double u = llt.matrixL().solve(x).squaredNorm();
  return log_norm - 0.5 * std::pow(u, beta);
}

double mggd_log_pdf(const Eigen::Vector3d& x, const MggdParams& p) {
  return mggd_log_pdf_any(x, p.sigma, p.beta);
}

double mahalanobis_any(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma) {
  check_symmetric(sigma);
  if (x.size() != sigma.rows())
    fail(Err::InvalidParams, "dimension mismatch between x and sigma");
  const auto llt = cholesky_or_fail(sigma, Err::SingularSigma);
  return llt.matrixL().solve(x).squaredNorm();
}

double mahalanobis(const Eigen::Vector3d& x, const Eigen::Matrix3d& sigma) {
  return mahalanobis_any(x, sigma);
}

Eigen::MatrixXd ridge_regularized(const Eigen::MatrixXd& s) {
  check_symmetric(s);
  const double m = static_cast<double>(s.rows());
  // Floored at normal-range tiny so an all-zero moment (constant image)
  // still inverts to something finite.
  const double eps =
      std::max(1e-10 * s.trace() / m, std::numeric_limits<double>::min());
  return s + eps * Eigen::MatrixXd::Identity(s.rows(), s.cols());
}

Eigen::Matrix3d sample_second_moment(const Eigen::Matrix3Xd& x) {
  if (x.cols() < 1) fail(Err::DegenerateData, "no samples");
  // Lower-triangle rank update mirrored upward: exactly symmetric entries
  // by construction, not by kernel coincidence.
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  s.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(x.cols()));
  return s.selfadjointView<Eigen::Lower>();
}

namespace {

// v_i = x_i' M^{-1} x_i for every column.
Eigen::ArrayXd column_mahalanobis(const Eigen::Matrix3Xd& x,
                                  const Eigen::Matrix3d& m_mat) {
  Eigen::LLT<Eigen::Matrix3d> llt(m_mat);
  if (llt.info() != Eigen::Success)
    fail(Err::SingularSigma, "scatter matrix lost positive definiteness");
  const Eigen::Matrix3Xd z = llt.matrixL().solve(x);
  return z.colwise().squaredNorm().transpose().array();
}

void check_not_collinear(const Eigen::Matrix3d& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s);
  const auto& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-10 * std::max(ev.maxCoeff(), 0.0)))
    fail(Err::DegenerateData,
         "sample second moment is rank deficient (collinear columns)");
}

}  // namespace

Eigen::Matrix3d estimate_sigma_fixed_point(const Eigen::Matrix3Xd& x,
                                           double beta,
                                           const Eigen::Matrix3d& init) {
  check_shape(beta);
  const Eigen::Index n = x.cols();
  if (n < kMinSamples)
    fail(Err::DegenerateData,
         "need at least " + std::to_string(kMinSamples) + " samples, got " +
             std::to_string(n));
  if (!x.allFinite()) fail(Err::DegenerateData, "non-finite samples");
  check_not_collinear(sample_second_moment(x));
  check_symmetric(init);
  cholesky_or_fail(init, Err::InvalidParams);

  const double m = 3.0;
  if (beta == 1.0) {
    // u^{beta-1} == 1: the recursion lands on the sample second moment in
    // one step from any initialization.
    return ridge_regularized(sample_second_moment(x));
  }

  // Iterate on the trace-normalized scatter; recover the scale afterwards
  // from the identity sum_i u_i^beta = n m / beta satisfied at the root.
  Eigen::Matrix3d shape = init * (m / init.trace());
  Eigen::ArrayXd v;
  double previous_step = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int iter = 0; iter < kInnerMaxIter; ++iter) {
    v = column_mahalanobis(x, shape);
    Eigen::Matrix3d next = Eigen::Matrix3d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double vi = v[i];
      if (vi <= 0.0) continue;  // a zero column contributes nothing
      next.noalias() += std::pow(vi, beta - 1.0) * x.col(i) * x.col(i).transpose();
    }
    next = ridge_regularized(next);
    next *= m / next.trace();

    const double step = relative_frobenius(next, shape);
    if (step > previous_step) next = 0.5 * (shape + next);  // damp oscillation
    previous_step = step;
    shape = next;
    if (step < kInnerTol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(Err::DidNotConverge, "sigma fixed point did not settle in " +
                                  std::to_string(kInnerMaxIter) + " iterations");

  v = column_mahalanobis(x, shape);
  const double mean_vbeta = v.pow(beta).sum() / static_cast<double>(n);
  const double scale = std::pow(beta * mean_vbeta / m, 1.0 / beta);
  return shape * scale;
}

namespace {

// LHS of the shape likelihood equation,
// (beta/2) sum u^beta ln u - n [ (m/(2 beta)) (ln 2 + psi(m/(2 beta))) + 1 ],
// which is -beta times the beta-derivative of the log-likelihood.
double shape_equation_residual(const Eigen::ArrayXd& u, double beta) {
  const double m = 3.0;
  const Eigen::Index n = u.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ui = u[i];
    if (ui <= 0.0) continue;  // u^beta ln u -> 0 as u -> 0
    acc += std::pow(ui, beta) * std::log(ui);
  }
  const double m2b = m / (2.0 * beta);
  return 0.5 * beta * acc -
         static_cast<double>(n) *
             (m2b * (std::numbers::ln2 + boost::math::digamma(m2b)) + 1.0);
}

double bisect_shape_root(const std::function<double(double)>& residual,
                         double lo, double hi) {
  double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (!std::isfinite(f_lo) || !std::isfinite(f_hi) || f_lo * f_hi > 0.0)
    fail(Err::NoRootInBracket,
         "shape equation has no sign change on [" + std::to_string(lo) + ", " +
             std::to_string(hi) + "]");
  while (hi - lo > kBetaTol) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if (f_mid == 0.0) return mid;
    if (f_lo * f_mid < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      f_lo = f_mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_bracket(double lo, double hi) {
  if (!(lo > 0.05) || !(hi <= 5.0) || !(lo < hi))
    fail(Err::InvalidParams, "beta bracket must lie within (0.05, 5]");
}

}  // namespace

double estimate_beta(const Eigen::Matrix3Xd& x, const Eigen::Matrix3d& sigma,
                     double bracket_lo, double bracket_hi) {
  check_bracket(bracket_lo, bracket_hi);
  if (x.cols() < 1) fail(Err::DegenerateData, "no samples");
  check_symmetric(sigma);
  const Eigen::ArrayXd u = column_mahalanobis(x, sigma);
  return bisect_shape_root(
      [&](double beta) { return shape_equation_residual(u, beta); },
      bracket_lo, bracket_hi);
}

MggdParams estimate_ml(const Eigen::Matrix3Xd& x,
                       std::optional<double> pinned_beta) {
  const Eigen::Index n = x.cols();
  if (n < kMinSamples)
    fail(Err::DegenerateData,
         "need at least " + std::to_string(kMinSamples) + " samples, got " +
             std::to_string(n));
  if (!x.allFinite()) fail(Err::DegenerateData, "non-finite samples");

  if (pinned_beta) {
    check_shape(*pinned_beta);
    MggdParams p;
    p.beta = *pinned_beta;
    if (*pinned_beta == 1.0) {
      // Metric mode: the ridge keeps even collinear (grayscale) channel
      // data invertible, so no rank guard here.
      p.sigma = ridge_regularized(sample_second_moment(x));
      return p;
    }
    const Eigen::Matrix3d init = ridge_regularized(sample_second_moment(x));
    p.sigma = estimate_sigma_fixed_point(x, *pinned_beta, init);
    return p;
  }

  // Profile likelihood in the shape: each candidate beta gets its own
  // scatter refit (warm-started, so the recursion stays cheap) and the
  // shape equation is evaluated at that refit. The plain sweep that
  // re-estimates beta against the previous scatter crawls along the
  // scale/shape ridge and cannot settle within the iteration budget; the
  // profile root is the same joint stationary point.
  Eigen::Matrix3d warm = ridge_regularized(sample_second_moment(x));
  check_not_collinear(warm);
  int refits = 0;
  auto profile_residual = [&](double beta) {
    if (++refits > kOuterMaxIter)
      fail(Err::DidNotConverge, "shape search exceeded " +
                                    std::to_string(kOuterMaxIter) +
                                    " scatter refits");
    warm = estimate_sigma_fixed_point(x, beta, warm);
    return shape_equation_residual(column_mahalanobis(x, warm), beta);
  };

  double root;
  try {
    root = bisect_shape_root(profile_residual, 0.1, 3.0);
  } catch (const Error& e) {
    if (e.code() != Err::NoRootInBracket) throw;
    root = bisect_shape_root(profile_residual, 0.0500001, 5.0);  // widened once
  }

  MggdParams p;
  p.beta = root;
  p.sigma = estimate_sigma_fixed_point(x, root, warm);
  return p;
}

RadialGof radial_chi_square_gof(const Eigen::MatrixXd& samples,
                                const Eigen::MatrixXd& sigma, double beta,
                                int bins) {
  check_shape(beta);
  if (bins < 4) fail(Err::InvalidParams, "need at least 4 bins");
  const Eigen::Index n = samples.cols();
  if (n < 100L * bins) fail(Err::InvalidParams, "too few samples for the bin count");
  const auto llt = cholesky_or_fail(sigma, Err::SingularSigma);
  const double m = static_cast<double>(sigma.rows());

  const boost::math::gamma_distribution<double> radial_law(m / (2.0 * beta), 2.0);
  std::vector<double> edges(bins - 1);
  for (int k = 1; k < bins; ++k)
    edges[k - 1] = boost::math::quantile(radial_law, static_cast<double>(k) / bins);

  std::vector<double> counts(bins, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = llt.matrixL().solve(samples.col(i)).squaredNorm();
    const double g = std::pow(u, beta);
    const auto it = std::upper_bound(edges.begin(), edges.end(), g);
    counts[static_cast<std::size_t>(it - edges.begin())] += 1.0;
  }

  const double expected = static_cast<double>(n) / bins;
  RadialGof gof;
  gof.bins = bins;
  gof.observed = counts;
  for (double c : counts)
    gof.statistic += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared_distribution<double> chi2(bins - 1);
  gof.critical_001 = boost::math::quantile(chi2, 0.999);
  gof.pass = gof.statistic < gof.critical_001;
  return gof;
}

Eigen::MatrixXd sample_mggd_any(const Eigen::MatrixXd& sigma, double beta,
                                int n, std::uint64_t seed) {
  check_shape(beta);
  check_symmetric(sigma);
  if (n < 1) fail(Err::InvalidParams, "sample count must be >= 1");
  const auto llt = cholesky_or_fail(sigma, Err::InvalidParams);
  const Eigen::Index m = sigma.rows();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(static_cast<double>(m) / (2.0 * beta),
                                        2.0);

  Eigen::MatrixXd out(m, n);
  Eigen::VectorXd dir(m);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (Eigen::Index j = 0; j < m; ++j) dir[j] = normal(rng);
      norm2 = dir.squaredNorm();
    } while (norm2 == 0.0);
    dir /= std::sqrt(norm2);
    const double radius = std::pow(gamma(rng), 1.0 / (2.0 * beta));
    out.col(i) = llt.matrixL() * (radius * dir);
  }
  return out;
}

Eigen::Matrix3Xd sample_mggd(const MggdParams& p, int n, std::uint64_t seed) {
  return sample_mggd_any(p.sigma, p.beta, n, seed);
}

}  // namespace rriqa
