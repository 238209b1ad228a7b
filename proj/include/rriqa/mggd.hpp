#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace rriqa {

// Univariate generalized Gaussian in the (alpha, beta) scale/shape form:
// f(x) = beta / (2 alpha Gamma(1/beta)) * exp(-(|x|/alpha)^beta).
struct GgdAlphaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Dispersion form, the m=1 member of the multivariate family:
// f(x) = beta / (sigma 2^{1/(2 beta)} Gamma(1/(2 beta))) * exp(-(x^2/sigma^2)^beta / 2).
// The shape exponents of the two forms differ (beta_alpha = 2 beta_sigma);
// conversions are never implicit.
struct GgdSigmaParams {
  double sigma = 1.0;
  double beta = 1.0;
};

// Zero-mean multivariate generalized Gaussian for the three color channels:
// f(x) ~ |Sigma|^{-1/2} exp(-((x' Sigma^{-1} x)^beta) / 2). beta = 1 is the
// trivariate Gaussian.
struct MggdParams {
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();
  double beta = 1.0;
  static constexpr int dim = 3;
};

double ggd_pdf(double x, const GgdAlphaParams& p);
double ggd_sigma_log_pdf(double x, const GgdSigmaParams& p);

double mggd_log_pdf(const Eigen::Vector3d& x, const MggdParams& p);
// General-dimension density kernel; exercised for m in {1, 2, 3}.
double mggd_log_pdf_any(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma,
                        double beta);

// u = x' Sigma^{-1} x via Cholesky solves; throws SingularSigma.
double mahalanobis(const Eigen::Vector3d& x, const Eigen::Matrix3d& sigma);
double mahalanobis_any(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma);

// S + eps*I with eps = 1e-10 * max(tr(S)/m, tiny); keeps near-grayscale
// channel covariances invertible without visibly moving the estimate.
Eigen::MatrixXd ridge_regularized(const Eigen::MatrixXd& s);

Eigen::Matrix3d sample_second_moment(const Eigen::Matrix3Xd& x);

// Fixed point of Sigma = (beta/n) sum_i u_i^{beta-1} x_i x_i' for fixed
// shape, iterated on the trace-normalized scatter with the scale recovered
// in closed form. Throws DegenerateData (n < 30 or collinear columns) and
// DidNotConverge.
Eigen::Matrix3d estimate_sigma_fixed_point(const Eigen::Matrix3Xd& x,
                                           double beta,
                                           const Eigen::Matrix3d& init);

// Root of the shape likelihood equation in beta for fixed Sigma, by
// bisection to 1e-6. Bracket must lie within (0.05, 5].
double estimate_beta(const Eigen::Matrix3Xd& x, const Eigen::Matrix3d& sigma,
                     double bracket_lo = 0.1, double bracket_hi = 3.0);

// Alternates the Sigma fixed point and the beta root until the joint
// relative change drops below 1e-6. A pinned beta skips the beta step;
// beta pinned to exactly 1 reduces to the ridge-stabilized sample second
// moment (the metric-mode path, valid even for collinear channels).
MggdParams estimate_ml(const Eigen::Matrix3Xd& x,
                       std::optional<double> pinned_beta = std::nullopt);

// Chi-square goodness of fit of the samples' radial law: u^beta with
// u = x' Sigma^{-1} x must follow Gamma(m/(2 beta), scale 2). Equiprobable
// bins; pass means not rejected at the 0.001 level.
struct RadialGof {
  double statistic = 0.0;
  int bins = 0;
  double critical_001 = 0.0;
  bool pass = false;
  std::vector<double> observed;  // per-bin counts (bins are equiprobable)
};
RadialGof radial_chi_square_gof(const Eigen::MatrixXd& samples,
                                const Eigen::MatrixXd& sigma, double beta,
                                int bins = 32);

// Draws n columns from the MGGD via x = L (rho w): w uniform on the unit
// sphere, rho = G^{1/(2 beta)} with G ~ Gamma(m/(2 beta), scale 2), and
// L L' = Sigma. Deterministic per (seed, n, params).
Eigen::MatrixXd sample_mggd_any(const Eigen::MatrixXd& sigma, double beta,
                                int n, std::uint64_t seed);
Eigen::Matrix3Xd sample_mggd(const MggdParams& p, int n, std::uint64_t seed);

}  // namespace rriqa
