#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace netrisk::linalg {

/// Spectral radius of |W| by power iteration, with a dense eigensolve fallback
/// when the iteration has not settled (periodic or defective cases).
double spectral_radius(const Eigen::MatrixXd& w, int max_iterations = 10000, double tol = 1e-12);

struct PerronResult {
  Eigen::VectorXd vector;  // L1-normalized, nonnegative
  double value;
  int iterations;
  bool converged;
};

/// Dominant eigenvector of a nonnegative matrix by shifted power iteration.
PerronResult perron_vector(const Eigen::MatrixXd& m, int max_iterations = 10000, double tol = 1e-12);

struct OlsOptions {
  bool intercept = false;
  /// Per-observation cluster ids for sandwich standard errors; empty = iid.
  std::vector<int> clusters;
  /// Columns whose variance falls below this are dropped (coefficient 0).
  double zero_variance_tol = 1e-14;
};

struct OlsFit {
  Eigen::VectorXd coef;        // per input column (+ intercept last if requested)
  Eigen::VectorXd se;
  Eigen::VectorXd residuals;
  double sigma2 = 0.0;
  double r2 = 0.0;
  std::vector<int> dropped;    // input-column indices fixed to zero
};

/// Least squares with zero-variance column dropping. Throws RankDeficient when
/// the kept design is singular or there is nothing to fit.
OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const OlsOptions& opts = {});

/// Instrumented least squares (2SLS): regress x on z, then y on fitted x.
/// Standard errors use structural residuals y - x*b.
OlsFit two_stage_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                    const OlsOptions& opts = {});

/// Eigenvalue clipping at zero; returns the Frobenius norm of the adjustment.
double nearest_psd_in_place(Eigen::MatrixXd& m);

/// Kolmogorov-Smirnov distance of a sample against the standard normal CDF.
double ks_statistic_normal(std::vector<double> sample);

/// Asymptotic Kolmogorov p-value with the small-sample correction.
double ks_pvalue(double statistic, std::size_t n);

double normal_cdf(double x);

double sample_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace netrisk::linalg
