#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "netrisk/rng.hpp"

namespace netrisk::idio {

enum class PairCase { both_zero, one_way, product_ge_one, violated };

struct FeasibilityVerdict {
  bool condition_holds = false;   // the exact zero restriction, within tolerance
  double residual = 0.0;          // w21 V1 + w12 V2 - cov (1 + w12 w21)
  bool necessary_ok = false;      // product >= 1 or a one-way / empty link
  PairCase pair_case = PairCase::violated;
};

/// Pairwise test of consistency with idiosyncratic shocks: the exact cross
/// restriction and the necessary weight condition.
FeasibilityVerdict pair_feasibility(double w12, double w21, double var1, double var2,
                                    double cov12, double tol = 1e-10);

struct OptimizerSettings {
  int max_iterations = 400;
  double tolerance = 1e-9;       // infinity norm of the projected gradient
  int restarts = 8;
  double interior_margin = 1e-6; // box [margin, 1-margin]; rho(W) < 1 - margin
  int memory = 6;                // quasi-Newton history pairs
};

struct MinResult {
  double f_min = 0.0;  // Frobenius norm at the optimum
  Eigen::MatrixXd w_star;
  int best_restart = -1;
  int iterations = 0;
  bool converged = false;
};

/// Frobenius mismatch between Sigma and the output covariance an
/// idiosyncratic-shock network generates from Sigma's own variances:
/// || Sigma - (I-W)^{-1} diag(Sigma) (I-W')^{-1} ||_F.
/// For diagonal Sigma this is the self-consistency mismatch; it vanishes only
/// when propagation through W can reproduce Sigma from uncorrelated shocks.
double objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w);

/// Gradient of the squared objective with respect to the off-diagonal entries
/// of W (diagonal fixed at zero).
Eigen::MatrixXd objective_gradient_sq(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w);

/// Projected quasi-Newton minimization of the mismatch over off-diagonal
/// weights in the open unit box, with multistart and spectral-radius
/// rejection. Throws OptimizerFailure if no start yields a finite value.
MinResult constrained_min_objective(const Eigen::MatrixXd& sigma_u, const Eigen::MatrixXd& w0,
                                    const OptimizerSettings& settings, Rng* multistart_rng = nullptr);

/// Inverse-Wishart draw by Bartlett decomposition; nu > n - 1.
Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& psi, double nu, Rng& rng);

struct ExperimentConfig {
  int n = 2;
  int iterations = 1000;  // S
  Eigen::MatrixXd psi;    // scale matrix (defaults to identity when empty)
  double nu = 0.0;        // defaults to n + 2 when 0
  OptimizerSettings optimizer;
  double inverse_gamma_shape = 3.0;  // scale chosen to match the psi diagonal mean
  double failure_budget = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ExperimentReport {
  /// Fraction of iterations where the idiosyncratic-null (diagonal) draw
  /// mismatches at least as much as the correlated (inverse-Wishart) draw.
  /// Small values falsify the idiosyncratic-shock assumption.
  double p_value = 0.0;
  Eigen::MatrixXd t_stats;     // elementwise over |residual_d| - |residual_*|
  int completed = 0;
  int failures = 0;
  std::vector<double> f_wishart;   // per completed iteration
  std::vector<double> f_diagonal;
};

/// Monte Carlo falsification of the idiosyncratic-shock assumption: paired
/// minimizations under dense and diagonal shock covariances.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace netrisk::idio
