#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "netrisk/riskdecomp.hpp"
#include "netrisk/shock_cov.hpp"

namespace netrisk::calib {

/// Calibrated sigmoid parameters for one firm and direction, together with
/// the targets they reproduce.
struct FirmCalibration {
  std::string firm;
  riskdecomp::Direction direction = riskdecomp::Direction::up;
  double k = 0.0;
  double x = 0.0;
  double s_bar = 0.0;
  double var_target = 0.0;
  double omega = 0.0;
  bool degenerate_k = false;  // k = 0 branch, x pinned to s_bar
  bool high_p_branch = false; // solution uses the p > 1/2 root
};

struct SolveOptions {
  double tol = 1e-8;   // residual requirement for both equations
  int max_iterations = 60;
};

/// Residuals of the two calibration equations at (k, x).
Eigen::Vector2d calibration_residuals(double k, double x, double var_target, double omega,
                                      double s_bar);

/// Solves the sigmoid system for (k, x) given a residual-variance target, a
/// network share, and mean substitutability. Prefers the p <= 1/2 root of the
/// variance equation (shocks as the rarer event), switching branch when that
/// root is infeasible.
FirmCalibration solve_firm_params(double var_target, double omega, double s_bar,
                                  const SolveOptions& opts = {});

struct PropagationFactorSeries {
  std::vector<int> times;
  Eigen::VectorXd w_hat_u;
  Eigen::VectorXd w_hat_d;
};

/// Cross-sectional mean propensity per period, from a substitutability panel
/// per direction and per-firm calibrations. Every firm appearing in a panel
/// must have a calibration for that direction.
PropagationFactorSeries propagation_factors(const shockcov::PanelData& subst_up,
                                            const shockcov::PanelData& subst_down,
                                            const std::vector<FirmCalibration>& calibrations);

struct RegressionRow {
  std::string outcome;
  Eigen::VectorXd coef;  // per regressor, intercept excluded
  Eigen::VectorXd se;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct RegressionTable {
  std::vector<std::string> regressors;
  std::vector<RegressionRow> rows;
};

/// OLS of each outcome on the standardized factor block (plus intercept).
/// All series are standardized to zero mean, unit variance internally.
RegressionTable macro_regressions(const std::map<std::string, Eigen::VectorXd>& outcomes,
                                  const std::vector<std::string>& regressor_names,
                                  const Eigen::MatrixXd& regressors);

}  // namespace netrisk::calib
