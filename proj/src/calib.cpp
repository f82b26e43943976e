#include "netrisk/calib.hpp"

#include <cmath>
#include <set>

#include "netrisk/error.hpp"
#include "netrisk/linalg.hpp"

namespace netrisk::calib {

namespace {

double sq(double v) { return v * v; }

struct BranchSolution {
  bool feasible = false;
  double k = 0.0, x = 0.0;
  bool degenerate = false;
};

/// The variance equation pins z = k(s_bar - x) up to the choice of Bernoulli
/// root; the share equation then pins kx, leaving k linear in s_bar.
BranchSolution branch_solution(double p, double omega, double s_bar) {
  BranchSolution sol;
  const double z_star = std::log((1.0 - p) / p);
  const double inner = 1.0 / (p * std::sqrt(omega)) - 1.0;
  if (inner <= 0.0) return sol;
  const double c_star = -std::log(inner);  // = k x
  const double ks = z_star + c_star;       // = k s_bar

  if (std::abs(ks) < 1e-14) {
    // k = 0 is only consistent when the variance sits at the Bernoulli cap
    // and the share equation is slack; x is then pinned to s_bar.
    if (std::abs(z_star) < 1e-12 && std::abs(c_star) < 1e-12) {
      sol.feasible = true;
      sol.degenerate = true;
      sol.k = 0.0;
      sol.x = s_bar;
    }
    return sol;
  }
  if (std::abs(s_bar) < 1e-300) return sol;
  const double k = ks / s_bar;
  if (k < 0.0) return sol;
  sol.feasible = true;
  sol.k = k;
  sol.x = c_star / k;
  return sol;
}

}  // namespace

Eigen::Vector2d calibration_residuals(double k, double x, double var_target, double omega,
                                      double s_bar) {
  const double z = k * (s_bar - x);
  const double ez = std::exp(z);
  const double e1 = ez / sq(1.0 + ez);
  const double e2 = sq(1.0 + ez) / sq(1.0 + std::exp(-k * x));
  return {e1 - var_target, e2 - omega};
}

FirmCalibration solve_firm_params(double var_target, double omega, double s_bar,
                                  const SolveOptions& opts) {
  if (!(var_target > 0.0)) throw Error(ErrorCode::InvalidArgument, "variance target must be positive");
  if (!(omega > 0.0 && omega <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "network share must lie in (0,1]");
  if (var_target > 0.25 + 1e-12)
    throw Error(ErrorCode::NoSolution, "variance target exceeds the Bernoulli bound 1/4");

  const double clipped = std::min(var_target, 0.25);
  const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * clipped));
  const double p_low = 0.5 * (1.0 - root);   // shocks as the rarer event
  const double p_high = 0.5 * (1.0 + root);

  FirmCalibration cal;
  cal.s_bar = s_bar;
  cal.var_target = var_target;
  cal.omega = omega;

  BranchSolution sol = branch_solution(p_low, omega, s_bar);
  if (!sol.feasible) {
    sol = branch_solution(p_high, omega, s_bar);
    if (sol.feasible) cal.high_p_branch = true;
  }
  if (!sol.feasible) {
    const auto res = calibration_residuals(1.0, s_bar, var_target, omega, s_bar);
    throw Error(ErrorCode::NoSolution,
                "no branch admits k >= 0; residual at (1, s_bar): " +
                    std::to_string(res.cwiseAbs().maxCoeff()));
  }
  cal.k = sol.k;
  cal.x = sol.x;
  cal.degenerate_k = sol.degenerate;

  // Damped Newton polish on the 2-D system (no-op at the closed form, and a
  // safety net against rounding in extreme corners).
  if (!cal.degenerate_k) {
    double k = cal.k, x = cal.x;
    Eigen::Vector2d f = calibration_residuals(k, x, var_target, omega, s_bar);
    for (int it = 0; it < opts.max_iterations && f.cwiseAbs().maxCoeff() > opts.tol; ++it) {
      const double z = k * (s_bar - x);
      const double ez = std::exp(z);
      const double e1 = ez / sq(1.0 + ez);
      const double e2 = sq(1.0 + ez) / sq(1.0 + std::exp(-k * x));
      const double de1_dz = e1 * (1.0 - ez) / (1.0 + ez);
      const double de2_dz = e2 * 2.0 * ez / (1.0 + ez);
      const double emu = std::exp(-k * x);
      const double de2_du = e2 * 2.0 * emu / (1.0 + emu);  // u = k x
      Eigen::Matrix2d jac;
      jac(0, 0) = de1_dz * (s_bar - x);
      jac(0, 1) = de1_dz * -k;
      jac(1, 0) = de2_dz * (s_bar - x) + de2_du * x;
      jac(1, 1) = de2_dz * -k + de2_du * k;
      const Eigen::Vector2d step = jac.fullPivLu().solve(-f);
      if (!step.allFinite()) break;
      double lambda = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const double kt = std::max(0.0, k + lambda * step(0));
        const double xt = x + lambda * step(1);
        const Eigen::Vector2d ft = calibration_residuals(kt, xt, var_target, omega, s_bar);
        if (ft.cwiseAbs().maxCoeff() < f.cwiseAbs().maxCoeff()) {
          k = kt;
          x = xt;
          f = ft;
          break;
        }
        lambda *= 0.5;
      }
      if (lambda < 1e-9) break;
    }
    cal.k = k;
    cal.x = x;
  }

  const auto res = calibration_residuals(cal.k, cal.x, var_target, omega, s_bar);
  if (res.cwiseAbs().maxCoeff() > opts.tol) {
    if (cal.degenerate_k)
      throw Error(ErrorCode::DegenerateK,
                  "k = 0 branch inconsistent with targets; residual " +
                      std::to_string(res.cwiseAbs().maxCoeff()));
    throw Error(ErrorCode::NoSolution,
                "final residual " + std::to_string(res.cwiseAbs().maxCoeff()));
  }
  return cal;
}

PropagationFactorSeries propagation_factors(const shockcov::PanelData& subst_up,
                                            const shockcov::PanelData& subst_down,
                                            const std::vector<FirmCalibration>& calibrations) {
  auto find_cal = [&](const std::string& firm, riskdecomp::Direction dir) -> const FirmCalibration* {
    for (const auto& c : calibrations)
      if (c.firm == firm && c.direction == dir) return &c;
    return nullptr;
  };

  std::set<int> time_set;
  for (const auto& o : subst_up.obs) time_set.insert(o.time);
  for (const auto& o : subst_down.obs) time_set.insert(o.time);

  PropagationFactorSeries series;
  series.times.assign(time_set.begin(), time_set.end());
  const Eigen::Index T = static_cast<Eigen::Index>(series.times.size());
  series.w_hat_u = Eigen::VectorXd::Constant(T, std::numeric_limits<double>::quiet_NaN());
  series.w_hat_d = Eigen::VectorXd::Constant(T, std::numeric_limits<double>::quiet_NaN());

  auto accumulate = [&](const shockcov::PanelData& panel, riskdecomp::Direction dir,
                        Eigen::VectorXd& out) {
    std::map<int, std::pair<double, int>> sums;  // time -> (sum p, count)
    for (const auto& o : panel.obs) {
      const std::string& firm = panel.units[static_cast<std::size_t>(o.unit)];
      const FirmCalibration* cal = find_cal(firm, dir);
      if (!cal)
        throw Error(ErrorCode::MissingCalibration,
                    "no " + std::string(riskdecomp::direction_name(dir)) + " calibration for firm " +
                        firm);
      const double p = 1.0 / (1.0 + std::exp(cal->k * (o.value - cal->x)));
      auto& slot = sums[o.time];
      slot.first += p;
      slot.second += 1;
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto it = sums.find(series.times[static_cast<std::size_t>(t)]);
      if (it != sums.end()) out(t) = it->second.first / it->second.second;
    }
  };
  accumulate(subst_up, riskdecomp::Direction::up, series.w_hat_u);
  accumulate(subst_down, riskdecomp::Direction::down, series.w_hat_d);
  return series;
}

RegressionTable macro_regressions(const std::map<std::string, Eigen::VectorXd>& outcomes,
                                  const std::vector<std::string>& regressor_names,
                                  const Eigen::MatrixXd& regressors) {
  const Eigen::Index T = regressors.rows();
  if (static_cast<Eigen::Index>(regressor_names.size()) != regressors.cols())
    throw Error(ErrorCode::ShapeMismatch, "regressor names/columns disagree");
  if (T < regressors.cols() + 2)
    throw Error(ErrorCode::RankDeficient, "too few periods for the factor block");

  auto standardize = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() /
                                static_cast<double>(v.size() - 1));
    if (sd <= 0.0) throw Error(ErrorCode::RankDeficient, "series has zero variance");
    return (v.array() - mean) / sd;
  };

  Eigen::MatrixXd x(T, regressors.cols());
  for (Eigen::Index j = 0; j < regressors.cols(); ++j) x.col(j) = standardize(regressors.col(j));

  RegressionTable table;
  table.regressors = regressor_names;
  for (const auto& [name, series] : outcomes) {
    if (series.size() != T)
      throw Error(ErrorCode::ShapeMismatch, "outcome '" + name + "' length mismatch");
    const Eigen::VectorXd y = standardize(series);
    linalg::OlsOptions oo;
    oo.intercept = true;
    const auto fit = linalg::ols(y, x, oo);
    RegressionRow row;
    row.outcome = name;
    row.coef = fit.coef.head(regressors.cols());
    row.se = fit.se.head(regressors.cols());
    row.intercept = fit.coef(regressors.cols());
    row.r2 = fit.r2;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace netrisk::calib
