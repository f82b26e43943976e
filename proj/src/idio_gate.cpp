#include "netrisk/idio_gate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <deque>
#include <limits>

#include "netrisk/error.hpp"
#include "netrisk/parallel.hpp"

namespace netrisk::idio {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FeasibilityVerdict pair_feasibility(double w12, double w21, double var1, double var2,
                                    double cov12, double tol) {
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "variances must be positive");
  if (std::abs(cov12) > std::sqrt(var1 * var2) * (1.0 + 1e-12))
    throw Error(ErrorCode::InvalidCovariance, "covariance violates Cauchy-Schwarz");

  FeasibilityVerdict v;
  v.residual = w21 * var1 + w12 * var2 - cov12 * (1.0 + w12 * w21);
  v.condition_holds = std::abs(v.residual) <= tol;
  if (w12 == 0.0 && w21 == 0.0)
    v.pair_case = PairCase::both_zero;
  else if (w12 == 0.0 || w21 == 0.0)
    v.pair_case = PairCase::one_way;
  else if (w12 * w21 >= 1.0)
    v.pair_case = PairCase::product_ge_one;
  else
    v.pair_case = PairCase::violated;
  v.necessary_ok = v.pair_case != PairCase::violated;
  return v;
}

namespace {

double small_radius(const Eigen::MatrixXd& w) {
  return w.eigenvalues().cwiseAbs().maxCoeff();
}

struct Box {
  Eigen::Index n;
  double lo, hi;

  Eigen::MatrixXd to_matrix(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) w(i, j) = theta(idx++);
    return w;
  }

  Eigen::VectorXd to_vector(const Eigen::MatrixXd& w) const {
    Eigen::VectorXd theta(n * (n - 1));
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) theta(idx++) = w(i, j);
    return theta;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd theta) const {
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      theta(i) = std::min(hi, std::max(lo, theta(i)));
    return theta;
  }
};

struct Evaluation {
  double f_sq = kInf;
  Eigen::VectorXd grad;
  bool feasible = false;
};

Evaluation evaluate(const Eigen::MatrixXd& sigma, const Box& box, const Eigen::VectorXd& theta,
                    double margin, bool want_grad) {
  Evaluation ev;
  const Eigen::MatrixXd w = box.to_matrix(theta);
  if (small_radius(w) >= 1.0 - margin) return ev;  // rejected iterate
  const Eigen::Index n = sigma.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd h = (eye - w).partialPivLu().solve(eye);
  if (!h.allFinite()) return ev;
  // Output covariance an idiosyncratic-shock network would generate from
  // sigma's own variances; the mismatch is what the experiment minimizes.
  const Eigen::MatrixXd q = h * sigma.diagonal().asDiagonal() * h.transpose();
  const Eigen::MatrixXd r = q - sigma;
  ev.f_sq = r.squaredNorm();
  ev.feasible = true;
  if (want_grad) {
    const Eigen::MatrixXd g = 4.0 * h.transpose() * r * q;
    Eigen::MatrixXd gz = g;
    gz.diagonal().setZero();
    ev.grad = box.to_vector(gz);
  }
  return ev;
}

/// Two-loop recursion over the stored curvature pairs.
Eigen::VectorXd lbfgs_direction(const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& mem,
                                const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    const auto& [s, y] = mem[i];
    const double rho = 1.0 / y.dot(s);
    alpha[i] = rho * s.dot(q);
    q -= alpha[i] * y;
  }
  if (!mem.empty()) {
    const auto& [s, y] = mem.back();
    q *= s.dot(y) / y.squaredNorm();
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const auto& [s, y] = mem[i];
    const double rho = 1.0 / y.dot(s);
    const double beta = rho * y.dot(q);
    q += (alpha[i] - beta) * s;
  }
  return -q;
}

struct SingleRun {
  double f_sq = kInf;
  Eigen::VectorXd theta;
  int iterations = 0;
  bool converged = false;
};

SingleRun minimize_from(const Eigen::MatrixXd& sigma, const Box& box, Eigen::VectorXd theta,
                        const OptimizerSettings& cfg) {
  SingleRun run;
  theta = box.clamp(theta);
  Evaluation cur = evaluate(sigma, box, theta, cfg.interior_margin, true);
  if (!cur.feasible) return run;

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    run.iterations = it + 1;
    const Eigen::VectorXd pg = theta - box.clamp(theta - cur.grad);
    if (pg.lpNorm<Eigen::Infinity>() <= cfg.tolerance) {
      run.converged = true;
      break;
    }
    Eigen::VectorXd dir = mem.empty() ? Eigen::VectorXd(-cur.grad) : lbfgs_direction(mem, cur.grad);
    if (dir.dot(cur.grad) >= 0.0) dir = -cur.grad;

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double alpha = 1.0;
      for (int ls = 0; ls < 50; ++ls) {
        const Eigen::VectorXd cand = box.clamp(theta + alpha * dir);
        const Eigen::VectorXd step = cand - theta;
        if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
        const Evaluation trial = evaluate(sigma, box, cand, cfg.interior_margin, false);
        if (trial.feasible && trial.f_sq <= cur.f_sq + 1e-4 * cur.grad.dot(step)) {
          Evaluation next = evaluate(sigma, box, cand, cfg.interior_margin, true);
          const Eigen::VectorXd y = next.grad - cur.grad;
          if (step.dot(y) > 1e-12 * step.norm() * y.norm()) {
            mem.emplace_back(step, y);
            if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
          }
          theta = cand;
          cur = next;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // quasi-Newton direction failed; retry once along steepest descent
        mem.clear();
        dir = -cur.grad;
      }
    }
    if (!accepted) break;  // no further progress available
  }
  run.f_sq = cur.f_sq;
  run.theta = theta;
  return run;
}

Eigen::VectorXd feasible_start(const Eigen::MatrixXd& w0, const Box& box, double margin) {
  Eigen::MatrixXd w = w0;
  w.diagonal().setZero();
  const double radius = small_radius(w);
  if (radius >= 1.0 - margin) w *= 0.8 * (1.0 - margin) / radius;
  return box.clamp(box.to_vector(w));
}

}  // namespace

double objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n || w.rows() != n || w.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "sigma/W dimensions disagree");
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd h = (eye - w).partialPivLu().solve(eye);
  return (h * sigma.diagonal().asDiagonal() * h.transpose() - sigma).norm();
}

Eigen::MatrixXd objective_gradient_sq(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w) {
  const Eigen::Index n = sigma.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd h = (eye - w).partialPivLu().solve(eye);
  const Eigen::MatrixXd q = h * sigma.diagonal().asDiagonal() * h.transpose();
  Eigen::MatrixXd g = 4.0 * h.transpose() * (q - sigma) * q;
  g.diagonal().setZero();
  return g;
}

MinResult constrained_min_objective(const Eigen::MatrixXd& sigma_u, const Eigen::MatrixXd& w0,
                                    const OptimizerSettings& settings, Rng* multistart_rng) {
  const Eigen::Index n = sigma_u.rows();
  if (sigma_u.cols() != n) throw Error(ErrorCode::ShapeMismatch, "sigma must be square");
  if ((sigma_u - sigma_u.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorCode::ShapeMismatch, "sigma must be symmetric");
  if (w0.rows() != n || w0.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "w0 dimension mismatch");

  MinResult best;
  if (n == 1) {  // no off-diagonal freedom: W = 0, mismatch vanishes
    best.f_min = 0.0;
    best.w_star = Eigen::MatrixXd::Zero(1, 1);
    best.converged = true;
    best.best_restart = 0;
    return best;
  }

  const Box box{n, settings.interior_margin, 1.0 - settings.interior_margin};
  Rng fallback_rng(0x9E3779B9u);
  Rng& rng = multistart_rng ? *multistart_rng : fallback_rng;

  double best_sq = kInf;
  for (int r = 0; r < std::max(1, settings.restarts); ++r) {
    Eigen::VectorXd start;
    if (r == 0) {
      start = feasible_start(w0, box, settings.interior_margin);
    } else {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (i != j) w(i, j) = rng.uniform(box.lo, box.hi);
      start = feasible_start(w, box, settings.interior_margin);
    }
    const SingleRun run = minimize_from(sigma_u, box, start, settings);
    if (run.f_sq < best_sq) {
      best_sq = run.f_sq;
      best.w_star = box.to_matrix(run.theta);
      best.best_restart = r;
      best.iterations = run.iterations;
      best.converged = run.converged;
    }
  }
  if (!std::isfinite(best_sq))
    throw Error(ErrorCode::OptimizerFailure, "no feasible iterate found from any restart");
  best.f_min = std::sqrt(best_sq);
  return best;
}

Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& psi, double nu, Rng& rng) {
  const Eigen::Index n = psi.rows();
  if (psi.cols() != n) throw Error(ErrorCode::ShapeMismatch, "psi must be square");
  if (!(nu > static_cast<double>(n) - 1.0))
    throw Error(ErrorCode::InvalidArgument, "need nu > n - 1");
  Eigen::LLT<Eigen::MatrixXd> llt(psi.inverse());
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidArgument, "psi must be positive definite");
  const Eigen::MatrixXd l = llt.matrixL();

  // Bartlett factor: chi draws on the diagonal, standard normals below.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = l * a;
  const Eigen::MatrixXd wishart = la * la.transpose();  // ~ Wishart(psi^{-1}, nu)
  Eigen::MatrixXd sigma = wishart.inverse();
  return 0.5 * (sigma + sigma.transpose());
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const int n = config.n;
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (config.iterations < 1) throw Error(ErrorCode::InvalidArgument, "need iterations >= 1");
  Eigen::MatrixXd psi = config.psi.size() == 0
                            ? Eigen::MatrixXd::Identity(n, n)
                            : config.psi;
  if (psi.rows() != n || psi.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "psi dimension mismatch");
  const double nu = config.nu > 0.0 ? config.nu : static_cast<double>(n) + 2.0;
  if (!(nu > n - 1.0)) throw Error(ErrorCode::InvalidArgument, "need nu > n - 1");
  const double alpha = config.inverse_gamma_shape;
  if (!(alpha > 1.0)) throw Error(ErrorCode::InvalidArgument, "inverse-gamma shape must exceed 1");

  // Start every solve from the same mild interior point.
  Eigen::MatrixXd w0 =
      Eigen::MatrixXd::Constant(n, n, std::min(0.5, 0.8 / std::max(1.0, static_cast<double>(n - 1))));
  w0.diagonal().setZero();

  struct IterationOutcome {
    bool ok = false;
    double f_w = 0.0, f_d = 0.0;
    Eigen::MatrixXd delta;  // |residual_d| - |residual_*|
  };
  std::vector<IterationOutcome> outcomes(static_cast<std::size_t>(config.iterations));

  auto residual_abs = [](const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w) {
    const Eigen::Index m = sigma.rows();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd h = (eye - w).partialPivLu().solve(eye);
    const Eigen::MatrixXd q = h * sigma.diagonal().asDiagonal() * h.transpose();
    return Eigen::MatrixXd((sigma - q).cwiseAbs());
  };

  parallel_for(static_cast<std::size_t>(config.iterations), config.threads, [&](std::size_t s) {
    Rng draw_rng = Rng::stream(config.seed, 4 * s);
    Rng start_rng_w = Rng::stream(config.seed, 4 * s + 1);
    Rng start_rng_d = Rng::stream(config.seed, 4 * s + 2);
    IterationOutcome& out = outcomes[s];
    try {
      const Eigen::MatrixXd sigma_w = sample_inverse_wishart(psi, nu, draw_rng);
      Eigen::MatrixXd sigma_d = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        sigma_d(i, i) = draw_rng.inverse_gamma(alpha, (alpha - 1.0) * psi(i, i));

      const MinResult rw = constrained_min_objective(sigma_w, w0, config.optimizer, &start_rng_w);
      const MinResult rd = constrained_min_objective(sigma_d, w0, config.optimizer, &start_rng_d);
      out.f_w = rw.f_min;
      out.f_d = rd.f_min;
      out.delta = residual_abs(sigma_d, rd.w_star) - residual_abs(sigma_w, rw.w_star);
      out.ok = std::isfinite(out.f_w) && std::isfinite(out.f_d) && out.delta.allFinite();
    } catch (const Error&) {
      out.ok = false;
    }
  });

  ExperimentReport report;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd msq = Eigen::MatrixXd::Zero(n, n);
  int null_at_least_as_large = 0;
  for (const auto& out : outcomes) {
    if (!out.ok) {
      ++report.failures;
      continue;
    }
    ++report.completed;
    report.f_wishart.push_back(out.f_w);
    report.f_diagonal.push_back(out.f_d);
    // How often the idiosyncratic-null world mismatches at least as much as
    // the correlated world; small values falsify the idiosyncratic assumption.
    if (out.f_d >= out.f_w) ++null_at_least_as_large;
    mean += out.delta;
    msq += out.delta.cwiseProduct(out.delta);
  }
  if (report.completed == 0)
    throw Error(ErrorCode::OptimizerFailure, "all iterations failed");
  if (report.failures > config.failure_budget * config.iterations)
    throw Error(ErrorCode::OptimizerFailure,
                std::to_string(report.failures) + " optimizer failures exceed the budget");

  const double m = static_cast<double>(report.completed);
  report.p_value = static_cast<double>(null_at_least_as_large) / m;
  mean /= m;
  report.t_stats.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double var = std::max(0.0, msq(i, j) / m - mean(i, j) * mean(i, j));
      const double se = std::sqrt(var / m);
      report.t_stats(i, j) = se > 0.0 ? mean(i, j) / se : 0.0;
    }
  }
  return report;
}

}  // namespace netrisk::idio
