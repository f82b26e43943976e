#include "netrisk/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "netrisk/error.hpp"

namespace netrisk::linalg {

double spectral_radius(const Eigen::MatrixXd& w, int max_iterations, double tol) {
  const Eigen::Index n = w.rows();
  if (n != w.cols()) throw Error(ErrorCode::ShapeMismatch, "spectral radius needs a square matrix");
  if (n == 0) return 0.0;
  const Eigen::MatrixXd a = w.cwiseAbs();
  if (a.maxCoeff() == 0.0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = a * v;
    const double norm = next.lpNorm<1>();
    if (norm < 1e-300) return 0.0;  // nilpotent direction collapsed
    next /= norm;
    const double new_lambda = (a * next).lpNorm<1>() / next.lpNorm<1>();
    if (std::abs(new_lambda - lambda) <= tol * std::max(1.0, std::abs(new_lambda)) &&
        (next - v).lpNorm<1>() <= 1e-9) {
      return new_lambda;
    }
    lambda = new_lambda;
    v = next;
  }
  // Periodic structure can stall the iteration; fall back to a dense solve.
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

PerronResult perron_vector(const Eigen::MatrixXd& m, int max_iterations, double tol) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw Error(ErrorCode::ShapeMismatch, "perron vector needs a square matrix");
  PerronResult result;
  result.vector = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  result.value = 0.0;
  result.converged = false;
  // The identity shift keeps the dominant eigenvalue simple for periodic
  // nonnegative matrices without changing eigenvectors.
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd next = m * result.vector + result.vector;
    const double norm = next.lpNorm<1>();
    if (norm < 1e-300) {
      result.iterations = it;
      return result;  // zero matrix: uniform vector, not converged flag stays false
    }
    next /= norm;
    const double delta = (next - result.vector).lpNorm<1>();
    result.vector = next;
    if (delta <= tol) {
      result.value = (m * result.vector).lpNorm<1>() / result.vector.lpNorm<1>();
      result.iterations = it;
      result.converged = true;
      return result;
    }
  }
  result.iterations = max_iterations;
  return result;
}

namespace {

OlsFit solve_with_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& x_full,
                         const Eigen::MatrixXd& design_full, const OlsOptions& opts) {
  const Eigen::Index nobs = y.size();
  const Eigen::Index k = x_full.cols();
  OlsFit fit;
  fit.coef = Eigen::VectorXd::Zero(k);
  fit.se = Eigen::VectorXd::Zero(k);

  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double var = (design_full.col(j).array() - design_full.col(j).mean()).square().sum();
    const double scale = design_full.col(j).cwiseAbs().maxCoeff();
    const bool is_const_col = var <= opts.zero_variance_tol * static_cast<double>(nobs);
    // A constant nonzero column only survives when it is the intercept.
    const bool is_intercept = opts.intercept && j == k - 1;
    if ((scale <= opts.zero_variance_tol || is_const_col) && !is_intercept)
      fit.dropped.push_back(static_cast<int>(j));
    else
      keep.push_back(j);
  }
  if (keep.empty()) throw Error(ErrorCode::RankDeficient, "no usable regressors");
  if (nobs <= static_cast<Eigen::Index>(keep.size()))
    throw Error(ErrorCode::RankDeficient, "more parameters than observations");

  Eigen::MatrixXd d(nobs, static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd xk(nobs, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    d.col(static_cast<Eigen::Index>(j)) = design_full.col(keep[j]);
    xk.col(static_cast<Eigen::Index>(j)) = x_full.col(keep[j]);
  }

  const Eigen::MatrixXd gram = d.transpose() * d;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double gnorm = gram.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(gnorm, 1.0))
    throw Error(ErrorCode::RankDeficient, "singular design matrix");

  const Eigen::VectorXd b = ldlt.solve(d.transpose() * y);
  fit.residuals = y - xk * b;

  const Eigen::Index dof = nobs - static_cast<Eigen::Index>(keep.size());
  fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(dof, 1));
  const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));

  Eigen::MatrixXd cov;
  if (!opts.clusters.empty()) {
    if (static_cast<Eigen::Index>(opts.clusters.size()) != nobs)
      throw Error(ErrorCode::ShapeMismatch, "cluster ids do not match observations");
    std::map<int, Eigen::VectorXd> scores;
    for (Eigen::Index i = 0; i < nobs; ++i) {
      auto [it, inserted] = scores.try_emplace(opts.clusters[static_cast<std::size_t>(i)],
                                               Eigen::VectorXd::Zero(d.cols()));
      it->second += d.row(i).transpose() * fit.residuals(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(d.cols(), d.cols());
    for (const auto& [id, s] : scores) meat += s * s.transpose();
    const double g = static_cast<double>(scores.size());
    if (g > 1) meat *= g / (g - 1.0);
    cov = bread * meat * bread;
  } else {
    cov = fit.sigma2 * bread;
  }

  const double ymean = y.mean();
  const double tss = (y.array() - ymean).square().sum();
  fit.r2 = tss > 0 ? 1.0 - fit.residuals.squaredNorm() / tss : 0.0;

  for (std::size_t j = 0; j < keep.size(); ++j) {
    fit.coef(keep[j]) = b(static_cast<Eigen::Index>(j));
    fit.se(keep[j]) = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(j),
                                                  static_cast<Eigen::Index>(j))));
  }
  return fit;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x, bool intercept) {
  if (!intercept) return x;
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

}  // namespace

OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const OlsOptions& opts) {
  if (y.size() != x.rows()) throw Error(ErrorCode::ShapeMismatch, "y/x row mismatch");
  const Eigen::MatrixXd design = with_intercept(x, opts.intercept);
  return solve_with_design(y, design, design, opts);
}

OlsFit two_stage_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                    const OlsOptions& opts) {
  if (y.size() != x.rows() || y.size() != z.rows())
    throw Error(ErrorCode::ShapeMismatch, "y/x/z row mismatch");
  const Eigen::MatrixXd xd = with_intercept(x, opts.intercept);
  const Eigen::MatrixXd zd = with_intercept(z, opts.intercept);
  // First stage: project each regressor onto the instrument span.
  Eigen::MatrixXd z_kept(zd.rows(), 0);
  for (Eigen::Index j = 0; j < zd.cols(); ++j) {
    if (zd.col(j).cwiseAbs().maxCoeff() > opts.zero_variance_tol) {
      z_kept.conservativeResize(Eigen::NoChange, z_kept.cols() + 1);
      z_kept.col(z_kept.cols() - 1) = zd.col(j);
    }
  }
  if (z_kept.cols() == 0) throw Error(ErrorCode::RankDeficient, "no usable instruments");
  Eigen::MatrixXd fitted = xd;
  const auto qr = z_kept.colPivHouseholderQr();
  for (Eigen::Index j = 0; j < xd.cols(); ++j) {
    if (xd.col(j).cwiseAbs().maxCoeff() <= opts.zero_variance_tol) continue;  // dropped later
    fitted.col(j) = z_kept * qr.solve(xd.col(j));
  }
  return solve_with_design(y, xd, fitted, opts);
}

double nearest_psd_in_place(Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "eigendecomposition failed in PSD projection");
  Eigen::VectorXd vals = es.eigenvalues();
  if (vals.minCoeff() >= 0.0) return 0.0;
  const Eigen::MatrixXd before = m;
  vals = vals.cwiseMax(0.0);
  m = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
  m = 0.5 * (m + m.transpose());
  return (m - before).norm();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

double ks_statistic_normal(std::vector<double> sample) {
  if (sample.empty()) throw Error(ErrorCode::InsufficientData, "empty sample for KS");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = normal_cdf(sample[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(cdf - lo), std::abs(cdf - hi)});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double sample_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw Error(ErrorCode::ShapeMismatch, "correlation needs equal-length samples");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) return 0.0;
  return (da * db).sum() / denom;
}

}  // namespace netrisk::linalg
