#include "netrisk/riskdecomp.hpp"

#include <cmath>

#include "netrisk/error.hpp"
#include "netrisk/parallel.hpp"
#include "netrisk/rng.hpp"

namespace netrisk::riskdecomp {

std::vector<VarianceComponents> decompose_variance(const Eigen::MatrixXd& h,
                                                   const shockcov::ShockCovariance& sigma,
                                                   Direction direction,
                                                   const DecomposeOptions& opts) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n || sigma.sigma.rows() != n || sigma.sigma.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "H and Sigma dimensions disagree");
  if ((sigma.sigma - sigma.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::ShapeMismatch, "Sigma must be symmetric");

  std::vector<VarianceComponents> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    VarianceComponents& c = out[static_cast<std::size_t>(i)];
    c.unit = sigma.units.empty() ? std::to_string(i) : sigma.units[static_cast<std::size_t>(i)];
    c.direction = direction;
    c.self = h(i, i) * h(i, i) * sigma.sigma(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) c.across += h(i, j) * h(i, j) * sigma.sigma(j, j);
      for (Eigen::Index k = 0; k < n; ++k) {
        if (j == k) continue;
        if (opts.exclude_self_pairs && (j == i || k == i)) continue;
        const double s = sigma.sigma(j, k);
        if (s == 0.0) continue;  // sign ties contribute to neither term
        const double term = h(i, j) * h(i, k) * s;
        if (s > 0.0)
          c.between += term;
        else
          c.substitutability += term;
      }
    }
    c.total = h.row(i) * sigma.sigma * h.row(i).transpose();
  }
  return out;
}

std::vector<VarianceComponents> bootstrap_components(const Eigen::MatrixXd& h,
                                                     const shockcov::ShockCovariance& sigma,
                                                     Direction direction, double drop_fraction,
                                                     int n_samples, std::uint64_t seed,
                                                     const DecomposeOptions& opts, int threads) {
  if (drop_fraction < 0.0 || drop_fraction >= 1.0)
    throw Error(ErrorCode::InvalidArgument, "drop_fraction must lie in [0,1)");
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const Eigen::Index n = sigma.sigma.rows();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k)
      if (sigma.sigma(j, k) != 0.0) pairs.emplace_back(j, k);

  std::vector<std::vector<VarianceComponents>> replicates(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t r) {
    Rng rng = Rng::stream(seed, r);
    shockcov::ShockCovariance dropped = sigma;
    for (const auto& [j, k] : pairs) {
      if (rng.uniform() < drop_fraction) {
        dropped.sigma(j, k) = 0.0;
        dropped.sigma(k, j) = 0.0;
      }
    }
    dropped.refresh_sign();
    replicates[r] = decompose_variance(h, dropped, direction, opts);
  });

  std::vector<VarianceComponents> avg = replicates[0];
  for (std::size_t r = 1; r < replicates.size(); ++r) {
    for (std::size_t i = 0; i < avg.size(); ++i) {
      avg[i].self += replicates[r][i].self;
      avg[i].across += replicates[r][i].across;
      avg[i].between += replicates[r][i].between;
      avg[i].substitutability += replicates[r][i].substitutability;
      avg[i].total += replicates[r][i].total;
    }
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  for (auto& c : avg) {
    c.self *= inv;
    c.across *= inv;
    c.between *= inv;
    c.substitutability *= inv;
    c.total *= inv;
  }
  return avg;
}

Eigen::VectorXd substitutability_score(const std::vector<VarianceComponents>& components,
                                       double shift) {
  Eigen::VectorXd score(static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < components.size(); ++i) {
    const double arg = components[i].between + shift;
    if (arg <= 0.0)
      throw Error(ErrorCode::NonPositiveArgument,
                  "between + shift must be positive (unit " + components[i].unit + ")");
    score(static_cast<Eigen::Index>(i)) = -std::log(arg);
  }
  return score;
}

double default_score_shift(const std::vector<VarianceComponents>& components) {
  double min_between = 0.0;
  for (const auto& c : components) min_between = std::min(min_between, c.between);
  return 1.0 - min_between;
}

Eigen::MatrixXd first_order_leontief(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) throw Error(ErrorCode::ShapeMismatch, "W must be square");
  return Eigen::MatrixXd::Identity(w.rows(), w.cols()) + w;
}

}  // namespace netrisk::riskdecomp
