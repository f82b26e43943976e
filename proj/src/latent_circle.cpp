#include "netrisk/latent_circle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "netrisk/error.hpp"

namespace netrisk::latent {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void LatentCircleState::validate() const {
  if (!(sigma_theta > 0.0))
    throw Error(ErrorCode::InvalidArgument, "sigma_theta must be positive");
  if (!(std::abs(rho) < 1.0))
    throw Error(ErrorCode::InvalidArgument, "|rho| must be below 1");
  if (theta.size() == 0) throw Error(ErrorCode::InvalidArgument, "state has no units");
}

LatentCircleState step_angles(const LatentCircleState& state, Rng& rng) {
  state.validate();
  LatentCircleState next = state;
  for (Eigen::Index i = 0; i < next.theta.size(); ++i)
    next.theta(i) = state.rho * state.theta(i) + rng.normal(0.0, state.sigma_theta);
  return next;
}

LatentCircleState step_angles(const LatentCircleState& state, std::uint64_t seed) {
  Rng rng(seed);
  return step_angles(state, rng);
}

Eigen::MatrixXd pairwise_distance(const LatentCircleState& state, DistanceMode mode) {
  state.validate();
  const Eigen::Index n = state.theta.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double gap = std::abs(state.theta(i) - state.theta(j));
      if (mode == DistanceMode::wrapped) {
        gap = std::fmod(gap, kTwoPi);
        if (gap > kTwoPi / 2.0) gap = kTwoPi - gap;
      }
      const double dist = gap / kTwoPi;
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

DistanceMoments distance_moments(double rho, double sigma_theta, const MomentOptions& opts) {
  if (!(sigma_theta > 0.0) || !(std::abs(rho) < 1.0))
    throw Error(ErrorCode::InvalidArgument, "invalid AR(1) parameters");
  const double pi = kTwoPi / 2.0;
  const double marginal = sigma_theta * sigma_theta / (1.0 - rho * rho);
  DistanceMoments m;
  m.sigma_d2 = (2.0 - 4.0 / pi) * marginal;
  m.mean_abs_gap = 2.0 * sigma_theta / std::sqrt(pi * (1.0 - rho * rho));
  if (opts.radian_scale) {
    m.sigma_d2 /= kTwoPi * kTwoPi;
    m.mean_abs_gap /= kTwoPi;
  }
  return m;
}

SubstitutabilityMoments substitutability_moments(const Eigen::MatrixXd& weights, double rho,
                                                 double sigma_theta, const MomentOptions& opts) {
  const Eigen::Index n = weights.rows();
  if (weights.cols() != n) throw Error(ErrorCode::ShapeMismatch, "weights must be square");
  if (weights.minCoeff() < 0.0)
    throw Error(ErrorCode::NegativeEntry, "weights must be nonnegative");
  const DistanceMoments dm = distance_moments(rho, sigma_theta, opts);
  const double sigma_d = std::sqrt(dm.sigma_d2);
  const double pi = kTwoPi / 2.0;

  // Partner sets: j is a partner of i when w_ij > 0.
  std::vector<std::vector<Eigen::Index>> partners(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && weights(i, j) > 0.0) partners[static_cast<std::size_t>(i)].push_back(j);

  SubstitutabilityMoments out;
  out.mu = Eigen::VectorXd::Zero(n);
  out.cov = Eigen::MatrixXd::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi_set = partners[static_cast<std::size_t>(i)];
    double pair_sum = 0.0;
    double pair_sq = 0.0;
    for (std::size_t a = 0; a < pi_set.size(); ++a) {
      for (std::size_t b = a + 1; b < pi_set.size(); ++b) {
        const double ww = weights(i, pi_set[a]) * weights(i, pi_set[b]);
        pair_sum += ww;
        pair_sq += ww * ww;
      }
    }
    out.mu(i) = -sigma_d * std::sqrt(8.0 / pi) * pair_sum;
    out.cov(i, i) = 4.0 * dm.sigma_d2 * pair_sq;
  }

  // Cross terms: identical partner pairs {j,k} are the same random distance.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a_set = partners[static_cast<std::size_t>(i)];
      const auto& b_set = partners[static_cast<std::size_t>(j)];
      double acc = 0.0;
      for (std::size_t a = 0; a < a_set.size(); ++a) {
        for (std::size_t b = a + 1; b < a_set.size(); ++b) {
          const Eigen::Index p = a_set[a], q = a_set[b];
          if (weights(j, p) > 0.0 && weights(j, q) > 0.0)
            acc += weights(i, p) * weights(i, q) * weights(j, p) * weights(j, q);
        }
      }
      const double c = 4.0 * dm.sigma_d2 * acc;
      out.cov(i, j) = c;
      out.cov(j, i) = c;
    }
  }
  return out;
}

PropensityStats propensity_stats(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                 const Eigen::VectorXd& k) {
  const Eigen::Index n = mu.size();
  if (cov.rows() != n || cov.cols() != n || k.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "mu/cov/k dimensions disagree");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidCovariance, "covariance must be positive semidefinite");

  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = k.asDiagonal() * centering;

  PropensityStats stats;
  stats.logodds_mean = b * mu;
  stats.logodds_cov = b * cov * b.transpose();
  stats.median_p = stats.logodds_mean.unaryExpr(
      [](double l) { return 1.0 / (1.0 + std::exp(-l)); });
  return stats;
}

McMoments propensity_mc_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                const Eigen::VectorXd& k, int draws, std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 draws");
  const Eigen::Index n = mu.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = k.asDiagonal() * centering;

  Rng rng(seed);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd z(n), p(n);
  for (int d = 0; d < draws; ++d) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    const Eigen::VectorXd l = b * (mu + root * z);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = 1.0 / (1.0 + std::exp(-l(i)));
    mean += p;
    second += p * p.transpose();
  }
  mean /= static_cast<double>(draws);
  McMoments mm;
  mm.mean_p = mean;
  mm.cov_p = second / static_cast<double>(draws) - mean * mean.transpose();
  return mm;
}

}  // namespace netrisk::latent
