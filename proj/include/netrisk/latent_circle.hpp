#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "netrisk/rng.hpp"

namespace netrisk::latent {

enum class Space { product, technology };

/// Unit positions on the latent circle, driven by an angular AR(1).
struct LatentCircleState {
  Eigen::VectorXd theta;  // radians
  double rho = 0.0;       // persistence, |rho| < 1
  double sigma_theta = 1.0;
  Space space = Space::product;

  void validate() const;
};

/// One AR(1) step: theta' = rho*theta + eps, eps ~ N(0, sigma_theta^2).
LatentCircleState step_angles(const LatentCircleState& state, Rng& rng);
LatentCircleState step_angles(const LatentCircleState& state, std::uint64_t seed);

enum class DistanceMode {
  unwrapped,  // |theta_i - theta_j| / (2 pi), unbounded
  wrapped,    // shorter arc / (2 pi), in [0, 1/2]
};

Eigen::MatrixXd pairwise_distance(const LatentCircleState& state, DistanceMode mode);

struct MomentOptions {
  /// Scale raw angular-gap moments by 1/(2 pi)^2 so they refer to the
  /// normalized distance. Off reproduces the raw-gap formulas.
  bool radian_scale = true;
};

struct DistanceMoments {
  double sigma_d2 = 0.0;    // variance of the pairwise distance
  double mean_abs_gap = 0.0;
};

/// Stationary moments of the gap between two independent AR(1) angles.
DistanceMoments distance_moments(double rho, double sigma_theta, const MomentOptions& opts = {});

struct SubstitutabilityMoments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
};

/// Mean/covariance of the linear substitutability sums under the latent
/// circle, from the weighted pair sums over each unit's partner set. The cross
/// covariance counts shared partner pairs (identical index pairs are perfectly
/// correlated, disjoint ones uncorrelated).
SubstitutabilityMoments substitutability_moments(const Eigen::MatrixXd& weights, double rho,
                                                 double sigma_theta,
                                                 const MomentOptions& opts = {});

struct PropensityStats {
  Eigen::VectorXd median_p;
  Eigen::VectorXd logodds_mean;
  Eigen::MatrixXd logodds_cov;
};

/// Log-odds l = diag(k) (I - 11'/n) s for s ~ N(mu, cov); the median of the
/// logistic-normal p is F(E[l]). Mean/variance of p have no closed form; see
/// propensity_mc_moments.
PropensityStats propensity_stats(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                 const Eigen::VectorXd& k);

struct McMoments {
  Eigen::VectorXd mean_p;
  Eigen::MatrixXd cov_p;
  bool monte_carlo = true;  // always: these moments are simulation estimates
};

McMoments propensity_mc_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                const Eigen::VectorXd& k, int draws, std::uint64_t seed);

}  // namespace netrisk::latent
