#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "netrisk/shock_cov.hpp"

namespace netrisk::riskdecomp {

enum class Direction { up, down };

inline const char* direction_name(Direction d) { return d == Direction::up ? "up" : "down"; }

/// Per-unit variance split: own-shock term, squared exposure to partners'
/// variances, and the signed cross terms (positive-correlation pairs vs
/// negative-correlation pairs).
struct VarianceComponents {
  std::string unit;
  Direction direction = Direction::up;
  double self = 0.0;
  double across = 0.0;
  double between = 0.0;
  double substitutability = 0.0;
  double total = 0.0;
};

struct DecomposeOptions {
  /// Drop cross pairs involving the own unit from between/substitutability.
  bool exclude_self_pairs = false;
};

std::vector<VarianceComponents> decompose_variance(const Eigen::MatrixXd& h,
                                                   const shockcov::ShockCovariance& sigma,
                                                   Direction direction,
                                                   const DecomposeOptions& opts = {});

/// Zero-order robustness averaging: each replicate zeroes every nonzero
/// off-diagonal covariance pair independently with probability drop_fraction,
/// and per-unit components are averaged across replicates.
std::vector<VarianceComponents> bootstrap_components(const Eigen::MatrixXd& h,
                                                     const shockcov::ShockCovariance& sigma,
                                                     Direction direction, double drop_fraction,
                                                     int n_samples, std::uint64_t seed,
                                                     const DecomposeOptions& opts = {},
                                                     int threads = 1);

/// score_i = -log(between_i + shift); shift must make every argument positive.
Eigen::VectorXd substitutability_score(const std::vector<VarianceComponents>& components,
                                       double shift);

/// Default shift: 1 - min(between) over the dataset.
double default_score_shift(const std::vector<VarianceComponents>& components);

/// First-order propagation: I + W in place of the full Leontief inverse.
Eigen::MatrixXd first_order_leontief(const Eigen::MatrixXd& w);

}  // namespace netrisk::riskdecomp
