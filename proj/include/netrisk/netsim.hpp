#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "netrisk/latent_circle.hpp"

namespace netrisk::netsim {

/// Sigmoid shock-propensity parameters per firm, per direction.
struct FirmShockParams {
  Eigen::VectorXd k_up, x_up;
  Eigen::VectorXd k_down, x_down;

  static FirmShockParams constant(Eigen::Index n, double k, double x);
  void validate(Eigen::Index n) const;
};

struct EconomyConfig {
  double gamma_u = 1.0, gamma_d = 1.0;  // aggregate loadings
  double beta_u = 1.0, beta_d = 1.0;    // propagation loadings
  double sigma_a = 0.01, sigma_g = 0.01;
  double beta_discount = 0.95;  // in (0,1)
  double gamma_risk = 2.0;      // >= 0

  void validate() const;
};

struct GraphBounds {
  int max_degree = 0;       // most in-edges at any node
  int max_dependency = 0;   // most shared in-neighbors over node pairs (i != j)
  double degree_ratio = 0.0;      // max_degree / n^2
  double dependency_ratio = 0.0;  // max_dependency / n
};

/// Direct-connection bounds of a weighted directed graph (edge j->i counted
/// when w_ji > 0, matching row-i-is-exposed weight orientation).
GraphBounds graph_bounds(const Eigen::MatrixXd& w);

/// p_i = 1 / (1 + exp(k_i (s_i - x_i))); decreasing in s.
Eigen::VectorXd propensity(const Eigen::VectorXd& s, const Eigen::VectorXd& k,
                           const Eigen::VectorXd& x);

struct SubstitutabilityResult {
  Eigen::VectorXd s;
  std::vector<int> floored;  // units with <2 partners or an empty pair sum
};

/// s_i = log sum_{j != k} w_ij w_ik d_jk over ordered partner pairs. Units
/// whose pair sum is empty or zero receive the floor value and are flagged.
SubstitutabilityResult substitutability(const Eigen::MatrixXd& w, const Eigen::MatrixXd& distances,
                                        double floor_value);

struct SimulationInputs {
  Eigen::MatrixXd w_up, w_down;
  latent::LatentCircleState technology;  // drives upstream substitutability
  latent::LatentCircleState product;     // drives downstream substitutability
  FirmShockParams params;
  EconomyConfig config;
  int horizon = 1;
  std::uint64_t seed = 0;
  latent::DistanceMode distance_mode = latent::DistanceMode::unwrapped;
  double substitutability_floor = -30.0;
};

struct SimulationResult {
  Eigen::MatrixXi eps_u, eps_d;       // n x T binary shocks
  Eigen::MatrixXd p_up, p_down;       // n x T propensities
  Eigen::VectorXd factor_u, factor_d; // W_qt = mean_i eps_iqt
  Eigen::MatrixXd firm_growth;        // n x T
  Eigen::VectorXd consumption_growth; // T
  Eigen::VectorXd sdf;                // T, log units
  Eigen::VectorXd agg_a, agg_g;       // aggregate shocks
};

SimulationResult simulate_economy(const SimulationInputs& inputs);

/// m = log(beta) - gamma * consumption growth, componentwise.
Eigen::VectorXd log_sdf(const Eigen::VectorXd& consumption_growth, const EconomyConfig& config);

struct ChebyshevCheck {
  double k = 0.0;
  double threshold = 0.0;   // 2 k Mbar / n
  double empirical = 0.0;   // frequency of |W - mu| >= threshold
  double bound = 0.0;       // 1 / k^2
};

struct DiagnosticsReport {
  // Kolmogorov-Smirnov of per-period standardized factors against N(0,1).
  double ks_stat_u = 0.0, ks_pvalue_u = 0.0;
  double ks_stat_d = 0.0, ks_pvalue_d = 0.0;
  std::vector<ChebyshevCheck> chebyshev_u, chebyshev_d;
  // Empirical variance of W - mu against the concentration bounds.
  double var_u = 0.0, var_d = 0.0;
  double proof_bound_u = 0.0, proof_bound_d = 0.0;    // 2 Mbar / n
  double stated_bound_u = 0.0, stated_bound_d = 0.0;  // Mbar / n
};

/// Normality and concentration checks for a simulated economy, standardizing
/// each period by its known propensities.
DiagnosticsReport diagnostics(const SimulationResult& result, const GraphBounds& bounds_up,
                              const GraphBounds& bounds_down);

struct KsCheck {
  double statistic = 0.0;
  double pvalue = 0.0;
};

/// Draws `replications` one-period propagation factors at fixed propensities
/// and KS-tests the standardized values against N(0,1).
KsCheck factor_normality_check(const Eigen::VectorXd& p, int replications, std::uint64_t seed);

/// Sparse random trade network: each unit draws `partners` distinct partners
/// with uniform weights normalized to `row_sum`. Deterministic under seed.
Eigen::MatrixXd random_network(Eigen::Index n, int partners, double row_sum, std::uint64_t seed);

struct GeInputs {
  Eigen::VectorXd nominal_output;  // price times quantity per unit
  Eigen::VectorXd beta;            // preference weights
};

struct GeResponse {
  Eigen::VectorXd dlogy_down;
  Eigen::VectorXd dlogy_up;
};

/// Linearized responses: downstream (I-W)^{-1} dz and upstream
/// (I-W')^{-1} Lambda dG with the demand scaling matrix Lambda.
GeResponse ge_response(const Eigen::MatrixXd& w, const Eigen::VectorXd& dz,
                       const Eigen::VectorXd& dG, const GeInputs& ge);

}  // namespace netrisk::netsim
