#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace netrisk::io_tables {

/// Make/use national-accounts tables in dollar values.
/// make: industry x commodity, use: commodity x industry.
struct MakeUseTables {
  Eigen::MatrixXd make;
  Eigen::MatrixXd use;
  Eigen::VectorXd output;  // total industry output
  Eigen::VectorXd scrap;   // industry scrap output, scrap_i <= output_i
  std::vector<std::string> labels;

  void validate() const;
};

/// Directed propagation matrices. Entries are dimensionless shares; rows index
/// the exposed unit, columns the origin of the shock.
struct IoNetwork {
  Eigen::MatrixXd w_up;
  Eigen::MatrixXd w_down;
  std::vector<std::string> labels;
  std::string period;
  std::vector<std::string> dropped_units;  // re-indexing record from ingestion
};

struct LeontiefPair {
  Eigen::MatrixXd h_up;
  Eigen::MatrixXd h_down;
};

struct BuildOptions {
  /// Downstream weights normalized by total output (the operational recipe) or
  /// by total input costs as in the share definition.
  bool cost_share_downstream = false;
};

/// Market shares (scrap-adjusted) times input requirements; w_down is the
/// transpose of the direct-requirement table, w_up its sales-share rescaling.
IoNetwork build_propagation_matrices(const MakeUseTables& tables, const BuildOptions& opts = {});

/// Solves (I - W_q) H_q = I for both directions after a stability check.
LeontiefPair leontief_inverse(const IoNetwork& net, double stability_margin = 1e-6);

struct NetworkStats {
  Eigen::VectorXd out_degree_up, in_degree_up;
  Eigen::VectorXd out_degree_down, in_degree_down;
  Eigen::VectorXd centrality_up, centrality_down;  // L1-normalized Perron vectors
  double updown_correlation = 0.0;                 // off-diagonal entry correlation
  int centrality_iterations_up = 0;
  int centrality_iterations_down = 0;
};

struct StatsOptions {
  int max_iterations = 10000;
  double tol = 1e-12;
};

NetworkStats network_stats(const IoNetwork& net, const StatsOptions& opts = {});

/// CSV ingestion. make.csv: industry_id,commodity_id,value; use.csv:
/// commodity_id,industry_id,value; totals.csv: industry_id,output,scrap.
/// Industries missing a totals row are dropped and recorded in the result.
MakeUseTables load_make_use_csv(const std::string& make_path, const std::string& use_path,
                                const std::string& totals_path,
                                std::vector<std::string>* dropped = nullptr);

}  // namespace netrisk::io_tables
