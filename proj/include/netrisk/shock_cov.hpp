#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "netrisk/io_tables.hpp"

namespace netrisk::shockcov {

/// Long-format panel of growth rates (log differences).
struct PanelData {
  struct Obs {
    int unit;     // index into units
    int time;     // period label
    double value;
    int cluster;  // -1 when absent
  };
  std::vector<std::string> units;
  std::vector<Obs> obs;
  bool has_cluster = false;

  void add(const std::string& unit, int time, double value, int cluster = -1);
  int unit_index(const std::string& unit) const;  // -1 if absent

  /// Dense unit x time grid over the sorted distinct times; missing cells NaN.
  Eigen::MatrixXd grid(std::vector<int>* times = nullptr) const;

  static PanelData from_csv(const std::string& path);
};

enum class SpatialEstimator {
  /// Instrumented least squares: spatial lags fitted on lags of the panel and
  /// their network transforms. Consistent under simultaneous propagation.
  two_stage,
  /// Plain least squares on the stacked system (biased when spatial feedback
  /// is present; kept for comparability).
  ols,
};

struct SpatialOptions {
  SpatialEstimator estimator = SpatialEstimator::two_stage;
};

struct SpatialFit {
  double phi = 0.0, beta_u = 0.0, beta_d = 0.0;
  double se_phi = 0.0, se_beta_u = 0.0, se_beta_d = 0.0;
  Eigen::VectorXd time_effects;  // per estimation period
  std::vector<int> times;        // estimation periods (first period dropped for the lag)
  Eigen::MatrixXd residuals;     // n x times.size()
  double r2 = 0.0;
  std::vector<int> dropped_regressors;  // 0=lag, 1=upstream, 2=downstream
};

/// Panel regression with time effects, an own lag, and upstream/downstream
/// spatial lags. Requires a balanced panel whose units match the network.
SpatialFit fit_spatial_panel(const PanelData& panel, const io_tables::IoNetwork& net,
                             const SpatialOptions& opts = {});

enum class CovMode { spatial, observed };

enum class Provenance { spatial, observed, distance };

struct ShockCovariance {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXi sign;  // sgn(sigma_jk)
  Provenance provenance = Provenance::spatial;
  std::vector<std::string> units;
  Eigen::MatrixXi too_few_obs;   // pairs zeroed for lack of overlap
  double psd_adjustment = 0.0;   // Frobenius norm of any PSD projection

  void refresh_sign();
};

struct CovOptions {
  int min_overlap = 2;
};

/// Pairwise-complete covariance of a panel. In observed mode each unit is
/// first residualized on the cross-sectional mean of the panel (a one-factor
/// sweep standing in for the first principal component).
ShockCovariance estimate_covariance(const PanelData& panel, CovMode mode,
                                    const CovOptions& opts = {});

struct DistanceOptions {
  /// distance -> correlation map; the default is the linear map fixed by the
  /// endpoint conditions rho(0)=1, rho(1)=-1.
  std::function<double(double)> correlation = nullptr;
  bool project_psd = true;
};

/// Correlations from latent distances, scaled by per-unit variances.
ShockCovariance distance_to_covariance(const Eigen::MatrixXd& distances,
                                       const Eigen::VectorXd& variances,
                                       const DistanceOptions& opts = {});

}  // namespace netrisk::shockcov
