#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace netrisk::portfolio {

/// Long-format panel of annual excess returns, optionally value-weighted.
struct ReturnPanel {
  struct Obs {
    int asset;
    int time;
    double excess_return;
    double weight;  // market value; 1.0 when not supplied
  };
  std::vector<std::string> assets;
  std::vector<Obs> obs;

  void add(const std::string& asset, int time, double excess_return, double weight = 1.0);
  int asset_index(const std::string& asset) const;
  static ReturnPanel from_csv(const std::string& path);
};

/// Time-indexed factor block (columns ordered as named).
struct FactorPanel {
  std::vector<int> times;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // times.size() x names.size()

  int time_index(int t) const;
  static FactorPanel from_csv(const std::string& path);
};

struct BetaRow {
  std::string asset;
  int time;  // terminal year of the window
  Eigen::VectorXd beta;
};

struct BetaPanel {
  std::vector<std::string> factor_names;
  std::vector<BetaRow> rows;
  std::vector<std::pair<std::string, int>> skipped;  // rank-deficient windows
};

/// Rolling OLS of each asset's excess return on the factor block over
/// [t-window+1, t]. Asset-years without a full-rank window are skipped.
BetaPanel rolling_betas(const ReturnPanel& panel, const FactorPanel& factors, int window);

struct PortfolioTable {
  int n_bins = 0;
  std::vector<int> years;            // formation years (returns are year+1)
  Eigen::MatrixXd yearly_equal;      // years x bins, NaN when a bin is empty
  Eigen::MatrixXd yearly_value;
  Eigen::VectorXd mean_equal;        // per-bin average over years
  Eigen::VectorXd mean_value;
  double spread_equal = 0.0, spread_value = 0.0;  // high minus low
  double t_equal = 0.0, t_value = 0.0;
  bool t_defined = true;             // false when the spread series is degenerate
};

/// Quantile-sorts assets each year on the chosen beta and evaluates next-year
/// portfolio returns. Ties break on asset id; boundary assets fall to the
/// lower bin.
PortfolioTable sort_and_spread(const BetaPanel& betas, const ReturnPanel& returns,
                               int sort_factor, int n_bins = 5);

struct MrOptions {
  bool decreasing = true;     // null orientation: means fall across bins
  double mean_block = 2.0;    // stationary bootstrap expected block length
};

/// Monotonic-relation bootstrap p-value over yearly bin means. Small values
/// support the monotone pattern in the configured orientation.
double mr_test(const Eigen::MatrixXd& yearly_bin_means, int n_boot, std::uint64_t seed,
               const MrOptions& opts = {});

enum class AlphaModel { capm, ff3 };

struct AlphaTable {
  Eigen::VectorXd alpha;      // per portfolio
  Eigen::VectorXd alpha_se;
  Eigen::MatrixXd loadings;   // portfolio x factor
  Eigen::VectorXd r2;
};

/// Post-sample alphas: OLS intercepts of portfolio returns on benchmark
/// factors (1 for CAPM, 3 for FF3).
AlphaTable alphas(const Eigen::MatrixXd& portfolio_returns, const Eigen::MatrixXd& benchmark,
                  AlphaModel model);

}  // namespace netrisk::portfolio
