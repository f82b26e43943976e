#include "netrisk/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "netrisk/csv.hpp"
#include "netrisk/error.hpp"
#include "netrisk/linalg.hpp"
#include "netrisk/rng.hpp"

namespace netrisk::portfolio {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void ReturnPanel::add(const std::string& asset, int time, double excess_return, double weight) {
  if (!std::isfinite(excess_return))
    throw Error(ErrorCode::InvalidArgument, "returns must be finite");
  int idx = asset_index(asset);
  if (idx < 0) {
    idx = static_cast<int>(assets.size());
    assets.push_back(asset);
  }
  for (const auto& o : obs)
    if (o.asset == idx && o.time == time)
      throw Error(ErrorCode::InvalidArgument, "duplicate (asset,time) return");
  obs.push_back({idx, time, excess_return, weight});
}

int ReturnPanel::asset_index(const std::string& asset) const {
  for (std::size_t i = 0; i < assets.size(); ++i)
    if (assets[i] == asset) return static_cast<int>(i);
  return -1;
}

ReturnPanel ReturnPanel::from_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const int c_asset = t.require_column("asset");
  const int c_time = t.require_column("time");
  const int c_ret = t.require_column("excess_return");
  const int c_weight = t.column("weight");
  ReturnPanel panel;
  for (const auto& row : t.rows) {
    const double w =
        c_weight >= 0 ? csv::parse_double(row[static_cast<std::size_t>(c_weight)]) : 1.0;
    panel.add(row[static_cast<std::size_t>(c_asset)],
              static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_time)])),
              csv::parse_double(row[static_cast<std::size_t>(c_ret)]), w);
  }
  return panel;
}

int FactorPanel::time_index(int t) const {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] == t) return static_cast<int>(i);
  return -1;
}

FactorPanel FactorPanel::from_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const int c_time = t.require_column("time");
  FactorPanel fp;
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    if (static_cast<int>(j) != c_time) fp.names.push_back(t.columns[j]);
  fp.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                   static_cast<Eigen::Index>(fp.names.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    fp.times.push_back(static_cast<int>(csv::parse_long(t.rows[r][static_cast<std::size_t>(c_time)])));
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      if (static_cast<int>(j) != c_time)
        fp.values(static_cast<Eigen::Index>(r), col++) = csv::parse_double(t.rows[r][j]);
  }
  return fp;
}

BetaPanel rolling_betas(const ReturnPanel& panel, const FactorPanel& factors, int window) {
  const Eigen::Index k = factors.values.cols();
  if (window < static_cast<int>(k) + 2)
    throw Error(ErrorCode::InvalidArgument, "window must cover regressors plus two");

  BetaPanel out;
  out.factor_names = factors.names;

  std::map<int, std::map<int, double>> by_asset;  // asset -> time -> return
  for (const auto& o : panel.obs) by_asset[o.asset][o.time] = o.excess_return;

  for (const auto& [asset, series] : by_asset) {
    for (const auto& [t, unused] : series) {
      // window [t-window+1, t]; every year and factor row must be present
      std::vector<double> ys;
      std::vector<Eigen::Index> frows;
      bool complete = true;
      for (int s = t - window + 1; s <= t && complete; ++s) {
        const auto it = series.find(s);
        const int fi = factors.time_index(s);
        if (it == series.end() || fi < 0) {
          complete = false;
          break;
        }
        ys.push_back(it->second);
        frows.push_back(fi);
      }
      if (!complete) continue;
      Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
      Eigen::MatrixXd x(y.size(), k);
      for (Eigen::Index r = 0; r < y.size(); ++r)
        x.row(r) = factors.values.row(frows[static_cast<std::size_t>(r)]);
      linalg::OlsOptions oo;
      oo.intercept = true;
      try {
        const auto fit = linalg::ols(y, x, oo);
        out.rows.push_back({panel.assets[static_cast<std::size_t>(asset)], t, fit.coef.head(k)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        out.skipped.emplace_back(panel.assets[static_cast<std::size_t>(asset)], t);
      }
    }
  }
  return out;
}

PortfolioTable sort_and_spread(const BetaPanel& betas, const ReturnPanel& returns,
                               int sort_factor, int n_bins) {
  if (n_bins < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 bins");
  if (sort_factor < 0 || sort_factor >= static_cast<int>(betas.factor_names.size()))
    throw Error(ErrorCode::InvalidArgument, "sort factor out of range");

  std::map<std::pair<int, int>, std::pair<double, double>> next_ret;  // (asset,time)->(ret,weight)
  for (const auto& o : returns.obs) next_ret[{o.asset, o.time}] = {o.excess_return, o.weight};

  std::map<int, std::vector<std::pair<double, int>>> by_year;  // formation year -> (beta, asset)
  for (const auto& row : betas.rows) {
    const int asset = returns.asset_index(row.asset);
    if (asset < 0) continue;
    if (!next_ret.count({asset, row.time + 1})) continue;  // needs out-of-sample return
    by_year[row.time].push_back({row.beta(sort_factor), asset});
  }

  PortfolioTable table;
  table.n_bins = n_bins;
  std::vector<Eigen::VectorXd> eq_rows, vw_rows;
  for (auto& [year, entries] : by_year) {
    if (static_cast<int>(entries.size()) < n_bins) continue;  // every bin needs an asset
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;  // stable tie-break on asset id
    });
    const int m = static_cast<int>(entries.size());
    Eigen::VectorXd eq = Eigen::VectorXd::Zero(n_bins), vw = Eigen::VectorXd::Zero(n_bins);
    Eigen::VectorXd eq_n = Eigen::VectorXd::Zero(n_bins), vw_w = Eigen::VectorXd::Zero(n_bins);
    for (int r = 0; r < m; ++r) {
      // boundary assets fall to the lower bin
      const int bin = std::min(n_bins - 1, r * n_bins / m);
      const auto [ret, weight] = next_ret[{entries[static_cast<std::size_t>(r)].second, year + 1}];
      eq(bin) += ret;
      eq_n(bin) += 1.0;
      vw(bin) += weight * ret;
      vw_w(bin) += weight;
    }
    for (int b = 0; b < n_bins; ++b) {
      eq(b) = eq_n(b) > 0 ? eq(b) / eq_n(b) : kNaN;
      vw(b) = vw_w(b) > 0 ? vw(b) / vw_w(b) : kNaN;
    }
    table.years.push_back(year);
    eq_rows.push_back(eq);
    vw_rows.push_back(vw);
  }
  if (table.years.empty())
    throw Error(ErrorCode::InsufficientData, "no formation year has enough sorted assets");

  const Eigen::Index y = static_cast<Eigen::Index>(table.years.size());
  table.yearly_equal.resize(y, n_bins);
  table.yearly_value.resize(y, n_bins);
  for (Eigen::Index r = 0; r < y; ++r) {
    table.yearly_equal.row(r) = eq_rows[static_cast<std::size_t>(r)];
    table.yearly_value.row(r) = vw_rows[static_cast<std::size_t>(r)];
  }
  table.mean_equal = table.yearly_equal.colwise().mean();
  table.mean_value = table.yearly_value.colwise().mean();
  table.spread_equal = table.mean_equal(n_bins - 1) - table.mean_equal(0);
  table.spread_value = table.mean_value(n_bins - 1) - table.mean_value(0);

  auto spread_t = [&](const Eigen::MatrixXd& yearly, bool* defined) {
    const Eigen::VectorXd d = yearly.col(n_bins - 1) - yearly.col(0);
    const double mean = d.mean();
    const double sd = std::sqrt((d.array() - mean).square().sum() /
                                std::max<double>(1.0, static_cast<double>(d.size() - 1)));
    if (sd <= 0.0 || d.size() < 2) {
      *defined = false;
      return 0.0;
    }
    return mean / (sd / std::sqrt(static_cast<double>(d.size())));
  };
  bool def_eq = true, def_vw = true;
  table.t_equal = spread_t(table.yearly_equal, &def_eq);
  table.t_value = spread_t(table.yearly_value, &def_vw);
  table.t_defined = def_eq && def_vw;
  return table;
}

double mr_test(const Eigen::MatrixXd& yearly_bin_means, int n_boot, std::uint64_t seed,
               const MrOptions& opts) {
  const Eigen::Index years = yearly_bin_means.rows();
  const Eigen::Index bins = yearly_bin_means.cols();
  if (years < 2 || bins < 2)
    throw Error(ErrorCode::InsufficientData, "MR test needs >= 2 bins and >= 2 years");
  if (n_boot < 1) throw Error(ErrorCode::InvalidArgument, "need bootstrap replicates");
  if (!yearly_bin_means.allFinite())
    throw Error(ErrorCode::InsufficientData, "bin means contain missing values");

  // Adjacent differences oriented so the monotone alternative is "all positive".
  Eigen::MatrixXd diffs(years, bins - 1);
  for (Eigen::Index q = 0; q + 1 < bins; ++q)
    diffs.col(q) = opts.decreasing
                       ? (yearly_bin_means.col(q) - yearly_bin_means.col(q + 1)).eval()
                       : (yearly_bin_means.col(q + 1) - yearly_bin_means.col(q)).eval();
  const Eigen::VectorXd observed = diffs.colwise().mean();
  const double j_obs = observed.minCoeff();

  const double p_continue = 1.0 - 1.0 / std::max(1.0, opts.mean_block);
  Rng rng(seed);
  int exceed = 0;
  Eigen::VectorXd boot_mean(bins - 1);
  for (int b = 0; b < n_boot; ++b) {
    // stationary bootstrap: geometric blocks over the circular year index
    boot_mean.setZero();
    Eigen::Index pos = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(years)));
    for (Eigen::Index t = 0; t < years; ++t) {
      boot_mean += diffs.row(pos);
      if (rng.uniform() < p_continue)
        pos = (pos + 1) % years;
      else
        pos = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(years)));
    }
    boot_mean /= static_cast<double>(years);
    // recentre at the sample means to impose the boundary null
    const double j_boot = (boot_mean - observed).minCoeff();
    if (j_boot > j_obs) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(n_boot);
}

AlphaTable alphas(const Eigen::MatrixXd& portfolio_returns, const Eigen::MatrixXd& benchmark,
                  AlphaModel model) {
  const Eigen::Index expected = model == AlphaModel::capm ? 1 : 3;
  if (benchmark.cols() != expected)
    throw Error(ErrorCode::ShapeMismatch, "benchmark factor count does not match the model");
  if (portfolio_returns.rows() != benchmark.rows())
    throw Error(ErrorCode::ShapeMismatch, "portfolio/benchmark periods disagree");

  const Eigen::Index p = portfolio_returns.cols();
  AlphaTable table;
  table.alpha.resize(p);
  table.alpha_se.resize(p);
  table.loadings.resize(p, benchmark.cols());
  table.r2.resize(p);
  linalg::OlsOptions oo;
  oo.intercept = true;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto fit = linalg::ols(portfolio_returns.col(j), benchmark, oo);
    table.alpha(j) = fit.coef(benchmark.cols());
    table.alpha_se(j) = fit.se(benchmark.cols());
    table.loadings.row(j) = fit.coef.head(benchmark.cols());
    table.r2(j) = fit.r2;
  }
  return table;
}

}  // namespace netrisk::portfolio
