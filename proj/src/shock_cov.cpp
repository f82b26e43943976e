#include "netrisk/shock_cov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "netrisk/csv.hpp"
#include "netrisk/error.hpp"
#include "netrisk/linalg.hpp"

namespace netrisk::shockcov {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void PanelData::add(const std::string& unit, int time, double value, int cluster) {
  if (!std::isfinite(value))
    throw Error(ErrorCode::InvalidArgument, "panel values must be finite");
  int idx = unit_index(unit);
  if (idx < 0) {
    idx = static_cast<int>(units.size());
    units.push_back(unit);
  }
  obs.push_back({idx, time, value, cluster});
  if (cluster >= 0) has_cluster = true;
}

int PanelData::unit_index(const std::string& unit) const {
  for (std::size_t i = 0; i < units.size(); ++i)
    if (units[i] == unit) return static_cast<int>(i);
  return -1;
}

Eigen::MatrixXd PanelData::grid(std::vector<int>* times_out) const {
  std::set<int> time_set;
  for (const auto& o : obs) time_set.insert(o.time);
  std::vector<int> times(time_set.begin(), time_set.end());
  std::map<int, Eigen::Index> tidx;
  for (std::size_t t = 0; t < times.size(); ++t) tidx[times[t]] = static_cast<Eigen::Index>(t);

  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(units.size()),
                                                static_cast<Eigen::Index>(times.size()), kNaN);
  for (const auto& o : obs) {
    Eigen::Index r = o.unit, c = tidx[o.time];
    if (!std::isnan(g(r, c)))
      throw Error(ErrorCode::InvalidArgument, "duplicate (unit,time) observation");
    g(r, c) = o.value;
  }
  if (times_out) *times_out = times;
  return g;
}

PanelData PanelData::from_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const int c_unit = t.require_column("unit");
  const int c_time = t.require_column("time");
  const int c_value = t.require_column("value");
  const int c_cluster = t.column("cluster");
  PanelData panel;
  for (const auto& row : t.rows) {
    const int cluster =
        c_cluster >= 0 ? static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_cluster)]))
                       : -1;
    panel.add(row[static_cast<std::size_t>(c_unit)],
              static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_time)])),
              csv::parse_double(row[static_cast<std::size_t>(c_value)]), cluster);
  }
  return panel;
}

SpatialFit fit_spatial_panel(const PanelData& panel, const io_tables::IoNetwork& net,
                             const SpatialOptions& opts) {
  const Eigen::Index n = static_cast<Eigen::Index>(panel.units.size());
  if (net.w_up.rows() != n || net.w_down.rows() != n)
    throw Error(ErrorCode::ShapeMismatch, "network units do not match panel units");
  if (!net.labels.empty())
    for (Eigen::Index i = 0; i < n; ++i)
      if (net.labels[static_cast<std::size_t>(i)] != panel.units[static_cast<std::size_t>(i)])
        throw Error(ErrorCode::ShapeMismatch, "network labels do not match panel unit order");

  std::vector<int> times;
  const Eigen::MatrixXd y = panel.grid(&times);
  const Eigen::Index total_t = y.cols();
  if (total_t < 3) throw Error(ErrorCode::InsufficientPeriods, "need at least 3 periods");
  if (y.hasNaN())
    throw Error(ErrorCode::InsufficientPeriods, "spatial panel requires a balanced panel");

  // The first period only supplies the lag.
  const Eigen::Index T = total_t - 1;
  const Eigen::MatrixXd cur = y.rightCols(T);
  const Eigen::MatrixXd lag = y.leftCols(T);
  const Eigen::MatrixXd up = net.w_up * cur;
  const Eigen::MatrixXd down = net.w_down * cur;

  auto demean_cols = [](Eigen::MatrixXd m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).array() -= m.col(c).mean();
    return m;
  };
  auto flatten = [](const Eigen::MatrixXd& m) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  };

  const Eigen::VectorXd yv = flatten(demean_cols(cur));
  Eigen::MatrixXd x(n * T, 3);
  x.col(0) = flatten(demean_cols(lag));
  x.col(1) = flatten(demean_cols(up));
  x.col(2) = flatten(demean_cols(down));

  if (yv.cwiseAbs().maxCoeff() < 1e-14)
    throw Error(ErrorCode::RankDeficient, "outcome has no within-period variation");

  linalg::OlsOptions ols_opts;
  if (panel.has_cluster) {
    std::map<std::pair<int, int>, int> cluster_of;  // (unit,time) -> cluster
    for (const auto& o : panel.obs) cluster_of[{o.unit, o.time}] = o.cluster;
    ols_opts.clusters.resize(static_cast<std::size_t>(n * T));
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index i = 0; i < n; ++i)
        ols_opts.clusters[static_cast<std::size_t>(t * n + i)] =
            cluster_of[{static_cast<int>(i), times[static_cast<std::size_t>(t + 1)]}];
  }

  linalg::OlsFit ols_fit;
  if (opts.estimator == SpatialEstimator::two_stage) {
    // Instruments: the predetermined lag and its network transforms.
    Eigen::MatrixXd z(n * T, 6);
    z.col(0) = x.col(0);
    z.col(1) = flatten(demean_cols(net.w_up * lag));
    z.col(2) = flatten(demean_cols(net.w_down * lag));
    z.col(3) = flatten(demean_cols(net.w_up * (net.w_up * lag)));
    z.col(4) = flatten(demean_cols(net.w_down * (net.w_down * lag)));
    z.col(5) = flatten(demean_cols(net.w_up * (net.w_down * lag)));
    ols_fit = linalg::two_stage_ls(yv, x, z, ols_opts);
  } else {
    ols_fit = linalg::ols(yv, x, ols_opts);
  }

  SpatialFit fit;
  fit.phi = ols_fit.coef(0);
  fit.beta_u = ols_fit.coef(1);
  fit.beta_d = ols_fit.coef(2);
  fit.se_phi = ols_fit.se(0);
  fit.se_beta_u = ols_fit.se(1);
  fit.se_beta_d = ols_fit.se(2);
  fit.r2 = ols_fit.r2;
  fit.dropped_regressors = ols_fit.dropped;
  fit.times.assign(times.begin() + 1, times.end());

  // Time effects and residuals from the un-demeaned system.
  fit.time_effects.resize(T);
  fit.residuals.resize(n, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::VectorXd pred =
        fit.phi * lag.col(t) + fit.beta_u * up.col(t) + fit.beta_d * down.col(t);
    fit.time_effects(t) = (cur.col(t) - pred).mean();
    fit.residuals.col(t) = cur.col(t) - pred - Eigen::VectorXd::Constant(n, fit.time_effects(t));
  }
  return fit;
}

void ShockCovariance::refresh_sign() {
  sign.resize(sigma.rows(), sigma.cols());
  for (Eigen::Index i = 0; i < sigma.rows(); ++i)
    for (Eigen::Index j = 0; j < sigma.cols(); ++j)
      sign(i, j) = sigma(i, j) > 0.0 ? 1 : (sigma(i, j) < 0.0 ? -1 : 0);
}

ShockCovariance estimate_covariance(const PanelData& panel, CovMode mode, const CovOptions& opts) {
  Eigen::MatrixXd g = panel.grid();
  const Eigen::Index n = g.rows();
  const Eigen::Index T = g.cols();

  if (mode == CovMode::observed) {
    // Residualize each unit on the cross-sectional mean of shocks.
    Eigen::VectorXd mean_t(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      double s = 0.0;
      int c = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isnan(g(i, t))) {
          s += g(i, t);
          ++c;
        }
      mean_t(t) = c > 0 ? s / c : kNaN;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> xs, ys;
      for (Eigen::Index t = 0; t < T; ++t)
        if (!std::isnan(g(i, t)) && !std::isnan(mean_t(t))) {
          xs.push_back(mean_t(t));
          ys.push_back(g(i, t));
        }
      if (xs.size() < 2) continue;
      Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
      Eigen::MatrixXd xv(static_cast<Eigen::Index>(xs.size()), 1);
      xv.col(0) = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      linalg::OlsOptions oo;
      oo.intercept = true;
      const auto f = linalg::ols(yv, xv, oo);
      std::size_t k = 0;
      for (Eigen::Index t = 0; t < T; ++t)
        if (!std::isnan(g(i, t)) && !std::isnan(mean_t(t))) g(i, t) = f.residuals(static_cast<Eigen::Index>(k++));
    }
  }

  ShockCovariance cov;
  cov.units = panel.units;
  cov.provenance = mode == CovMode::spatial ? Provenance::spatial : Provenance::observed;
  cov.sigma = Eigen::MatrixXd::Zero(n, n);
  cov.too_few_obs = Eigen::MatrixXi::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double sx = 0.0, sy = 0.0;
      int c = 0;
      for (Eigen::Index t = 0; t < T; ++t)
        if (!std::isnan(g(i, t)) && !std::isnan(g(j, t))) {
          sx += g(i, t);
          sy += g(j, t);
          ++c;
        }
      if (c < opts.min_overlap) {
        cov.too_few_obs(i, j) = cov.too_few_obs(j, i) = 1;
        continue;
      }
      const double mx = sx / c, my = sy / c;
      double acc = 0.0;
      for (Eigen::Index t = 0; t < T; ++t)
        if (!std::isnan(g(i, t)) && !std::isnan(g(j, t)))
          acc += (g(i, t) - mx) * (g(j, t) - my);
      const double v = acc / (c - 1);
      cov.sigma(i, j) = v;
      cov.sigma(j, i) = v;
    }
  }
  cov.sigma = 0.5 * (cov.sigma + cov.sigma.transpose().eval());
  cov.refresh_sign();
  return cov;
}

ShockCovariance distance_to_covariance(const Eigen::MatrixXd& distances,
                                       const Eigen::VectorXd& variances,
                                       const DistanceOptions& opts) {
  const Eigen::Index n = distances.rows();
  if (distances.cols() != n || variances.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "distances/variances dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (variances(i) <= 0.0)
      throw Error(ErrorCode::InvalidArgument, "variances must be positive");
    if (distances(i, i) != 0.0)
      throw Error(ErrorCode::OutOfRangeDistance, "distance diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (distances(i, j) < 0.0 || distances(i, j) > 1.0)
        throw Error(ErrorCode::OutOfRangeDistance, "distances must lie in [0,1]");
      if (std::abs(distances(i, j) - distances(j, i)) > 1e-12)
        throw Error(ErrorCode::OutOfRangeDistance, "distance matrix must be symmetric");
    }
  }

  const auto rho = opts.correlation ? opts.correlation
                                    : [](double d) { return 1.0 - 2.0 * d; };
  ShockCovariance cov;
  cov.provenance = Provenance::distance;
  cov.sigma.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cov.sigma(i, i) = variances(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = rho(distances(i, j));
      const double s = r * std::sqrt(variances(i) * variances(j));
      cov.sigma(i, j) = s;
      cov.sigma(j, i) = s;
    }
  }
  cov.too_few_obs = Eigen::MatrixXi::Zero(n, n);
  if (opts.project_psd) cov.psd_adjustment = linalg::nearest_psd_in_place(cov.sigma);
  cov.refresh_sign();
  return cov;
}

}  // namespace netrisk::shockcov
