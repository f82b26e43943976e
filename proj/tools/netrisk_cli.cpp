// Command-line front end: every pipeline stage as a subcommand over CSV/JSON
// files, with a master seed for end-to-end determinism.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "netrisk/calib.hpp"
#include "netrisk/csv.hpp"
#include "netrisk/error.hpp"
#include "netrisk/idio_gate.hpp"
#include "netrisk/io_tables.hpp"
#include "netrisk/latent_circle.hpp"
#include "netrisk/netsim.hpp"
#include "netrisk/parallel.hpp"
#include "netrisk/portfolio.hpp"
#include "netrisk/riskdecomp.hpp"
#include "netrisk/shock_cov.hpp"
#include "netrisk/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace netrisk;

namespace {

struct Meta {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string line() const { return csv::meta_line(seed, config_hash); }
};

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_json(const std::string& path, const Meta& meta, json body) {
  json out;
  out["meta"] = {{"tool", std::string("netrisk ") + kVersion},
                 {"seed", meta.seed},
                 {"config_hash", meta.config_hash}};
  for (auto& [k, v] : body.items()) out[k] = v;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << out.dump(2) << "\n";
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// ---------------------------------------------------------------- simulate

netsim::SimulationInputs parse_sim_config(const json& cfg, std::uint64_t seed) {
  netsim::SimulationInputs in;
  const Eigen::Index n = cfg.at("n").get<Eigen::Index>();
  in.horizon = cfg.at("horizon").get<int>();
  in.seed = seed;

  const auto& eco = cfg.at("economy");
  in.config.gamma_u = eco.at("gamma_u").get<double>();
  in.config.gamma_d = eco.at("gamma_d").get<double>();
  in.config.beta_u = eco.at("beta_u").get<double>();
  in.config.beta_d = eco.at("beta_d").get<double>();
  in.config.sigma_a = eco.at("sigma_a").get<double>();
  in.config.sigma_g = eco.at("sigma_g").get<double>();
  in.config.beta_discount = eco.at("beta_discount").get<double>();
  in.config.gamma_risk = eco.at("gamma_risk").get<double>();

  const auto& net = cfg.at("network");
  if (net.at("type") == "random") {
    const std::uint64_t net_seed = net.value("seed", 7);
    in.w_up = netsim::random_network(n, net.at("partners").get<int>(),
                                     net.at("row_sum").get<double>(), net_seed);
    in.w_down = netsim::random_network(n, net.at("partners").get<int>(),
                                       net.at("row_sum").get<double>(), net_seed + 1);
  } else if (net.at("type") == "files") {
    in.w_up = csv::read_matrix(net.at("w_up").get<std::string>()).values;
    in.w_down = csv::read_matrix(net.at("w_down").get<std::string>()).values;
  } else {
    throw Error(ErrorCode::InvalidArgument, "network.type must be 'random' or 'files'");
  }

  const auto& lat = cfg.at("latent");
  in.technology.theta = Eigen::VectorXd::Zero(n);
  in.technology.rho = lat.at("rho").get<double>();
  in.technology.sigma_theta = lat.at("sigma_theta").get<double>();
  in.technology.space = latent::Space::technology;
  in.product = in.technology;
  in.product.space = latent::Space::product;

  const auto& par = cfg.at("params");
  in.params = netsim::FirmShockParams::constant(n, par.at("k").get<double>(),
                                                par.at("x").get<double>());
  in.distance_mode = cfg.value("distance_mode", std::string("unwrapped")) == "wrapped"
                         ? latent::DistanceMode::wrapped
                         : latent::DistanceMode::unwrapped;
  in.substitutability_floor = cfg.value("substitutability_floor", -30.0);
  return in;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
  const json cfg = load_json(config_path);
  Meta meta{seed, csv::fnv1a(cfg.dump())};
  const auto inputs = parse_sim_config(cfg, seed);
  const auto result = netsim::simulate_economy(inputs);

  {
    csv::Writer w(out_path(out_dir, "factors.csv"), meta.line());
    w.header({"time", "w_u", "w_d", "a", "g", "consumption_growth", "log_sdf"});
    for (int t = 0; t < inputs.horizon; ++t)
      w.row({std::to_string(t), csv::format_double(result.factor_u(t)),
             csv::format_double(result.factor_d(t)), csv::format_double(result.agg_a(t)),
             csv::format_double(result.agg_g(t)),
             csv::format_double(result.consumption_growth(t)),
             csv::format_double(result.sdf(t))});
    w.close();
  }
  {
    csv::Writer w(out_path(out_dir, "firm_growth.csv"), meta.line());
    std::vector<std::string> head{"firm"};
    for (int t = 0; t < inputs.horizon; ++t) head.push_back("t" + std::to_string(t));
    w.header(head);
    for (Eigen::Index i = 0; i < result.firm_growth.rows(); ++i) {
      std::vector<std::string> cells{std::to_string(i)};
      for (int t = 0; t < inputs.horizon; ++t)
        cells.push_back(csv::format_double(result.firm_growth(i, t)));
      w.row(cells);
    }
    w.close();
  }
  const auto bounds_u = netsim::graph_bounds(inputs.w_up);
  const auto bounds_d = netsim::graph_bounds(inputs.w_down);
  const auto diag = netsim::diagnostics(result, bounds_u, bounds_d);
  json d;
  d["bounds"] = {{"up", {{"max_degree", bounds_u.max_degree},
                         {"max_dependency", bounds_u.max_dependency},
                         {"degree_ratio", bounds_u.degree_ratio},
                         {"dependency_ratio", bounds_u.dependency_ratio}}},
                 {"down", {{"max_degree", bounds_d.max_degree},
                           {"max_dependency", bounds_d.max_dependency},
                           {"degree_ratio", bounds_d.degree_ratio},
                           {"dependency_ratio", bounds_d.dependency_ratio}}}};
  auto cheb = [](const std::vector<netsim::ChebyshevCheck>& cs) {
    json arr = json::array();
    for (const auto& c : cs)
      arr.push_back({{"k", c.k}, {"threshold", c.threshold}, {"empirical", c.empirical},
                     {"bound", c.bound}});
    return arr;
  };
  d["clt"] = {{"up", {{"ks_stat", diag.ks_stat_u}, {"ks_pvalue", diag.ks_pvalue_u}}},
              {"down", {{"ks_stat", diag.ks_stat_d}, {"ks_pvalue", diag.ks_pvalue_d}}}};
  d["chebyshev"] = {{"up", cheb(diag.chebyshev_u)}, {"down", cheb(diag.chebyshev_d)}};
  d["concentration"] = {{"up", {{"var", diag.var_u}, {"proof_bound", diag.proof_bound_u},
                                {"stated_bound", diag.stated_bound_u}}},
                        {"down", {{"var", diag.var_d}, {"proof_bound", diag.proof_bound_d},
                                  {"stated_bound", diag.stated_bound_d}}}};
  write_json(out_path(out_dir, "diagnostics.json"), meta, d);
  std::cout << "simulate: n=" << inputs.w_up.rows() << " T=" << inputs.horizon
            << " mean(W_u)=" << result.factor_u.mean() << " mean(W_d)=" << result.factor_d.mean()
            << "\n";
  return 0;
}

// ------------------------------------------------------------ build-network

int cmd_build_network(const std::string& make_path, const std::string& use_path,
                      const std::string& totals_path, const std::string& out_dir,
                      bool cost_share, const std::string& period) {
  std::vector<std::string> dropped;
  auto tables = io_tables::load_make_use_csv(make_path, use_path, totals_path, &dropped);
  for (const auto& d : dropped)
    std::cerr << "warning: dropping unit without totals: " << d << "\n";

  io_tables::BuildOptions opts;
  opts.cost_share_downstream = cost_share;
  auto net = io_tables::build_propagation_matrices(tables, opts);
  net.period = period;
  net.dropped_units = dropped;
  const auto pair = io_tables::leontief_inverse(net);
  const auto stats = io_tables::network_stats(net);

  Meta meta{0, csv::fnv1a(make_path + "|" + use_path + "|" + totals_path)};
  csv::write_matrix(out_path(out_dir, "w_up.csv"), meta.line(), net.labels, net.w_up);
  csv::write_matrix(out_path(out_dir, "w_down.csv"), meta.line(), net.labels, net.w_down);
  csv::write_matrix(out_path(out_dir, "h_up.csv"), meta.line(), net.labels, pair.h_up);
  csv::write_matrix(out_path(out_dir, "h_down.csv"), meta.line(), net.labels, pair.h_down);

  json s;
  s["period"] = period;
  s["dropped_units"] = dropped;
  s["updown_correlation"] = stats.updown_correlation;
  s["units"] = json::array();
  for (std::size_t i = 0; i < net.labels.size(); ++i) {
    const Eigen::Index e = static_cast<Eigen::Index>(i);
    s["units"].push_back({{"unit", net.labels[i]},
                          {"out_degree_up", stats.out_degree_up(e)},
                          {"in_degree_up", stats.in_degree_up(e)},
                          {"out_degree_down", stats.out_degree_down(e)},
                          {"in_degree_down", stats.in_degree_down(e)},
                          {"centrality_up", stats.centrality_up(e)},
                          {"centrality_down", stats.centrality_down(e)}});
  }
  write_json(out_path(out_dir, "stats.json"), meta, s);
  std::cout << "build-network: " << net.labels.size() << " units, updown correlation "
            << stats.updown_correlation << "\n";
  return 0;
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(const std::string& h_path, const std::string& w_path,
                  const std::string& sigma_path, const std::string& direction,
                  const std::string& out_dir, double drop_fraction, int samples,
                  std::uint64_t seed, bool exclude_self, int threads) {
  Eigen::MatrixXd h;
  std::vector<std::string> labels;
  if (!h_path.empty()) {
    const auto lm = csv::read_matrix(h_path);
    h = lm.values;
    labels = lm.labels;
  } else if (!w_path.empty()) {
    const auto lm = csv::read_matrix(w_path);
    h = riskdecomp::first_order_leontief(lm.values);
    labels = lm.labels;
  } else {
    throw Error(ErrorCode::InvalidArgument, "provide --h or --w");
  }
  const auto sm = csv::read_matrix(sigma_path);
  shockcov::ShockCovariance sigma;
  sigma.sigma = sm.values;
  sigma.units = sm.labels;
  sigma.refresh_sign();

  const auto dir = direction == "down" ? riskdecomp::Direction::down : riskdecomp::Direction::up;
  riskdecomp::DecomposeOptions opts;
  opts.exclude_self_pairs = exclude_self;
  const auto components =
      drop_fraction > 0.0
          ? riskdecomp::bootstrap_components(h, sigma, dir, drop_fraction, samples, seed, opts,
                                             threads)
          : riskdecomp::decompose_variance(h, sigma, dir, opts);

  Meta meta{seed, csv::fnv1a(h_path + w_path + sigma_path + direction)};
  csv::Writer w(out_path(out_dir, "components.csv"), meta.line());
  w.header({"unit", "direction", "self", "across", "between", "substitutability", "total"});
  for (const auto& c : components)
    w.row({c.unit, riskdecomp::direction_name(c.direction), csv::format_double(c.self),
           csv::format_double(c.across), csv::format_double(c.between),
           csv::format_double(c.substitutability), csv::format_double(c.total)});
  w.close();
  std::cout << "decompose: " << components.size() << " units, direction " << direction << "\n";
  return 0;
}

// --------------------------------------------------------------- fit-spatial

int cmd_fit_spatial(const std::string& panel_path, const std::string& wu_path,
                    const std::string& wd_path, const std::string& out_dir,
                    const std::string& estimator) {
  const auto panel = shockcov::PanelData::from_csv(panel_path);
  io_tables::IoNetwork net;
  const auto wu = csv::read_matrix(wu_path);
  const auto wd = csv::read_matrix(wd_path);
  net.w_up = wu.values;
  net.w_down = wd.values;
  net.labels = wu.labels;

  shockcov::SpatialOptions opts;
  opts.estimator = estimator == "ols" ? shockcov::SpatialEstimator::ols
                                      : shockcov::SpatialEstimator::two_stage;
  const auto fit = shockcov::fit_spatial_panel(panel, net, opts);

  shockcov::PanelData residual_panel;
  for (Eigen::Index i = 0; i < fit.residuals.rows(); ++i)
    for (std::size_t t = 0; t < fit.times.size(); ++t)
      residual_panel.add(panel.units[static_cast<std::size_t>(i)], fit.times[t],
                         fit.residuals(i, static_cast<Eigen::Index>(t)));
  const auto cov = shockcov::estimate_covariance(residual_panel, shockcov::CovMode::spatial);

  Meta meta{0, csv::fnv1a(panel_path + wu_path + wd_path + estimator)};
  csv::write_matrix(out_path(out_dir, "sigma.csv"), meta.line(), panel.units, cov.sigma);
  json prov;
  prov["provenance"] = "spatial";
  prov["estimator"] = estimator == "ols" ? "ols" : "two_stage";
  prov["coefficients"] = {{"phi", fit.phi}, {"beta_u", fit.beta_u}, {"beta_d", fit.beta_d}};
  prov["standard_errors"] = {{"phi", fit.se_phi}, {"beta_u", fit.se_beta_u},
                             {"beta_d", fit.se_beta_d}};
  prov["r2"] = fit.r2;
  prov["periods"] = fit.times;
  write_json(out_path(out_dir, "provenance.json"), meta, prov);
  std::cout << "fit-spatial: phi=" << fit.phi << " beta_u=" << fit.beta_u
            << " beta_d=" << fit.beta_d << " (r2 " << fit.r2 << ")\n";
  return 0;
}

// --------------------------------------------------------------- verify-idio

int cmd_verify_idio(const std::string& config_path, std::uint64_t seed, int threads,
                    const std::string& out_dir, bool dump_f) {
  const json cfg = load_json(config_path);
  idio::ExperimentConfig ec;
  ec.n = cfg.at("n").get<int>();
  ec.iterations = cfg.value("iterations", 1000);
  ec.nu = cfg.value("nu", 0.0);
  ec.seed = seed;
  ec.threads = resolve_threads(threads);
  ec.inverse_gamma_shape = cfg.value("inverse_gamma_shape", 3.0);
  ec.failure_budget = cfg.value("failure_budget", 0.05);
  if (cfg.contains("psi_scale"))
    ec.psi = cfg.at("psi_scale").get<double>() * Eigen::MatrixXd::Identity(ec.n, ec.n);
  if (cfg.contains("optimizer")) {
    const auto& o = cfg.at("optimizer");
    ec.optimizer.restarts = o.value("restarts", ec.optimizer.restarts);
    ec.optimizer.max_iterations = o.value("max_iterations", ec.optimizer.max_iterations);
    ec.optimizer.tolerance = o.value("tolerance", ec.optimizer.tolerance);
    ec.optimizer.interior_margin = o.value("interior_margin", ec.optimizer.interior_margin);
    ec.optimizer.memory = o.value("memory", ec.optimizer.memory);
  }

  const auto report = idio::run_experiment(ec);
  Meta meta{seed, csv::fnv1a(cfg.dump())};
  json r;
  r["n"] = ec.n;
  r["iterations"] = ec.iterations;
  r["completed"] = report.completed;
  r["failures"] = report.failures;
  r["p_value"] = report.p_value;
  r["t_stats"] = json::array();
  for (int i = 0; i < ec.n; ++i) {
    json row = json::array();
    for (int j = 0; j < ec.n; ++j) row.push_back(report.t_stats(i, j));
    r["t_stats"].push_back(row);
  }
  r["optimizer"] = {{"restarts", ec.optimizer.restarts},
                    {"max_iterations", ec.optimizer.max_iterations},
                    {"tolerance", ec.optimizer.tolerance},
                    {"interior_margin", ec.optimizer.interior_margin},
                    {"memory", ec.optimizer.memory},
                    {"kind", "projected L-BFGS with box projection and spectral-radius rejection"}};
  write_json(out_path(out_dir, "report.json"), meta, r);
  if (dump_f) {
    csv::Writer w(out_path(out_dir, "f_values.csv"), meta.line());
    w.header({"iteration", "f_wishart", "f_diagonal"});
    for (std::size_t s = 0; s < report.f_wishart.size(); ++s)
      w.row({std::to_string(s), csv::format_double(report.f_wishart[s]),
             csv::format_double(report.f_diagonal[s])});
    w.close();
  }
  std::cout << "verify-idio: n=" << ec.n << " p=" << report.p_value
            << " failures=" << report.failures << "\n";
  return 0;
}

// ----------------------------------------------------------------- calibrate

int cmd_calibrate(const std::string& targets_path, const std::string& out_dir) {
  const auto t = csv::read_table(targets_path);
  const int c_firm = t.require_column("firm");
  const int c_dir = t.require_column("direction");
  const int c_var = t.require_column("var_target");
  const int c_omega = t.require_column("omega");
  const int c_sbar = t.require_column("s_bar");

  Meta meta{0, csv::fnv1a(targets_path)};
  csv::Writer w(out_path(out_dir, "calibrations.csv"), meta.line());
  w.header({"firm", "direction", "k", "x", "s_bar", "var_target", "omega", "flags"});
  int solved = 0;
  for (const auto& row : t.rows) {
    auto cal = calib::solve_firm_params(
        csv::parse_double(row[static_cast<std::size_t>(c_var)]),
        csv::parse_double(row[static_cast<std::size_t>(c_omega)]),
        csv::parse_double(row[static_cast<std::size_t>(c_sbar)]));
    cal.firm = row[static_cast<std::size_t>(c_firm)];
    cal.direction = row[static_cast<std::size_t>(c_dir)] == "down" ? riskdecomp::Direction::down
                                                                   : riskdecomp::Direction::up;
    std::string flags;
    if (cal.degenerate_k) flags += "degenerate_k;";
    if (cal.high_p_branch) flags += "high_p_branch;";
    w.row({cal.firm, riskdecomp::direction_name(cal.direction), csv::format_double(cal.k),
           csv::format_double(cal.x), csv::format_double(cal.s_bar),
           csv::format_double(cal.var_target), csv::format_double(cal.omega), flags});
    ++solved;
  }
  w.close();
  std::cout << "calibrate: " << solved << " firm-direction rows\n";
  return 0;
}

// ------------------------------------------------------------------- factors

std::vector<calib::FirmCalibration> load_calibrations(const std::string& path) {
  const auto t = csv::read_table(path);
  const int c_firm = t.require_column("firm");
  const int c_dir = t.require_column("direction");
  const int c_k = t.require_column("k");
  const int c_x = t.require_column("x");
  std::vector<calib::FirmCalibration> cals;
  for (const auto& row : t.rows) {
    calib::FirmCalibration c;
    c.firm = row[static_cast<std::size_t>(c_firm)];
    c.direction = row[static_cast<std::size_t>(c_dir)] == "down" ? riskdecomp::Direction::down
                                                                 : riskdecomp::Direction::up;
    c.k = csv::parse_double(row[static_cast<std::size_t>(c_k)]);
    c.x = csv::parse_double(row[static_cast<std::size_t>(c_x)]);
    cals.push_back(c);
  }
  return cals;
}

int cmd_factors(const std::string& subst_path, const std::string& calib_path,
                const std::string& out_dir) {
  const auto t = csv::read_table(subst_path);
  const int c_firm = t.require_column("firm");
  const int c_dir = t.require_column("direction");
  const int c_time = t.require_column("time");
  const int c_value = t.require_column("value");
  shockcov::PanelData up, down;
  for (const auto& row : t.rows) {
    auto& panel = row[static_cast<std::size_t>(c_dir)] == "down" ? down : up;
    panel.add(row[static_cast<std::size_t>(c_firm)],
              static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_time)])),
              csv::parse_double(row[static_cast<std::size_t>(c_value)]));
  }
  const auto series = calib::propagation_factors(up, down, load_calibrations(calib_path));
  Meta meta{0, csv::fnv1a(subst_path + calib_path)};
  csv::Writer w(out_path(out_dir, "factors.csv"), meta.line());
  w.header({"time", "w_u", "w_d"});
  for (std::size_t i = 0; i < series.times.size(); ++i)
    w.row({std::to_string(series.times[i]),
           csv::format_double(series.w_hat_u(static_cast<Eigen::Index>(i))),
           csv::format_double(series.w_hat_d(static_cast<Eigen::Index>(i)))});
  w.close();
  std::cout << "factors: " << series.times.size() << " periods\n";
  return 0;
}

// ----------------------------------------------------------- sort-portfolios

int cmd_sort_portfolios(const std::string& returns_path, const std::string& factors_path,
                        const std::string& out_dir, int window, int bins,
                        const std::string& sort_factor, std::uint64_t seed, int n_boot) {
  const auto returns = portfolio::ReturnPanel::from_csv(returns_path);
  const auto factors = portfolio::FactorPanel::from_csv(factors_path);
  int sort_idx = 0;
  for (std::size_t i = 0; i < factors.names.size(); ++i)
    if (factors.names[i] == sort_factor) sort_idx = static_cast<int>(i);

  const auto betas = portfolio::rolling_betas(returns, factors, window);
  const auto table = portfolio::sort_and_spread(betas, returns, sort_idx, bins);
  const double p_eq = portfolio::mr_test(table.yearly_equal, n_boot, seed);
  const double p_vw = portfolio::mr_test(table.yearly_value, n_boot, seed + 1);

  Meta meta{seed, csv::fnv1a(returns_path + factors_path + sort_factor)};
  {
    csv::Writer w(out_path(out_dir, "betas.csv"), meta.line());
    std::vector<std::string> head{"asset", "time"};
    for (const auto& n : betas.factor_names) head.push_back("beta_" + n);
    w.header(head);
    for (const auto& row : betas.rows) {
      std::vector<std::string> cells{row.asset, std::to_string(row.time)};
      for (Eigen::Index j = 0; j < row.beta.size(); ++j)
        cells.push_back(csv::format_double(row.beta(j)));
      w.row(cells);
    }
    w.close();
  }
  {
    csv::Writer w(out_path(out_dir, "portfolios.csv"), meta.line());
    std::vector<std::string> head{"year"};
    for (int b = 1; b <= bins; ++b) head.push_back("eq_bin" + std::to_string(b));
    for (int b = 1; b <= bins; ++b) head.push_back("vw_bin" + std::to_string(b));
    w.header(head);
    for (std::size_t r = 0; r < table.years.size(); ++r) {
      std::vector<std::string> cells{std::to_string(table.years[r])};
      for (int b = 0; b < bins; ++b)
        cells.push_back(csv::format_double(table.yearly_equal(static_cast<Eigen::Index>(r), b)));
      for (int b = 0; b < bins; ++b)
        cells.push_back(csv::format_double(table.yearly_value(static_cast<Eigen::Index>(r), b)));
      w.row(cells);
    }
    w.close();
  }
  json s;
  s["sort_factor"] = factors.names[static_cast<std::size_t>(sort_idx)];
  s["bins"] = bins;
  s["window"] = window;
  s["bin_means_equal"] = to_std(table.mean_equal);
  s["bin_means_value"] = to_std(table.mean_value);
  s["spread_equal"] = table.spread_equal;
  s["spread_value"] = table.spread_value;
  s["t_equal"] = table.t_equal;
  s["t_value"] = table.t_value;
  s["t_defined"] = table.t_defined;
  s["mr_pvalue_equal"] = p_eq;
  s["mr_pvalue_value"] = p_vw;
  write_json(out_path(out_dir, "spread.json"), meta, s);
  std::cout << "sort-portfolios: spread(eq)=" << table.spread_equal << " t=" << table.t_equal
            << " MR p=" << p_eq << "\n";
  return 0;
}

// ------------------------------------------------------------------ diagnose

int cmd_diagnose(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                 int replications, std::vector<int> sizes) {
  const json cfg = load_json(config_path);
  Meta meta{seed, csv::fnv1a(cfg.dump())};

  json report;
  report["sizes"] = json::array();
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const int n = sizes[si];
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 0.5);
    const auto check = netsim::factor_normality_check(p, replications, seed + si);
    report["sizes"].push_back({{"n", n},
                               {"replications", replications},
                               {"ks_stat", check.statistic},
                               {"ks_pvalue", check.pvalue}});
  }

  const auto inputs = parse_sim_config(cfg, seed);
  const auto result = netsim::simulate_economy(inputs);
  const auto diag = netsim::diagnostics(result, netsim::graph_bounds(inputs.w_up),
                                        netsim::graph_bounds(inputs.w_down));
  report["economy"] = {{"ks_stat_u", diag.ks_stat_u},
                       {"ks_pvalue_u", diag.ks_pvalue_u},
                       {"ks_stat_d", diag.ks_stat_d},
                       {"ks_pvalue_d", diag.ks_pvalue_d},
                       {"var_u", diag.var_u},
                       {"proof_bound_u", diag.proof_bound_u},
                       {"var_d", diag.var_d},
                       {"proof_bound_d", diag.proof_bound_d}};
  write_json(out_path(out_dir, "diagnostics.json"), meta, report);
  std::cout << "diagnose: " << sizes.size() << " size points, economy KS(u) p=" << diag.ks_pvalue_u
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"input-output network risk toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("netrisk ") + kVersion);

  std::string make_path, use_path, totals_path, out_dir = "out", period = "0";
  bool cost_share = false;
  auto* build = app.add_subcommand("build-network", "propagation matrices from make/use tables");
  build->add_option("--make", make_path)->required();
  build->add_option("--use", use_path)->required();
  build->add_option("--totals", totals_path)->required();
  build->add_option("-o,--out", out_dir);
  build->add_option("--period", period);
  build->add_flag("--cost-share", cost_share, "normalize downstream weights by input costs");

  std::string h_path, w_path, sigma_path, direction = "up";
  double drop_fraction = 0.0;
  int samples = 1000;
  std::uint64_t seed = 0;
  bool exclude_self = false;
  int threads = 1;
  auto* dec = app.add_subcommand("decompose", "variance components from H and Sigma");
  dec->add_option("--h", h_path, "Leontief inverse CSV");
  dec->add_option("--w", w_path, "propagation matrix CSV (first-order I+W mode)");
  dec->add_option("--sigma", sigma_path)->required();
  dec->add_option("--direction", direction)->check(CLI::IsMember({"up", "down"}));
  dec->add_option("-o,--out", out_dir);
  dec->add_option("--drop-fraction", drop_fraction);
  dec->add_option("--samples", samples);
  auto* dec_seed = dec->add_option("--seed", seed);
  dec->add_flag("--exclude-self-pairs", exclude_self);
  dec->add_option("--threads", threads);

  std::string panel_path, wu_path, wd_path, estimator = "2sls";
  auto* fitsp = app.add_subcommand("fit-spatial", "spatial panel fit and residual covariance");
  fitsp->add_option("--panel", panel_path)->required();
  fitsp->add_option("--w-up", wu_path)->required();
  fitsp->add_option("--w-down", wd_path)->required();
  fitsp->add_option("-o,--out", out_dir);
  fitsp->add_option("--estimator", estimator)->check(CLI::IsMember({"2sls", "ols"}));

  std::string config_path;
  auto* sim = app.add_subcommand("simulate", "dynamic economy simulation");
  sim->add_option("--config", config_path)->required();
  auto* sim_seed = sim->add_option("--seed", seed);
  sim->add_option("-o,--out", out_dir);

  bool dump_f = false;
  auto* idio_cmd = app.add_subcommand("verify-idio", "idiosyncratic-shock falsification experiment");
  idio_cmd->add_option("--config", config_path)->required();
  auto* idio_seed = idio_cmd->add_option("--seed", seed);
  idio_cmd->add_option("--threads", threads)->envname("NETRISK_THREADS");
  idio_cmd->add_option("-o,--out", out_dir);
  idio_cmd->add_flag("--dump-f", dump_f, "write per-iteration objective values");

  std::string targets_path;
  auto* cal = app.add_subcommand("calibrate", "solve firm sigmoid parameters from targets");
  cal->add_option("--targets", targets_path)->required();
  cal->add_option("-o,--out", out_dir);

  std::string subst_path, calib_path;
  auto* fac = app.add_subcommand("factors", "propagation factors from substitutability panel");
  fac->add_option("--subst", subst_path)->required();
  fac->add_option("--calibrations", calib_path)->required();
  fac->add_option("-o,--out", out_dir);

  std::string returns_path, factors_path, sort_factor = "w_u";
  int window = 15, bins = 5, n_boot = 2000;
  auto* sort = app.add_subcommand("sort-portfolios", "rolling betas, quintile sorts, MR test");
  sort->add_option("--returns", returns_path)->required();
  sort->add_option("--factors", factors_path)->required();
  sort->add_option("-o,--out", out_dir);
  sort->add_option("--window", window);
  sort->add_option("--bins", bins);
  sort->add_option("--sort-factor", sort_factor);
  auto* sort_seed = sort->add_option("--seed", seed);
  sort->add_option("--boot", n_boot);

  int replications = 10000;
  std::vector<int> sizes{10, 100, 1000};
  auto* diag = app.add_subcommand("diagnose", "asymptotic diagnostics across sizes");
  diag->add_option("--config", config_path)->required();
  auto* diag_seed = diag->add_option("--seed", seed);
  diag->add_option("-o,--out", out_dir);
  diag->add_option("--replications", replications);
  diag->add_option("--sizes", sizes)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (build->parsed())
      return cmd_build_network(make_path, use_path, totals_path, out_dir, cost_share, period);
    if (dec->parsed()) {
      if (drop_fraction > 0.0 && dec_seed->count() == 0)
        throw Error(ErrorCode::InvalidArgument, "--seed is required for stochastic subcommands");
      return cmd_decompose(h_path, w_path, sigma_path, direction, out_dir, drop_fraction, samples,
                           seed, exclude_self, threads);
    }
    if (fitsp->parsed()) return cmd_fit_spatial(panel_path, wu_path, wd_path, out_dir, estimator);
    if (sim->parsed()) {
      if (sim_seed->count() == 0)
        throw Error(ErrorCode::InvalidArgument, "--seed is required for stochastic subcommands");
      return cmd_simulate(config_path, seed, out_dir);
    }
    if (idio_cmd->parsed()) {
      if (idio_seed->count() == 0)
        throw Error(ErrorCode::InvalidArgument, "--seed is required for stochastic subcommands");
      return cmd_verify_idio(config_path, seed, threads, out_dir, dump_f);
    }
    if (cal->parsed()) return cmd_calibrate(targets_path, out_dir);
    if (fac->parsed()) return cmd_factors(subst_path, calib_path, out_dir);
    if (sort->parsed()) {
      if (sort_seed->count() == 0)
        throw Error(ErrorCode::InvalidArgument, "--seed is required for stochastic subcommands");
      return cmd_sort_portfolios(returns_path, factors_path, out_dir, window, bins, sort_factor,
                                 seed, n_boot);
    }
    if (diag->parsed()) {
      if (diag_seed->count() == 0)
        throw Error(ErrorCode::InvalidArgument, "--seed is required for stochastic subcommands");
      return cmd_diagnose(config_path, seed, out_dir, replications, sizes);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
