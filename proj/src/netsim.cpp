#include "netrisk/netsim.hpp"

#include <cmath>

#include "netrisk/error.hpp"
#include "netrisk/linalg.hpp"

namespace netrisk::netsim {

FirmShockParams FirmShockParams::constant(Eigen::Index n, double k, double x) {
  FirmShockParams p;
  p.k_up = Eigen::VectorXd::Constant(n, k);
  p.x_up = Eigen::VectorXd::Constant(n, x);
  p.k_down = Eigen::VectorXd::Constant(n, k);
  p.x_down = Eigen::VectorXd::Constant(n, x);
  return p;
}

void FirmShockParams::validate(Eigen::Index n) const {
  if (k_up.size() != n || x_up.size() != n || k_down.size() != n || x_down.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "shock parameter vectors must have one entry per firm");
  if (k_up.minCoeff() < 0.0 || k_down.minCoeff() < 0.0)
    throw Error(ErrorCode::InvalidArgument, "steepness k must be nonnegative");
}

void EconomyConfig::validate() const {
  if (gamma_u <= 0 || gamma_d <= 0 || beta_u <= 0 || beta_d <= 0)
    throw Error(ErrorCode::InvalidArgument, "loadings must be positive");
  if (sigma_a < 0 || sigma_g < 0)
    throw Error(ErrorCode::InvalidArgument, "shock volatilities must be nonnegative");
  if (!(beta_discount > 0.0 && beta_discount < 1.0))
    throw Error(ErrorCode::InvalidArgument, "discount factor must lie in (0,1)");
  if (gamma_risk < 0.0) throw Error(ErrorCode::InvalidArgument, "risk aversion must be >= 0");
}

GraphBounds graph_bounds(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n) throw Error(ErrorCode::ShapeMismatch, "graph matrix must be square");
  GraphBounds b;
  if (n == 0) return b;
  // In-neighbors of i: {k != i : w_ki > 0}.
  std::vector<std::vector<bool>> in(static_cast<std::size_t>(n), std::vector<bool>(n, false));
  for (Eigen::Index i = 0; i < n; ++i) {
    int deg = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i && w(k, i) > 0.0) {
        in[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = true;
        ++deg;
      }
    }
    b.max_degree = std::max(b.max_degree, deg);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      int shared = 0;
      for (Eigen::Index k = 0; k < n; ++k)
        if (in[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] &&
            in[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)])
          ++shared;
      b.max_dependency = std::max(b.max_dependency, shared);
    }
  }
  b.degree_ratio = static_cast<double>(b.max_degree) / static_cast<double>(n * n);
  b.dependency_ratio = static_cast<double>(b.max_dependency) / static_cast<double>(n);
  return b;
}

Eigen::VectorXd propensity(const Eigen::VectorXd& s, const Eigen::VectorXd& k,
                           const Eigen::VectorXd& x) {
  const Eigen::Index n = s.size();
  if (k.size() != n || x.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "s/k/x dimensions disagree");
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(s(i))) throw Error(ErrorCode::InvalidArgument, "substitutability must be finite");
    p(i) = 1.0 / (1.0 + std::exp(k(i) * (s(i) - x(i))));
  }
  return p;
}

SubstitutabilityResult substitutability(const Eigen::MatrixXd& w, const Eigen::MatrixXd& distances,
                                        double floor_value) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n || distances.rows() != n || distances.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "weights/distances dimensions disagree");
  if ((distances - distances.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::ShapeMismatch, "distances must be symmetric");

  SubstitutabilityResult result;
  result.s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    int partners = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && w(i, j) > 0.0) ++partners;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || w(i, j) <= 0.0) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i || k == j || w(i, k) <= 0.0) continue;
        acc += w(i, j) * w(i, k) * distances(j, k);
      }
    }
    if (partners < 2 || acc <= 0.0) {
      result.s(i) = floor_value;
      result.floored.push_back(static_cast<int>(i));
    } else {
      result.s(i) = std::log(acc);
    }
  }
  return result;
}

SimulationResult simulate_economy(const SimulationInputs& inputs) {
  const Eigen::Index n = inputs.w_up.rows();
  if (inputs.w_up.cols() != n || inputs.w_down.rows() != n || inputs.w_down.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "network matrices must be square and consistent");
  if (inputs.technology.theta.size() != n || inputs.product.theta.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "latent states must have one angle per firm");
  if (inputs.horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  inputs.params.validate(n);
  inputs.config.validate();

  const int T = inputs.horizon;
  SimulationResult r;
  r.eps_u.resize(n, T);
  r.eps_d.resize(n, T);
  r.p_up.resize(n, T);
  r.p_down.resize(n, T);
  r.factor_u.resize(T);
  r.factor_d.resize(T);
  r.firm_growth.resize(n, T);
  r.consumption_growth.resize(T);
  r.agg_a.resize(T);
  r.agg_g.resize(T);

  // Separate streams keep aggregate shocks invariant to n and draw order.
  Rng rng_tech = Rng::stream(inputs.seed, 1);
  Rng rng_prod = Rng::stream(inputs.seed, 2);
  Rng rng_agg = Rng::stream(inputs.seed, 3);
  Rng rng_eps = Rng::stream(inputs.seed, 4);

  latent::LatentCircleState tech = inputs.technology;
  latent::LatentCircleState prod = inputs.product;
  const EconomyConfig& cfg = inputs.config;

  for (int t = 0; t < T; ++t) {
    tech = latent::step_angles(tech, rng_tech);
    prod = latent::step_angles(prod, rng_prod);
    const Eigen::MatrixXd dist_tech = latent::pairwise_distance(tech, inputs.distance_mode);
    const Eigen::MatrixXd dist_prod = latent::pairwise_distance(prod, inputs.distance_mode);

    const Eigen::VectorXd s_u =
        substitutability(inputs.w_up, dist_tech, inputs.substitutability_floor).s;
    const Eigen::VectorXd s_d =
        substitutability(inputs.w_down, dist_prod, inputs.substitutability_floor).s;
    const Eigen::VectorXd p_u = propensity(s_u, inputs.params.k_up, inputs.params.x_up);
    const Eigen::VectorXd p_d = propensity(s_d, inputs.params.k_down, inputs.params.x_down);
    r.p_up.col(t) = p_u;
    r.p_down.col(t) = p_d;

    // Shocks are conditionally independent given propensities; cross-firm
    // correlation enters only through shared latent movements in p.
    int count_u = 0, count_d = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int eu = rng_eps.uniform() < p_u(i) ? 1 : 0;
      const int ed = rng_eps.uniform() < p_d(i) ? 1 : 0;
      r.eps_u(i, t) = eu;
      r.eps_d(i, t) = ed;
      count_u += eu;
      count_d += ed;
    }
    const double a = rng_agg.normal(0.0, cfg.sigma_a);
    const double g = rng_agg.normal(0.0, cfg.sigma_g);
    r.agg_a(t) = a;
    r.agg_g(t) = g;
    r.factor_u(t) = static_cast<double>(count_u) / static_cast<double>(n);
    r.factor_d(t) = static_cast<double>(count_d) / static_cast<double>(n);

    for (Eigen::Index i = 0; i < n; ++i)
      r.firm_growth(i, t) = cfg.gamma_u * a - cfg.beta_u * r.eps_u(i, t) + cfg.gamma_d * g -
                            cfg.beta_d * r.eps_d(i, t);
    r.consumption_growth(t) = cfg.gamma_u * a + cfg.gamma_d * g - cfg.beta_u * r.factor_u(t) -
                              cfg.beta_d * r.factor_d(t);
  }
  r.sdf = log_sdf(r.consumption_growth, cfg);
  return r;
}

Eigen::VectorXd log_sdf(const Eigen::VectorXd& consumption_growth, const EconomyConfig& config) {
  config.validate();
  for (Eigen::Index t = 0; t < consumption_growth.size(); ++t)
    if (!std::isfinite(consumption_growth(t)))
      throw Error(ErrorCode::InvalidArgument, "consumption growth must be finite");
  const double log_beta = std::log(config.beta_discount);
  return Eigen::VectorXd::Constant(consumption_growth.size(), log_beta) -
         config.gamma_risk * consumption_growth;
}

namespace {

void factor_diagnostics(const Eigen::VectorXd& factor, const Eigen::MatrixXd& p,
                        const GraphBounds& bounds, double* ks_stat, double* ks_p,
                        std::vector<ChebyshevCheck>* cheb, double* var_out, double* proof_bound,
                        double* stated_bound) {
  const Eigen::Index T = factor.size();
  const Eigen::Index n = p.rows();
  std::vector<double> standardized;
  standardized.reserve(static_cast<std::size_t>(T));
  Eigen::VectorXd centered(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mu = p.col(t).mean();
    const double var =
        (p.col(t).array() * (1.0 - p.col(t).array())).sum() / static_cast<double>(n * n);
    centered(t) = factor(t) - mu;
    if (var > 0) standardized.push_back(centered(t) / std::sqrt(var));
  }
  *ks_stat = linalg::ks_statistic_normal(standardized);
  *ks_p = linalg::ks_pvalue(*ks_stat, standardized.size());

  const double mbar_over_n = static_cast<double>(bounds.max_dependency) / static_cast<double>(n);
  *proof_bound = 2.0 * mbar_over_n;
  *stated_bound = mbar_over_n;
  *var_out = centered.squaredNorm() / static_cast<double>(T);

  for (const double k : {1.0, 2.0, 4.0}) {
    ChebyshevCheck c;
    c.k = k;
    c.threshold = 2.0 * k * mbar_over_n;
    c.bound = 1.0 / (k * k);
    int hits = 0;
    for (Eigen::Index t = 0; t < T; ++t)
      if (std::abs(centered(t)) >= c.threshold) ++hits;
    c.empirical = static_cast<double>(hits) / static_cast<double>(T);
    cheb->push_back(c);
  }
}

}  // namespace

DiagnosticsReport diagnostics(const SimulationResult& result, const GraphBounds& bounds_up,
                              const GraphBounds& bounds_down) {
  if (result.factor_u.size() == 0)
    throw Error(ErrorCode::InsufficientData, "empty simulation result");
  DiagnosticsReport rep;
  factor_diagnostics(result.factor_u, result.p_up, bounds_up, &rep.ks_stat_u, &rep.ks_pvalue_u,
                     &rep.chebyshev_u, &rep.var_u, &rep.proof_bound_u, &rep.stated_bound_u);
  factor_diagnostics(result.factor_d, result.p_down, bounds_down, &rep.ks_stat_d, &rep.ks_pvalue_d,
                     &rep.chebyshev_d, &rep.var_d, &rep.proof_bound_d, &rep.stated_bound_d);
  return rep;
}

KsCheck factor_normality_check(const Eigen::VectorXd& p, int replications, std::uint64_t seed) {
  const Eigen::Index n = p.size();
  if (n == 0 || replications < 2)
    throw Error(ErrorCode::InsufficientData, "need units and >= 2 replications");
  const double mu = p.mean();
  const double sd = std::sqrt((p.array() * (1.0 - p.array())).sum()) / static_cast<double>(n);
  if (sd <= 0.0) throw Error(ErrorCode::InvalidArgument, "degenerate propensities");
  std::vector<double> standardized(static_cast<std::size_t>(replications));
  for (int r = 0; r < replications; ++r) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (rng.uniform() < p(i)) ++count;
    const double w = static_cast<double>(count) / static_cast<double>(n);
    standardized[static_cast<std::size_t>(r)] = (w - mu) / sd;
  }
  KsCheck check;
  check.statistic = linalg::ks_statistic_normal(standardized);
  check.pvalue = linalg::ks_pvalue(check.statistic, standardized.size());
  return check;
}

Eigen::MatrixXd random_network(Eigen::Index n, int partners, double row_sum, std::uint64_t seed) {
  if (n < 2 || partners < 1 || partners > n - 1)
    throw Error(ErrorCode::InvalidArgument, "need 1 <= partners <= n-1");
  if (!(row_sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "row_sum must be positive");
  Rng rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) pool[static_cast<std::size_t>(j)] = j;
    pool.erase(pool.begin() + i);
    // partial Fisher-Yates for the partner sample
    for (int k = 0; k < partners; ++k) {
      const std::size_t pick =
          static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.uniform_int(pool.size() - k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
    }
    double total = 0.0;
    std::vector<double> raw(static_cast<std::size_t>(partners));
    for (int k = 0; k < partners; ++k) {
      raw[static_cast<std::size_t>(k)] = rng.uniform(0.5, 1.0);
      total += raw[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < partners; ++k)
      w(i, pool[static_cast<std::size_t>(k)]) = row_sum * raw[static_cast<std::size_t>(k)] / total;
  }
  return w;
}

GeResponse ge_response(const Eigen::MatrixXd& w, const Eigen::VectorXd& dz,
                       const Eigen::VectorXd& dG, const GeInputs& ge) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n || dz.size() != n || dG.size() != n || ge.nominal_output.size() != n ||
      ge.beta.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "GE response dimensions disagree");
  const double radius = linalg::spectral_radius(w);
  if (radius >= 1.0)
    throw Error(ErrorCode::UnstableNetwork,
                "spectral radius " + std::to_string(radius) + " >= 1");
  for (Eigen::Index i = 0; i < n; ++i)
    if (ge.nominal_output(i) <= 0.0)
      throw Error(ErrorCode::InvalidArgument, "nominal output must be positive");

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  GeResponse resp;
  resp.dlogy_down = (eye - w).partialPivLu().solve(dz);

  Eigen::MatrixXd lambda(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      lambda(i, j) = ((i == j ? 1.0 : 0.0) - ge.beta(i) / 2.0) / ge.nominal_output(i);
  resp.dlogy_up = (eye - w.transpose()).partialPivLu().solve(lambda * dG);
  return resp;
}

}  // namespace netrisk::netsim
