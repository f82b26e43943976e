#include "netrisk/io_tables.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "netrisk/csv.hpp"
#include "netrisk/error.hpp"
#include "netrisk/linalg.hpp"

namespace netrisk::io_tables {

void MakeUseTables::validate() const {
  const Eigen::Index n = make.rows();
  if (make.cols() != n || use.rows() != n || use.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "make/use tables must be square and consistent");
  if (output.size() != n || scrap.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "output/scrap length must match table dimension");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(ErrorCode::ShapeMismatch, "label count must match table dimension");
  if (make.minCoeff() < 0.0 || use.minCoeff() < 0.0)
    throw Error(ErrorCode::NegativeEntry, "make/use entries must be nonnegative");
  if (output.minCoeff() < 0.0 || scrap.minCoeff() < 0.0)
    throw Error(ErrorCode::NegativeEntry, "output/scrap must be nonnegative");
  for (Eigen::Index i = 0; i < n; ++i)
    if (scrap(i) > output(i))
      throw Error(ErrorCode::InvalidArgument, "scrap exceeds output for unit " + std::to_string(i));
}

IoNetwork build_propagation_matrices(const MakeUseTables& tables, const BuildOptions& opts) {
  tables.validate();
  const Eigen::Index n = tables.make.rows();

  const Eigen::VectorXd commodity_totals = tables.make.colwise().sum();
  for (Eigen::Index j = 0; j < n; ++j)
    if (commodity_totals(j) <= 0.0)
      throw Error(ErrorCode::ZeroTotal, "commodity " + std::to_string(j) + " has zero total output");
  for (Eigen::Index i = 0; i < n; ++i)
    if (tables.output(i) <= 0.0)
      throw Error(ErrorCode::ZeroTotal, "industry " + std::to_string(i) + " has zero output");

  // Non-scrap ratio rescales market-share columns before forming requirements.
  Eigen::VectorXd theta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    theta(i) = (tables.output(i) - tables.scrap(i)) / tables.output(i);
    if (theta(i) <= 0.0)
      throw Error(ErrorCode::ZeroTotal, "unit " + std::to_string(i) + " produces only scrap");
  }

  Eigen::MatrixXd mktshare(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      mktshare(i, j) = tables.make(i, j) / (commodity_totals(j) * theta(j));

  Eigen::MatrixXd inputreq(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      inputreq(i, j) = tables.use(i, j) / tables.output(j);

  // W_ij = sales_{i->j} / sales_j; downstream is the transpose, upstream the
  // sales-share rescaling (W o R)_ij = sales_{i->j} / sales_i.
  const Eigen::MatrixXd w = mktshare * inputreq;

  IoNetwork net;
  net.labels = tables.labels;
  net.w_down = w.transpose();
  if (opts.cost_share_downstream) {
    const Eigen::VectorXd costs = tables.use.colwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (costs(i) <= 0.0)
        throw Error(ErrorCode::ZeroTotal, "industry " + std::to_string(i) + " has zero input costs");
      net.w_down.row(i) *= tables.output(i) / costs(i);
    }
  }
  net.w_up.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      net.w_up(i, j) = w(i, j) * (tables.output(j) / tables.output(i));
  return net;
}

namespace {

Eigen::MatrixXd invert_leontief(const Eigen::MatrixXd& w, double margin, const char* which) {
  const Eigen::Index n = w.rows();
  if (w.minCoeff() < 0.0) throw Error(ErrorCode::NegativeEntry, "propagation weights must be nonnegative");
  const double radius = linalg::spectral_radius(w);
  if (radius >= 1.0 - margin)
    throw Error(ErrorCode::UnstableNetwork,
                std::string(which) + " spectral radius " + std::to_string(radius) +
                    " >= " + std::to_string(1.0 - margin));
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - w;
  const Eigen::MatrixXd h = lhs.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  const double residual = (lhs * h - Eigen::MatrixXd::Identity(n, n)).norm() / static_cast<double>(n);
  if (residual > 1e-10)
    throw Error(ErrorCode::UnstableNetwork,
                std::string(which) + " Leontief residual " + std::to_string(residual));
  return h;
}

}  // namespace

LeontiefPair leontief_inverse(const IoNetwork& net, double stability_margin) {
  if (net.w_up.rows() != net.w_up.cols() || net.w_down.rows() != net.w_down.cols() ||
      net.w_up.rows() != net.w_down.rows())
    throw Error(ErrorCode::ShapeMismatch, "network matrices must be square and consistent");
  LeontiefPair pair;
  pair.h_up = invert_leontief(net.w_up, stability_margin, "upstream");
  pair.h_down = invert_leontief(net.w_down, stability_margin, "downstream");
  return pair;
}

NetworkStats network_stats(const IoNetwork& net, const StatsOptions& opts) {
  const Eigen::Index n = net.w_up.rows();
  if (n != net.w_up.cols() || net.w_down.rows() != n || net.w_down.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "network matrices must be square and consistent");
  NetworkStats stats;
  stats.out_degree_up = net.w_up.rowwise().sum();
  stats.in_degree_up = net.w_up.colwise().sum().transpose();
  stats.out_degree_down = net.w_down.rowwise().sum();
  stats.in_degree_down = net.w_down.colwise().sum().transpose();

  // Centrality from incoming edges: left Perron vector of the weight matrix.
  auto centrality = [&](const Eigen::MatrixXd& w, int* iterations) {
    const auto r = linalg::perron_vector(w.transpose(), opts.max_iterations, opts.tol);
    *iterations = r.iterations;
    if (!r.converged && w.cwiseAbs().maxCoeff() > 0.0)
      throw Error(ErrorCode::NonConvergence,
                  "centrality power iteration did not converge in " +
                      std::to_string(opts.max_iterations) + " iterations");
    return r.vector;
  };
  stats.centrality_up = centrality(net.w_up, &stats.centrality_iterations_up);
  stats.centrality_down = centrality(net.w_down, &stats.centrality_iterations_down);

  if (n > 1) {
    const Eigen::Index m = n * (n - 1);
    Eigen::VectorXd up(m), down(m);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) {
          up(idx) = net.w_up(i, j);
          down(idx) = net.w_down(i, j);
          ++idx;
        }
    stats.updown_correlation = linalg::sample_correlation(up, down);
  }
  return stats;
}

MakeUseTables load_make_use_csv(const std::string& make_path, const std::string& use_path,
                                const std::string& totals_path, std::vector<std::string>* dropped) {
  const csv::Table make_t = csv::read_table(make_path);
  const csv::Table use_t = csv::read_table(use_path);
  const csv::Table totals_t = csv::read_table(totals_path);

  const int t_id = totals_t.require_column("industry_id");
  const int t_out = totals_t.require_column("output");
  const int t_scrap = totals_t.require_column("scrap");

  std::map<std::string, std::pair<double, double>> totals;
  std::vector<std::string> order;
  for (const auto& row : totals_t.rows) {
    const std::string& id = row[static_cast<std::size_t>(t_id)];
    if (totals.emplace(id, std::make_pair(csv::parse_double(row[static_cast<std::size_t>(t_out)]),
                                          csv::parse_double(row[static_cast<std::size_t>(t_scrap)])))
            .second)
      order.push_back(id);
  }

  // Units referenced in make/use but absent from totals are dropped.
  std::set<std::string> seen, missing;
  auto note = [&](const std::string& id) {
    seen.insert(id);
    if (!totals.count(id)) missing.insert(id);
  };
  const int m_i = make_t.require_column("industry_id");
  const int m_c = make_t.require_column("commodity_id");
  const int m_v = make_t.require_column("value");
  for (const auto& row : make_t.rows) {
    note(row[static_cast<std::size_t>(m_i)]);
    note(row[static_cast<std::size_t>(m_c)]);
  }
  const int u_c = use_t.require_column("commodity_id");
  const int u_i = use_t.require_column("industry_id");
  const int u_v = use_t.require_column("value");
  for (const auto& row : use_t.rows) {
    note(row[static_cast<std::size_t>(u_c)]);
    note(row[static_cast<std::size_t>(u_i)]);
  }
  if (dropped) dropped->assign(missing.begin(), missing.end());

  std::map<std::string, Eigen::Index> index;
  MakeUseTables tables;
  for (const auto& id : order) {
    index.emplace(id, static_cast<Eigen::Index>(tables.labels.size()));
    tables.labels.push_back(id);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(tables.labels.size());
  if (n == 0) throw Error(ErrorCode::IoFailure, "totals file lists no industries");

  tables.make = Eigen::MatrixXd::Zero(n, n);
  tables.use = Eigen::MatrixXd::Zero(n, n);
  tables.output.resize(n);
  tables.scrap.resize(n);
  for (const auto& id : order) {
    tables.output(index[id]) = totals[id].first;
    tables.scrap(index[id]) = totals[id].second;
  }
  for (const auto& row : make_t.rows) {
    const auto i = index.find(row[static_cast<std::size_t>(m_i)]);
    const auto j = index.find(row[static_cast<std::size_t>(m_c)]);
    if (i == index.end() || j == index.end()) continue;
    tables.make(i->second, j->second) += csv::parse_double(row[static_cast<std::size_t>(m_v)]);
  }
  for (const auto& row : use_t.rows) {
    const auto i = index.find(row[static_cast<std::size_t>(u_c)]);
    const auto j = index.find(row[static_cast<std::size_t>(u_i)]);
    if (i == index.end() || j == index.end()) continue;
    tables.use(i->second, j->second) += csv::parse_double(row[static_cast<std::size_t>(u_v)]);
  }
  return tables;
}

}  // namespace netrisk::io_tables
