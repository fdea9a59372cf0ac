#include "ledsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

#include "ledsim/rng.hpp"

namespace ledsim {

namespace {

constexpr int kMaxErdosRenyiAttempts = 100;
constexpr double kRowSumTolerance = 1e-12;

std::vector<std::pair<int, int>> normalized_edges(int n, std::vector<std::pair<int, int>> edges) {
  std::set<std::pair<int, int>> unique;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("edge endpoint out of range");
    if (i == j) throw std::invalid_argument("self-loops are implied by the weight rule, not stored");
    if (i > j) std::swap(i, j);
    if (!unique.insert({i, j}).second) throw std::invalid_argument("duplicate edge");
  }
  return {unique.begin(), unique.end()};
}

Graph ring(int n) {
  std::vector<std::pair<int, int>> edges;
  if (n == 2) edges.emplace_back(0, 1);
  if (n >= 3) {
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  }
  return Graph(n, std::move(edges));
}

Graph grid(int n, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols != n) {
    throw std::invalid_argument("grid requires rows * cols == n with positive dimensions");
  }
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + cols);
    }
  }
  return Graph(n, std::move(edges));
}

Graph complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return Graph(n, std::move(edges));
}

Graph erdos_renyi(int n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("edge probability must lie in [0, 1]");
  const RngStream base = RngStream(seed).purpose(Purpose::kGraph);
  for (int attempt = 0; attempt < kMaxErdosRenyiAttempts; ++attempt) {
    auto engine = base.derive(StreamLabel::kAttempt, static_cast<std::uint64_t>(attempt)).engine();
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (coin(engine)) edges.emplace_back(i, j);
      }
    }
    Graph g(n, std::move(edges));
    if (g.connected()) return g;
  }
  throw std::runtime_error("erdos_renyi graph still disconnected after 100 resamples");
}

}  // namespace

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::kRing: return "ring";
    case GraphKind::kGrid: return "grid";
    case GraphKind::kComplete: return "complete";
    case GraphKind::kErdosRenyi: return "erdos_renyi";
  }
  return "unknown";
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "ring") return GraphKind::kRing;
  if (name == "grid") return GraphKind::kGrid;
  if (name == "complete") return GraphKind::kComplete;
  if (name == "erdos_renyi") return GraphKind::kErdosRenyi;
  throw std::invalid_argument("unknown graph kind '" + name + "'");
}

Graph::Graph(int n_nodes, std::vector<std::pair<int, int>> edges) : n_(n_nodes) {
  if (n_nodes < 1) throw std::invalid_argument("graph needs at least one node");
  edges_ = normalized_edges(n_nodes, std::move(edges));
  degree_.assign(static_cast<std::size_t>(n_nodes), 0);
  for (auto [i, j] : edges_) {
    ++degree_[static_cast<std::size_t>(i)];
    ++degree_[static_cast<std::size_t>(j)];
  }
}

bool Graph::connected() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
  for (auto [i, j] : edges_) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int u : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        ++reached;
        frontier.push(u);
      }
    }
  }
  return reached == n_;
}

Graph build_graph(const GraphSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("graph needs at least one node");
  switch (spec.kind) {
    case GraphKind::kRing: return ring(spec.n);
    case GraphKind::kGrid: return grid(spec.n, spec.rows, spec.cols);
    case GraphKind::kComplete: return complete(spec.n);
    case GraphKind::kErdosRenyi: return erdos_renyi(spec.n, spec.edge_prob, spec.seed);
  }
  throw std::invalid_argument("unknown graph kind");
}

MixingMatrix::MixingMatrix(Matrix w) : w_(std::move(w)) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(w_), Eigen::EigenvaluesOnly);
  spectrum_ = solver.eigenvalues().reverse();
  mixing_rate_ = 0.0;
  for (Eigen::Index i = 1; i < spectrum_.size(); ++i) {
    mixing_rate_ = std::max(mixing_rate_, std::abs(spectrum_(i)));
  }
}

MixingMatrix MixingMatrix::from_dense(Matrix w) {
  if (w.rows() != w.cols() || w.rows() < 1) throw std::invalid_argument("mixing matrix must be square");
  const Eigen::Index n = w.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w(i, j) != w(j, i)) throw std::invalid_argument("mixing matrix is not symmetric");
      if (!(w(i, j) >= 0.0)) throw std::invalid_argument("mixing matrix has a negative entry");
    }
    if (std::abs(w.row(i).sum() - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("mixing matrix rows must sum to one");
    }
  }
  return MixingMatrix(std::move(w));
}

bool MixingMatrix::is_complete_average() const {
  const double target = 1.0 / n();
  return ((w_.array() - target).abs() <= 1e-14).all();
}

MixingMatrix metropolis_weights(const Graph& g) {
  const int n = g.n_nodes();
  Matrix w = Matrix::Zero(n, n);
  for (auto [i, j] : g.edges()) {
    const double weight = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
    w(i, j) = weight;
    w(j, i) = weight;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return MixingMatrix::from_dense(std::move(w));
}

MixingMatrix average_weights(int n) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  return MixingMatrix::from_dense(Matrix::Constant(n, n, 1.0 / n));
}

MixingMatrix identity_weights(int n) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  return MixingMatrix::from_dense(Matrix::Identity(n, n));
}

MixingMatrix lazy_transform(const MixingMatrix& w) {
  Matrix lazy = 0.5 * (w.weights() + Matrix::Identity(w.n(), w.n()));
  // Exact symmetry survives the arithmetic: both triangles see identical operands.
  return MixingMatrix::from_dense(std::move(lazy));
}

double mixing_rate(const MixingMatrix& w) { return w.mixing_rate(); }

double consensus_deviation_norm(const Matrix& w) {
  const Eigen::Index n = w.rows();
  Eigen::MatrixXd centered = w;
  centered.array() -= 1.0 / static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  return svd.singularValues()(0);
}

Assumption1Report validate_assumption1(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() < 1) throw std::invalid_argument("matrix must be square");
  const Eigen::Index n = w.rows();
  Assumption1Report report;
  report.max_asymmetry = (w - w.transpose()).cwiseAbs().maxCoeff();
  report.symmetric = report.max_asymmetry == 0.0;
  report.max_row_sum_error = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  report.max_col_sum_error = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  report.min_entry = w.minCoeff();
  report.doubly_stochastic = report.min_entry >= 0.0 && report.max_row_sum_error <= kRowSumTolerance &&
                             report.max_col_sum_error <= kRowSumTolerance;

  // Wielandt: a nonnegative n x n matrix is primitive iff W^k > 0 for some
  // k <= (n-1)^2 + 1. Square the sparsity pattern until the exponent passes
  // that bound; positivity persists under further multiplication.
  if (report.min_entry >= 0.0) {
    using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    Pattern power = (w.array() > 0.0).cast<int>();
    const Eigen::Index bound = (n - 1) * (n - 1) + 1;
    for (Eigen::Index k = 1;; k *= 2) {
      if ((power.array() > 0).all()) {
        report.primitive = true;
        report.positive_power = static_cast<int>(k);
        break;
      }
      if (k >= bound) break;
      power = ((power * power).array() > 0).cast<int>();
    }
  }

  Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  report.min_eigenvalue = solver.eigenvalues()(0);
  report.positive_definite = report.symmetric && report.min_eigenvalue > 0.0;
  return report;
}

MixingMatrix build_mixing(const GraphSpec& spec, bool lazy) {
  MixingMatrix w = metropolis_weights(build_graph(spec));
  return lazy ? lazy_transform(w) : w;
}

}  // namespace ledsim
