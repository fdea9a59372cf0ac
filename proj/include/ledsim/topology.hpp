#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ledsim/types.hpp"

namespace ledsim {

enum class GraphKind { kRing, kGrid, kComplete, kErdosRenyi };

std::string to_string(GraphKind kind);
GraphKind parse_graph_kind(const std::string& name);

struct GraphSpec {
  GraphKind kind = GraphKind::kRing;
  int n = 15;
  int rows = 0;  // grid only
  int cols = 0;  // grid only
  double edge_prob = 0.3;  // erdos_renyi only
  std::uint64_t seed = 0;  // erdos_renyi only
};

/// Undirected simple graph. Edges are stored once as (i, j) with i < j,
/// sorted lexicographically.
class Graph {
 public:
  Graph(int n_nodes, std::vector<std::pair<int, int>> edges);

  int n_nodes() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  std::size_t n_edges() const { return edges_.size(); }
  int degree(int i) const { return degree_[static_cast<std::size_t>(i)]; }
  bool connected() const;

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> degree_;
};

/// Throws std::invalid_argument on bad dimensions and std::runtime_error when
/// an Erdos-Renyi graph stays disconnected after 100 resamples.
Graph build_graph(const GraphSpec& spec);

/// Symmetric doubly-stochastic combination matrix with its spectrum cached.
class MixingMatrix {
 public:
  /// Validates symmetry (exact), nonnegativity and unit row sums (1e-12).
  static MixingMatrix from_dense(Matrix w);

  int n() const { return static_cast<int>(w_.rows()); }
  const Matrix& weights() const { return w_; }
  /// Eigenvalues in descending order.
  const Vector& spectrum() const { return spectrum_; }
  double mixing_rate() const { return mixing_rate_; }
  double min_eigenvalue() const { return spectrum_(spectrum_.size() - 1); }
  /// True when W equals (1/N)11^T, i.e. a server-workers network.
  bool is_complete_average() const;

 private:
  explicit MixingMatrix(Matrix w);

  Matrix w_;
  Vector spectrum_;
  double mixing_rate_ = 0.0;
};

MixingMatrix metropolis_weights(const Graph& g);
/// (1/N) 11^T
MixingMatrix average_weights(int n);
MixingMatrix identity_weights(int n);
/// 0.5 (W + I); maps every eigenvalue lambda to (1 + lambda) / 2.
MixingMatrix lazy_transform(const MixingMatrix& w);

/// max_{i>=2} |lambda_i|.
double mixing_rate(const MixingMatrix& w);
/// ||W - (1/N) 11^T||_2 through a singular value decomposition. Independent
/// route to the same number as mixing_rate().
double consensus_deviation_norm(const Matrix& w);

struct Assumption1Report {
  bool symmetric = false;
  double max_asymmetry = 0.0;
  bool doubly_stochastic = false;
  double max_row_sum_error = 0.0;
  double max_col_sum_error = 0.0;
  double min_entry = 0.0;
  bool primitive = false;
  int positive_power = -1;  // a power of two k with W^k > 0, or -1
  bool positive_definite = false;
  double min_eigenvalue = 0.0;
};

/// Diagnostics only; never throws for a square input.
Assumption1Report validate_assumption1(const Matrix& w);

/// Builds the graph and its Metropolis matrix, optionally lazy-transformed.
MixingMatrix build_mixing(const GraphSpec& spec, bool lazy);

}  // namespace ledsim
