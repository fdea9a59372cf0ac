#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "ledsim/rng.hpp"
#include "ledsim/types.hpp"

namespace ledsim {

/// Features are stored one sample per row; labels are exactly +1 or -1.
struct NodeDataset {
  Matrix features;
  Vector labels;
};

/// Heterogeneous logistic-regression generator.
struct SynthConfig {
  int nodes = 15;
  int dim = 5;
  int samples = 1000;
  double eta = 0.01;           // weight of the nonconvex regularizer
  double sigma_u = 6.0;        // spread of the shared generating vector
  double sigma_h = 2.0;        // spread of per-node shifts
  double sigma = 1e-3;         // gradient noise std
  double feature_scale = 5.0;  // feature std

  void validate() const;
};

/// f_i(x) = 0.5 x^T A_i x - b_i^T x
struct QuadraticSpec {
  int nodes = 15;
  int dim = 5;
  double mu = 0.1;
  double L = 1.0;
  double heterogeneity = 1.0;   // spread of the linear terms b_i
  double hessian_spread = 0.5;  // relative per-node Hessian perturbation, in [0, 1)
  double sigma = 0.0;

  void validate() const;
};

/// Per-node differentiable objectives with exact and noisy gradient oracles.
/// Immutable once built; every evaluation is a pure function of its inputs.
class Problem {
 public:
  static Problem logistic(std::vector<NodeDataset> datasets, double eta, double sigma);
  static Problem quadratic(std::vector<Matrix> hessians, std::vector<Vector> linear, double sigma);

  int n_nodes() const { return n_nodes_; }
  int dim() const { return dim_; }
  double noise_sigma() const { return sigma_; }
  Problem with_noise(double sigma) const;

  bool is_logistic() const { return std::holds_alternative<LogisticTerms>(terms_); }
  bool is_quadratic() const { return std::holds_alternative<QuadraticTerms>(terms_); }

  double value(int node, const Eigen::Ref<const Vector>& x) const;
  void gradient(int node, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;
  Vector gradient(int node, const Eigen::Ref<const Vector>& x) const;

  /// Exact gradient plus N(0, sigma^2 I) drawn from `stream`. With sigma == 0
  /// the exact gradient is returned untouched and the stream is not read.
  Vector stochastic_gradient(int node, const Eigen::Ref<const Vector>& x, const RngStream& stream) const;

  /// Row i of `grads` <- grad f_i(row i of `points`).
  void gradients(const Matrix& points, Matrix& grads) const;
  /// Row i of `grads` <- sampled gradient at row i, noise from
  /// gradient_noise_stream(run_stream, round, step, i).
  void stochastic_gradients(const Matrix& points, const RngStream& run_stream, std::uint64_t round,
                            std::uint64_t step, Matrix& grads) const;

  /// f(x) = (1/N) sum_i f_i(x)
  double global_value(const Eigen::Ref<const Vector>& x) const;
  Vector global_gradient(const Eigen::Ref<const Vector>& x) const;

  /// Closed-form minimizer and optimal value; quadratic problems only.
  const std::optional<Vector>& minimizer() const { return minimizer_; }
  std::optional<double> optimal_value() const;

  /// Upper bound on the per-node gradient Lipschitz constant.
  double smoothness() const { return smoothness_; }

  const std::vector<NodeDataset>& datasets() const;
  double regularization() const;
  const std::vector<Matrix>& hessians() const;
  const std::vector<Vector>& linear_terms() const;

 private:
  struct LogisticTerms {
    std::vector<NodeDataset> datasets;
    double eta = 0.0;
  };
  struct QuadraticTerms {
    std::vector<Matrix> hessians;
    std::vector<Vector> linear;
  };

  Problem() = default;

  int n_nodes_ = 0;
  int dim_ = 0;
  double sigma_ = 0.0;
  double smoothness_ = 0.0;
  std::variant<std::monostate, LogisticTerms, QuadraticTerms> terms_;
  std::optional<Vector> minimizer_;
};

/// Draws the shared model, per-node shifts, features and labels. Labels use
/// P(y = +1 | h) = 1 / (1 + exp(-h^T u_i)).
Problem synth_logistic(const SynthConfig& cfg, std::uint64_t seed);

/// Random heterogeneous quadratic whose average Hessian has spectrum in
/// [mu, L] (both endpoints attained when dim >= 2). Throws
/// std::invalid_argument for an infeasible request.
Problem quadratic_problem(const QuadraticSpec& spec, std::uint64_t seed);

double logreg_value(const Problem& problem, int node, const Eigen::Ref<const Vector>& x);
Vector logreg_grad(const Problem& problem, int node, const Eigen::Ref<const Vector>& x);
Vector stoch_grad(const Problem& problem, int node, const Eigen::Ref<const Vector>& x, const RngStream& stream);

/// ||(1/N) sum_i grad f_i(x)||^2
double global_grad_norm_sq(const Problem& problem, const Eigen::Ref<const Vector>& x);
/// (1/N) sum_i ||grad f_i(x) - grad f(x)||^2
double heterogeneity_at(const Problem& problem, const Eigen::Ref<const Vector>& x);

/// ln(1 + exp(t)) without overflow.
double softplus(double t);

}  // namespace ledsim
