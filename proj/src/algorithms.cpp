#include "ledsim/algorithms.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ledsim {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_shapes(const Matrix& x, const Problem& problem, const MixingMatrix* w) {
  require(x.rows() == problem.n_nodes() && x.cols() == problem.dim(), "state does not match the problem");
  if (w != nullptr) require(w->n() == problem.n_nodes(), "mixing matrix does not match the problem");
}

Matrix replicate(const Vector& x, int n_nodes) { return x.transpose().replicate(n_nodes, 1); }

Vector row_mean(const Matrix& m) { return m.colwise().mean().transpose(); }

// phi_{t+1} = phi_t - alpha grad F(phi_t) - shift, for t = 0..tau-1.
// `shift` is the per-node drift correction held fixed for the round.
Matrix local_pass(const Matrix& start, const Problem& problem, double alpha, const Matrix* shift, int tau,
                  const RngStream& run_stream, int round, GradientLedger& ledger) {
  Matrix phi = start;
  Matrix grads(phi.rows(), phi.cols());
  ledger.clear();
  ledger.reserve(static_cast<std::size_t>(tau));
  for (int t = 0; t < tau; ++t) {
    problem.stochastic_gradients(phi, run_stream, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(t),
                                 grads);
    ledger.push_back(row_mean(grads));
    phi -= alpha * grads;
    if (shift != nullptr) phi -= *shift;
  }
  return phi;
}

}  // namespace

std::string to_string(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::kLed: return "led";
    case AlgorithmId::kLed1: return "led1";
    case AlgorithmId::kEd: return "ed";
    case AlgorithmId::kUdaEd: return "uda_ed";
    case AlgorithmId::kPdfp2o: return "pdfp2o";
    case AlgorithmId::kScaffnew: return "scaffnew";
    case AlgorithmId::kDsgd: return "dsgd";
    case AlgorithmId::kLocalDsgd: return "local_dsgd";
    case AlgorithmId::kKgt: return "kgt";
    case AlgorithmId::kScaffold: return "scaffold";
    case AlgorithmId::kLocalSgd: return "local_sgd";
    case AlgorithmId::kFedgate: return "fedgate";
    case AlgorithmId::kVrlSgd: return "vrl_sgd";
    case AlgorithmId::kLedServer: return "led_server";
  }
  return "unknown";
}

std::vector<AlgorithmId> all_algorithms() {
  return {AlgorithmId::kLed,      AlgorithmId::kLed1,      AlgorithmId::kEd,       AlgorithmId::kUdaEd,
          AlgorithmId::kPdfp2o,   AlgorithmId::kScaffnew,  AlgorithmId::kDsgd,     AlgorithmId::kLocalDsgd,
          AlgorithmId::kKgt,      AlgorithmId::kScaffold,  AlgorithmId::kLocalSgd, AlgorithmId::kFedgate,
          AlgorithmId::kVrlSgd,   AlgorithmId::kLedServer};
}

AlgorithmId parse_algorithm(const std::string& name) {
  for (AlgorithmId id : all_algorithms()) {
    if (to_string(id) == name) return id;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool is_centralized(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::kScaffold:
    case AlgorithmId::kLocalSgd:
    case AlgorithmId::kFedgate:
    case AlgorithmId::kVrlSgd:
    case AlgorithmId::kLedServer:
      return true;
    default:
      return false;
  }
}

bool requires_deterministic(AlgorithmId id) { return id == AlgorithmId::kEd || id == AlgorithmId::kUdaEd; }

int vectors_per_round(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::kKgt:
    case AlgorithmId::kScaffold:
    case AlgorithmId::kUdaEd:
      return 2;
    default:
      return 1;
  }
}

void HyperParams::validate() const {
  require(alpha > 0.0, "alpha must be positive");
  require(tau >= 1, "tau must be at least 1");
  require(effective_beta() > 0.0, "beta must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
  require(effective_zeta() > 0.0, "zeta must be positive");
  require(eta_pd > 0.0 && eta_pd <= 1.0, "eta_pd must lie in (0, 1]");
}

std::string to_string(DualInit mode) { return mode == DualInit::kZero ? "zero" : "dual_from_mixing"; }

DualInit parse_dual_init(const std::string& name) {
  if (name == "zero") return DualInit::kZero;
  if (name == "dual_from_mixing") return DualInit::kFromMixing;
  throw std::invalid_argument("unknown dual initialization '" + name + "'");
}

LedState led_init(const Matrix& x0, const MixingMatrix& w, DualInit mode) {
  require(x0.rows() == w.n(), "x0 rows must match the mixing matrix");
  LedState s;
  s.x = x0;
  if (mode == DualInit::kZero) {
    s.y = Matrix::Zero(x0.rows(), x0.cols());
  } else {
    s.y = x0 - w.weights() * x0;
  }
  return s;
}

RoundOutput<LedState> led_round(const LedState& state, const Problem& problem, const MixingMatrix& w,
                                const HyperParams& h, const RngStream& run_stream) {
  check_shapes(state.x, problem, &w);
  RoundOutput<LedState> out;
  const Matrix shift = h.effective_beta() * state.y;
  const Matrix phi = local_pass(state.x, problem, h.alpha, &shift, h.tau, run_stream, state.round, out.ledger);
  out.state.x = w.weights() * phi;
  out.state.y = state.y + phi - out.state.x;
  out.state.round = state.round + 1;
  out.vectors_per_link = 1;
  return out;
}

RoundOutput<LedState> led1_step(const LedState& state, const Problem& problem, const MixingMatrix& w,
                                double alpha, double beta, const RngStream& run_stream) {
  HyperParams h;
  h.alpha = alpha;
  h.beta = beta;
  h.tau = 1;
  return led_round(state, problem, w, h, run_stream);
}

LedState led_fixed_point(const Problem& problem, const Vector& x_star, double alpha, double beta) {
  require(x_star.size() == problem.dim(), "dimension mismatch");
  LedState s;
  s.x = replicate(x_star, problem.n_nodes());
  s.y.resize(problem.n_nodes(), problem.dim());
  for (int i = 0; i < problem.n_nodes(); ++i) {
    s.y.row(i) = (-(alpha / beta) * problem.gradient(i, x_star)).transpose();
  }
  return s;
}

EdState ed_init(const Matrix& x0) {
  EdState s;
  s.x = x0;
  return s;
}

EdState ed_bootstrap(const EdState& state, const Problem& problem, const MixingMatrix& w, double alpha) {
  check_shapes(state.x, problem, &w);
  if (state.bootstrapped) throw std::logic_error("exact-diffusion state already bootstrapped");
  EdState s;
  problem.gradients(state.x, s.grad_prev);
  s.x_prev = state.x;
  s.x = w.weights() * (state.x - alpha * s.grad_prev);
  s.round = 1;
  s.bootstrapped = true;
  return s;
}

RoundOutput<EdState> ed_eliminated_step(const EdState& state, const Problem& problem, const MixingMatrix& w,
                                        double alpha) {
  if (!state.bootstrapped) throw std::logic_error("ed_eliminated_step called before ed_bootstrap");
  check_shapes(state.x, problem, &w);
  RoundOutput<EdState> out;
  Matrix grads;
  problem.gradients(state.x, grads);
  out.ledger.push_back(row_mean(grads));
  out.state.x = w.weights() * (2.0 * state.x - state.x_prev - alpha * (grads - state.grad_prev));
  out.state.x_prev = state.x;
  out.state.grad_prev = std::move(grads);
  out.state.round = state.round + 1;
  out.state.bootstrapped = true;
  out.vectors_per_link = 1;
  return out;
}

Matrix laplacian_sqrt(const MixingMatrix& w) {
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(w.n(), w.n()) - Eigen::MatrixXd(w.weights());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  Vector roots = solver.eigenvalues();
  for (Eigen::Index k = 0; k < roots.size(); ++k) roots(k) = roots(k) < 1e-12 ? 0.0 : std::sqrt(roots(k));
  Matrix result = solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (result + result.transpose());
}

UdaEdState uda_ed_init(const Matrix& x0, const MixingMatrix& w) {
  require(x0.rows() == w.n(), "x0 rows must match the mixing matrix");
  UdaEdState s;
  s.x = x0;
  s.z = Matrix::Zero(x0.rows(), x0.cols());
  s.b_half = laplacian_sqrt(w);
  return s;
}

RoundOutput<UdaEdState> uda_ed_step(const UdaEdState& state, const Problem& problem, const MixingMatrix& w,
                                    double alpha) {
  check_shapes(state.x, problem, &w);
  RoundOutput<UdaEdState> out;
  Matrix grads;
  problem.gradients(state.x, grads);
  out.ledger.push_back(row_mean(grads));
  const Matrix phi = state.x - alpha * grads - state.b_half * state.z;
  out.state.x = w.weights() * phi;
  out.state.z = state.z + state.b_half * phi;
  out.state.b_half = state.b_half;
  out.state.round = state.round + 1;
  out.vectors_per_link = 2;
  return out;
}

RoundOutput<PrimalDualState> pdfp2o_step(const PrimalDualState& state, const Problem& problem,
                                         const MixingMatrix& w, double alpha, double eta,
                                         const RngStream& run_stream) {
  require(eta > 0.0 && eta <= 1.0, "PDFP2O eta must lie in (0, 1]");
  check_shapes(state.x, problem, &w);
  RoundOutput<PrimalDualState> out;
  const Matrix shift = eta * state.y;
  const Matrix phi = local_pass(state.x, problem, alpha, &shift, 1, run_stream, state.round, out.ledger);
  const Matrix mixed = w.weights() * phi;
  out.state.y = state.y + (phi - mixed);
  out.state.x = (1.0 - eta) * phi + eta * mixed;
  out.state.round = state.round + 1;
  out.vectors_per_link = 1;
  return out;
}

ScaffnewState scaffnew_init(const Matrix& x0) {
  ScaffnewState s;
  s.x = x0;
  s.z = Matrix::Zero(x0.rows(), x0.cols());
  return s;
}

RoundOutput<ScaffnewState> scaffnew_round(const ScaffnewState& state, const Problem& problem,
                                          const MixingMatrix& w, double alpha, double zeta, double p,
                                          const RngStream& run_stream) {
  require(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
  const double ratio = alpha * zeta / p;
  // Rounding in alpha * (1 / alpha) must not trip the check.
  require(ratio > 0.0 && ratio <= 1.0 + 1e-12, "Scaffnew needs alpha * zeta / p <= 1");
  check_shapes(state.x, problem, &w);
  RoundOutput<ScaffnewState> out;
  const Matrix shift = alpha * state.z;
  const Matrix phi = local_pass(state.x, problem, alpha, &shift, 1, run_stream, state.round, out.ledger);

  auto coin = run_stream.round(static_cast<std::uint64_t>(state.round)).purpose(Purpose::kCommunicationCoin).engine();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const bool communicate = uniform(coin) < p;
  if (communicate) {
    out.state.x = (1.0 - ratio) * phi + ratio * (w.weights() * phi);
    out.state.z = state.z + (p / alpha) * (phi - out.state.x);
    out.vectors_per_link = 1;
  } else {
    out.state.x = phi;
    out.state.z = state.z;
    out.vectors_per_link = 0;
  }
  out.state.round = state.round + 1;
  return out;
}

RoundOutput<GossipState> local_dsgd_round(const GossipState& state, const Problem& problem, const MixingMatrix& w,
                                          double alpha, int tau, const RngStream& run_stream) {
  require(tau >= 1, "tau must be at least 1");
  check_shapes(state.x, problem, &w);
  RoundOutput<GossipState> out;
  const Matrix phi = local_pass(state.x, problem, alpha, nullptr, tau, run_stream, state.round, out.ledger);
  out.state.x = w.weights() * phi;
  out.state.round = state.round + 1;
  out.vectors_per_link = 1;
  return out;
}

TrackingState kgt_init(const Matrix& x0) {
  TrackingState s;
  s.x = x0;
  s.c = Matrix::Zero(x0.rows(), x0.cols());
  return s;
}

RoundOutput<TrackingState> k_gt_round(const TrackingState& state, const Problem& problem, const MixingMatrix& w,
                                      double alpha, int tau, const RngStream& run_stream, double global_step) {
  require(tau >= 1, "tau must be at least 1");
  check_shapes(state.x, problem, &w);
  RoundOutput<TrackingState> out;
  const Matrix shift = alpha * state.c;
  const Matrix phi = local_pass(state.x, problem, alpha, &shift, tau, run_stream, state.round, out.ledger);
  const Matrix delta = phi - state.x;
  out.state.c = state.c + (delta - w.weights() * delta) / (alpha * tau);
  out.state.x = w.weights() * (state.x + global_step * delta);
  out.state.round = state.round + 1;
  out.vectors_per_link = 2;
  return out;
}

FedGateState fedgate_init(const Vector& x0, int n_nodes) {
  require(n_nodes >= 1, "need at least one node");
  FedGateState s;
  s.x = x0;
  s.delta = Matrix::Zero(n_nodes, x0.size());
  return s;
}

RoundOutput<FedGateState> fedgate_round(const FedGateState& state, const Problem& problem, double alpha,
                                        double gamma, int tau, const RngStream& run_stream) {
  require(tau >= 1, "tau must be at least 1");
  const Matrix start = replicate(state.x, problem.n_nodes());
  check_shapes(start, problem, nullptr);
  RoundOutput<FedGateState> out;
  const Matrix shift = -alpha * state.delta;
  const Matrix phi = local_pass(start, problem, alpha, &shift, tau, run_stream, state.round, out.ledger);
  const Vector mean = row_mean(phi);
  out.state.delta = state.delta - (phi.rowwise() - mean.transpose()) / (alpha * tau);
  out.state.x = state.x - alpha * gamma * (state.x - mean);
  out.state.round = state.round + 1;
  out.vectors_per_link = 1;
  return out;
}

LedServerState led_server_init(const Vector& x0, int n_nodes) {
  require(n_nodes >= 1, "need at least one node");
  LedServerState s;
  s.x = x0;
  s.y = Matrix::Zero(n_nodes, x0.size());
  return s;
}

RoundOutput<LedServerState> led_server_round(const LedServerState& state, const Problem& problem, double alpha,
                                             double beta, double gamma, int tau, const RngStream& run_stream) {
  require(tau >= 1, "tau must be at least 1");
  const Matrix start = replicate(state.x, problem.n_nodes());
  check_shapes(start, problem, nullptr);
  RoundOutput<LedServerState> out;
  const Matrix shift = beta * state.y;
  const Matrix phi = local_pass(start, problem, alpha, &shift, tau, run_stream, state.round, out.ledger);
  const Vector mean = row_mean(phi);
  out.state.x = (1.0 - gamma) * state.x + gamma * mean;
  out.state.y = state.y + (phi.rowwise() - mean.transpose());
  out.state.round = state.round + 1;
  out.vectors_per_link = 1;
  return out;
}

ScaffoldState scaffold_init(const Vector& x0, int n_nodes) {
  require(n_nodes >= 1, "need at least one node");
  ScaffoldState s;
  s.x = x0;
  s.c_node = Matrix::Zero(n_nodes, x0.size());
  s.c = Vector::Zero(x0.size());
  return s;
}

RoundOutput<ScaffoldState> scaffold_round(const ScaffoldState& state, const Problem& problem, double alpha, int tau,
                                          const RngStream& run_stream) {
  require(tau >= 1, "tau must be at least 1");
  const Matrix start = replicate(state.x, problem.n_nodes());
  check_shapes(start, problem, nullptr);
  RoundOutput<ScaffoldState> out;
  // Local direction grad F_i - c_i + c.
  const Matrix shift = alpha * ((-state.c_node).rowwise() + state.c.transpose());
  const Matrix phi = local_pass(start, problem, alpha, &shift, tau, run_stream, state.round, out.ledger);
  out.state.c_node = (state.c_node.rowwise() - state.c.transpose()) - (phi - start) / (alpha * tau);
  out.state.c = state.c + row_mean(out.state.c_node - state.c_node);
  out.state.x = row_mean(phi);
  out.state.round = state.round + 1;
  out.vectors_per_link = 2;
  return out;
}

double default_stepsize(double L, int tau, int rounds, int n_nodes) {
  require(L > 0.0 && tau >= 1 && rounds >= 1 && n_nodes >= 1, "default_stepsize needs positive arguments");
  return 1.0 / (L + std::sqrt(static_cast<double>(tau) * rounds / n_nodes));
}

double stability_estimate(double L) {
  require(L > 0.0, "L must be positive");
  return 2.0 / L;
}

Vector node_sum(const Matrix& m) { return m.colwise().sum().transpose(); }

}  // namespace ledsim
