#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ledsim/problems.hpp"
#include "ledsim/rng.hpp"
#include "ledsim/topology.hpp"
#include "ledsim/types.hpp"

namespace ledsim {

enum class AlgorithmId {
  kLed,
  kLed1,
  kEd,
  kUdaEd,
  kPdfp2o,
  kScaffnew,
  kDsgd,
  kLocalDsgd,
  kKgt,
  kScaffold,
  kLocalSgd,
  kFedgate,
  kVrlSgd,
  kLedServer,
};

std::string to_string(AlgorithmId id);
AlgorithmId parse_algorithm(const std::string& name);
std::vector<AlgorithmId> all_algorithms();

/// Server-workers methods; they only make sense on W = (1/N) 11^T.
bool is_centralized(AlgorithmId id);
/// Methods whose analysis form needs exact gradients.
bool requires_deterministic(AlgorithmId id);
/// Vectors each node sends per link in a communicating round.
int vectors_per_round(AlgorithmId id);

struct HyperParams {
  double alpha = 0.01;  // local stepsize
  std::optional<double> beta;  // dual scale; defaults to 1 / tau
  double gamma = 1.0;   // server / global stepsize
  int tau = 1;          // local steps per round
  double p = 1.0;       // Scaffnew communication probability
  std::optional<double> zeta;  // Scaffnew dual stepsize; defaults to p / alpha
  double eta_pd = 1.0;  // PDFP2O stepsize

  double effective_beta() const { return beta.value_or(1.0 / tau); }
  double effective_zeta() const { return zeta.value_or(p / alpha); }
  void validate() const;
};

/// Mean over nodes of the sampled gradients at each local step of a round.
using GradientLedger = std::vector<Vector>;

template <class State>
struct RoundOutput {
  State state;
  GradientLedger ledger;
  int vectors_per_link = 0;
};

// ---------------------------------------------------------------------------
// LED

enum class DualInit { kFromMixing, kZero };

std::string to_string(DualInit mode);
DualInit parse_dual_init(const std::string& name);

struct LedState {
  Matrix x;  // primal estimates, one row per node
  Matrix y;  // dual estimates
  int round = 0;
};

/// y0 = (I - W) x0, or zero.
LedState led_init(const Matrix& x0, const MixingMatrix& w, DualInit mode);

/// tau local steps phi <- phi - alpha grad F_i(phi) - beta y_i, then
/// x+ = W phi_tau and y+ = y + phi_tau - x+.
RoundOutput<LedState> led_round(const LedState& state, const Problem& problem, const MixingMatrix& w,
                                const HyperParams& h, const RngStream& run_stream);

/// Single local step. Same code path as led_round with tau = 1.
RoundOutput<LedState> led1_step(const LedState& state, const Problem& problem, const MixingMatrix& w,
                                double alpha, double beta, const RngStream& run_stream);

/// Primal-dual pair (x*, y*) with y*_i = -(alpha / beta) grad f_i(x*); a
/// fixed point of led_round for any tau when gradients are exact.
LedState led_fixed_point(const Problem& problem, const Vector& x_star, double alpha, double beta);

// ---------------------------------------------------------------------------
// Exact-Diffusion, eliminated two-term form

struct EdState {
  Matrix x_prev;
  Matrix x;
  Matrix grad_prev;
  int round = 0;
  bool bootstrapped = false;
};

/// Holds x0 only; ed_bootstrap must run before the first ed_eliminated_step.
EdState ed_init(const Matrix& x0);
/// x1 = W (x0 - alpha grad f(x0))
EdState ed_bootstrap(const EdState& state, const Problem& problem, const MixingMatrix& w, double alpha);
/// x+ = W (2 x - x_prev - alpha (grad f(x) - grad f(x_prev))). Throws
/// std::logic_error before bootstrap.
RoundOutput<EdState> ed_eliminated_step(const EdState& state, const Problem& problem, const MixingMatrix& w,
                                        double alpha);

// ---------------------------------------------------------------------------
// UDA-ED analysis form

/// (I - W)^{1/2} with eigenvalues below 1e-12 clamped to zero.
Matrix laplacian_sqrt(const MixingMatrix& w);

struct UdaEdState {
  Matrix x;
  Matrix z;
  Matrix b_half;  // (I - W)^{1/2}
  int round = 0;
};

UdaEdState uda_ed_init(const Matrix& x0, const MixingMatrix& w);
/// phi = x - alpha grad f(x) - B^{1/2} z; x+ = W phi; z+ = z + B^{1/2} phi.
/// B^{1/2} is dense, so this form is not neighbor-local.
RoundOutput<UdaEdState> uda_ed_step(const UdaEdState& state, const Problem& problem, const MixingMatrix& w,
                                    double alpha);

// ---------------------------------------------------------------------------
// PDFP2O, rewritten form

using PrimalDualState = LedState;

/// phi = x - alpha grad F(x) - eta y; y+ = y + (I - W) phi;
/// x+ = ((1 - eta) I + eta W) phi. Requires eta in (0, 1].
RoundOutput<PrimalDualState> pdfp2o_step(const PrimalDualState& state, const Problem& problem,
                                         const MixingMatrix& w, double alpha, double eta,
                                         const RngStream& run_stream);

// ---------------------------------------------------------------------------
// Decentralized Scaffnew

struct ScaffnewState {
  Matrix x;
  Matrix z;
  int round = 0;
};

ScaffnewState scaffnew_init(const Matrix& x0);
/// Local step every round; with probability p a communication round
/// x+ = (1 - alpha zeta / p) phi + (alpha zeta / p) W phi. Throws
/// std::invalid_argument when alpha zeta / p exceeds one.
RoundOutput<ScaffnewState> scaffnew_round(const ScaffnewState& state, const Problem& problem,
                                          const MixingMatrix& w, double alpha, double zeta, double p,
                                          const RngStream& run_stream);

// ---------------------------------------------------------------------------
// Local-DSGD (adapt-then-combine). tau = 1 is DSGD; W = (1/N) 11^T is Local-SGD.

struct GossipState {
  Matrix x;
  int round = 0;
};

RoundOutput<GossipState> local_dsgd_round(const GossipState& state, const Problem& problem, const MixingMatrix& w,
                                          double alpha, int tau, const RngStream& run_stream);

// ---------------------------------------------------------------------------
// K-GT style local gradient tracking

struct TrackingState {
  Matrix x;
  Matrix c;  // correction added to every local gradient
  int round = 0;
};

TrackingState kgt_init(const Matrix& x0);
/// Local steps phi <- phi - alpha (grad F_i(phi) + c_i); with the round's
/// progress delta = phi_tau - x, the tracker update is
/// c+ = c + (I - W) delta / (tau alpha) and the model update is
/// x+ = W (x + global_step * delta). Two vectors per link.
RoundOutput<TrackingState> k_gt_round(const TrackingState& state, const Problem& problem, const MixingMatrix& w,
                                      double alpha, int tau, const RngStream& run_stream, double global_step = 1.0);

// ---------------------------------------------------------------------------
// Centralized (server-workers) methods. The server iterate is one m-vector.

struct FedGateState {
  Vector x;
  Matrix delta;  // per-node gradient correction
  int round = 0;
};

FedGateState fedgate_init(const Vector& x0, int n_nodes);
/// phi <- phi - alpha (grad F_i(phi) - delta_i);
/// delta+ = delta - (phi_tau - mean phi_tau) / (alpha tau);
/// x+ = x - alpha gamma (x - mean phi_tau). alpha gamma = 1 is VRL-SGD.
RoundOutput<FedGateState> fedgate_round(const FedGateState& state, const Problem& problem, double alpha,
                                        double gamma, int tau, const RngStream& run_stream);

struct LedServerState {
  Vector x;
  Matrix y;
  int round = 0;
};

LedServerState led_server_init(const Vector& x0, int n_nodes);
/// x+ = (1 - gamma) x + gamma mean phi_tau; y_i+ = y_i + phi_i,tau - mean phi_tau.
RoundOutput<LedServerState> led_server_round(const LedServerState& state, const Problem& problem, double alpha,
                                             double beta, double gamma, int tau, const RngStream& run_stream);

struct ScaffoldState {
  Vector x;
  Matrix c_node;
  Vector c;
  int round = 0;
};

ScaffoldState scaffold_init(const Vector& x0, int n_nodes);
/// Option II control update, full participation, server stepsize 1.
RoundOutput<ScaffoldState> scaffold_round(const ScaffoldState& state, const Problem& problem, double alpha, int tau,
                                          const RngStream& run_stream);

// ---------------------------------------------------------------------------

/// alpha = 1 / (L + sqrt(tau R / N))
double default_stepsize(double L, int tau, int rounds, int n_nodes);

/// Largest stepsize worth trying; the harness tunes below it.
double stability_estimate(double L);

/// Column-wise sum over nodes, i.e. (1^T (x) I_m) applied to a stacked variable.
Vector node_sum(const Matrix& m);

}  // namespace ledsim
