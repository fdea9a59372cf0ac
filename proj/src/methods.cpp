#include "ledsim/methods.hpp"

#include <functional>
#include <stdexcept>
#include <utility>

namespace ledsim {

namespace {

Matrix replicate(const Vector& x, int n) { return x.transpose().replicate(n, 1); }

Matrix iterates_of(const LedState& s, int) { return s.x; }
Matrix iterates_of(const EdState& s, int) { return s.x; }
Matrix iterates_of(const UdaEdState& s, int) { return s.x; }
Matrix iterates_of(const ScaffnewState& s, int) { return s.x; }
Matrix iterates_of(const GossipState& s, int) { return s.x; }
Matrix iterates_of(const TrackingState& s, int) { return s.x; }
Matrix iterates_of(const FedGateState& s, int n) { return replicate(s.x, n); }
Matrix iterates_of(const LedServerState& s, int n) { return replicate(s.x, n); }
Matrix iterates_of(const ScaffoldState& s, int n) { return replicate(s.x, n); }

std::optional<Matrix> correctors_of(const LedState& s) { return s.y; }
std::optional<Matrix> correctors_of(const EdState&) { return std::nullopt; }
std::optional<Matrix> correctors_of(const UdaEdState& s) { return s.z; }
std::optional<Matrix> correctors_of(const ScaffnewState& s) { return s.z; }
std::optional<Matrix> correctors_of(const GossipState&) { return std::nullopt; }
std::optional<Matrix> correctors_of(const TrackingState& s) { return s.c; }
std::optional<Matrix> correctors_of(const FedGateState& s) { return s.delta; }
std::optional<Matrix> correctors_of(const LedServerState& s) { return s.y; }
// SCAFFOLD's node controls sum to N c, not zero.
std::optional<Matrix> correctors_of(const ScaffoldState&) { return std::nullopt; }

int round_of(const EdState& s) { return s.bootstrapped ? s.round : 0; }
template <class S>
int round_of(const S& s) {
  return s.round;
}

template <class State>
class MethodImpl final : public Method {
 public:
  using StepFn = std::function<RoundOutput<State>(const State&, const RngStream&)>;

  MethodImpl(AlgorithmId id, int n_nodes, State initial, StepFn step)
      : id_(id), n_nodes_(n_nodes), state_(std::move(initial)), step_(std::move(step)) {}

  AlgorithmId id() const override { return id_; }

  int step(const RngStream& run_stream) override {
    RoundOutput<State> out = step_(state_, run_stream);
    state_ = std::move(out.state);
    ledger_ = std::move(out.ledger);
    return out.vectors_per_link;
  }

  Matrix iterates() const override { return iterates_of(state_, n_nodes_); }
  std::optional<Matrix> correctors() const override { return correctors_of(state_); }
  int round() const override { return round_of(state_); }
  const GradientLedger& last_ledger() const override { return ledger_; }

 private:
  AlgorithmId id_;
  int n_nodes_;
  State state_;
  StepFn step_;
  GradientLedger ledger_;
};

template <class State>
std::unique_ptr<Method> wrap(AlgorithmId id, int n, State initial,
                             typename MethodImpl<State>::StepFn step) {
  return std::make_unique<MethodImpl<State>>(id, n, std::move(initial), std::move(step));
}

}  // namespace

std::unique_ptr<Method> make_method(AlgorithmId id, const Problem& problem, const MixingMatrix& w,
                                    const HyperParams& h, const Matrix& x0, DualInit dual_init) {
  h.validate();
  const int n = problem.n_nodes();
  if (w.n() != n) throw std::invalid_argument("mixing matrix size does not match the problem");
  if (x0.rows() != n || x0.cols() != problem.dim()) throw std::invalid_argument("x0 shape does not match the problem");
  if (requires_deterministic(id) && problem.noise_sigma() != 0.0) {
    throw std::invalid_argument(to_string(id) + " is an exact-gradient form; set sigma = 0");
  }
  const Problem* pb = &problem;
  const MixingMatrix* mw = &w;
  const Vector center = x0.colwise().mean().transpose();

  switch (id) {
    case AlgorithmId::kLed:
      return wrap<LedState>(id, n, led_init(x0, w, dual_init),
                            [pb, mw, h](const LedState& s, const RngStream& rs) { return led_round(s, *pb, *mw, h, rs); });
    case AlgorithmId::kLed1:
      return wrap<LedState>(id, n, led_init(x0, w, dual_init), [pb, mw, h](const LedState& s, const RngStream& rs) {
        return led1_step(s, *pb, *mw, h.alpha, h.effective_beta(), rs);
      });
    case AlgorithmId::kPdfp2o:
      return wrap<LedState>(id, n, led_init(x0, w, dual_init), [pb, mw, h](const LedState& s, const RngStream& rs) {
        return pdfp2o_step(s, *pb, *mw, h.alpha, h.eta_pd, rs);
      });
    case AlgorithmId::kEd:
      return wrap<EdState>(id, n, ed_init(x0), [pb, mw, h](const EdState& s, const RngStream&) {
        if (!s.bootstrapped) {
          RoundOutput<EdState> out;
          out.state = ed_bootstrap(s, *pb, *mw, h.alpha);
          out.ledger.push_back(out.state.grad_prev.colwise().mean().transpose());
          out.vectors_per_link = 1;
          return out;
        }
        return ed_eliminated_step(s, *pb, *mw, h.alpha);
      });
    case AlgorithmId::kUdaEd:
      return wrap<UdaEdState>(id, n, uda_ed_init(x0, w), [pb, mw, h](const UdaEdState& s, const RngStream&) {
        return uda_ed_step(s, *pb, *mw, h.alpha);
      });
    case AlgorithmId::kScaffnew: {
      const double zeta = h.effective_zeta();
      if (h.alpha * zeta / h.p > 1.0 + 1e-12) throw std::invalid_argument("Scaffnew needs alpha * zeta / p <= 1");
      return wrap<ScaffnewState>(id, n, scaffnew_init(x0), [pb, mw, h, zeta](const ScaffnewState& s, const RngStream& rs) {
        return scaffnew_round(s, *pb, *mw, h.alpha, zeta, h.p, rs);
      });
    }
    case AlgorithmId::kDsgd:
      return wrap<GossipState>(id, n, GossipState{x0, 0}, [pb, mw, h](const GossipState& s, const RngStream& rs) {
        return local_dsgd_round(s, *pb, *mw, h.alpha, 1, rs);
      });
    case AlgorithmId::kLocalDsgd:
    case AlgorithmId::kLocalSgd: {
      const Matrix start = id == AlgorithmId::kLocalSgd ? replicate(center, n) : x0;
      return wrap<GossipState>(id, n, GossipState{start, 0}, [pb, mw, h](const GossipState& s, const RngStream& rs) {
        return local_dsgd_round(s, *pb, *mw, h.alpha, h.tau, rs);
      });
    }
    case AlgorithmId::kKgt:
      return wrap<TrackingState>(id, n, kgt_init(x0), [pb, mw, h](const TrackingState& s, const RngStream& rs) {
        return k_gt_round(s, *pb, *mw, h.alpha, h.tau, rs);
      });
    case AlgorithmId::kFedgate:
    case AlgorithmId::kVrlSgd: {
      const double gamma = id == AlgorithmId::kVrlSgd ? 1.0 / h.alpha : h.gamma;
      return wrap<FedGateState>(id, n, fedgate_init(center, n),
                                [pb, h, gamma](const FedGateState& s, const RngStream& rs) {
                                  return fedgate_round(s, *pb, h.alpha, gamma, h.tau, rs);
                                });
    }
    case AlgorithmId::kLedServer:
      return wrap<LedServerState>(id, n, led_server_init(center, n),
                                  [pb, h](const LedServerState& s, const RngStream& rs) {
                                    return led_server_round(s, *pb, h.alpha, h.effective_beta(), h.gamma, h.tau, rs);
                                  });
    case AlgorithmId::kScaffold:
      return wrap<ScaffoldState>(id, n, scaffold_init(center, n), [pb, h](const ScaffoldState& s, const RngStream& rs) {
        return scaffold_round(s, *pb, h.alpha, h.tau, rs);
      });
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace ledsim
