#pragma once

#include <memory>
#include <optional>

#include "ledsim/algorithms.hpp"

namespace ledsim {

/// Uniform driver over the per-algorithm round functions, used by the harness.
/// Holds references to the problem and mixing matrix; both must outlive it.
class Method {
 public:
  virtual ~Method() = default;

  virtual AlgorithmId id() const = 0;
  /// Advances one round and returns the vectors sent per link.
  virtual int step(const RngStream& run_stream) = 0;
  /// Node estimates, one row per node. Server methods replicate the server iterate.
  virtual Matrix iterates() const = 0;
  /// Dual / corrector rows whose node sum is conserved, when the method has them.
  virtual std::optional<Matrix> correctors() const = 0;
  virtual int round() const = 0;
  virtual const GradientLedger& last_ledger() const = 0;
};

/// Centralized methods start from the node average of x0. Throws
/// std::invalid_argument for inconsistent inputs.
std::unique_ptr<Method> make_method(AlgorithmId id, const Problem& problem, const MixingMatrix& w,
                                    const HyperParams& h, const Matrix& x0, DualInit dual_init = DualInit::kFromMixing);

}  // namespace ledsim
