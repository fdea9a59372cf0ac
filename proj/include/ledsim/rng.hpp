#pragma once

#include <cstdint>
#include <limits>

namespace ledsim {

/// Labels for the components of a stream path.
enum class StreamLabel : std::uint64_t {
  kRun = 1,
  kRound = 2,
  kStep = 3,
  kNode = 4,
  kPurpose = 5,
  kAttempt = 6,
};

/// What a leaf stream is used for. Distinct purposes never share draws.
enum class Purpose : std::uint64_t {
  kGradientNoise = 1,
  kCommunicationCoin = 2,
  kSharedModel = 3,
  kNodeShift = 4,
  kFeatures = 5,
  kLabels = 6,
  kHessianBasis = 7,
  kHessianSpectrum = 8,
  kHessianSpread = 9,
  kLinearTerm = 10,
  kGraph = 11,
  kInitialPoint = 12,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-mode generator: output k is splitmix64(key + k * golden).
/// Satisfies UniformRandomBitGenerator, so the <random> distributions apply.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Path-addressed random stream.
///
/// A stream is identified by a seed plus an ordered list of labeled indices
/// (run, round, local step, node, purpose, ...). Only the hashed key is
/// stored. Identical (seed, path) pairs reproduce identical draws no matter
/// what else has been sampled, which is what lets two algorithm
/// implementations consume the same gradient noise.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream derive(StreamLabel label, std::uint64_t index) const;

  RngStream run(std::uint64_t k) const { return derive(StreamLabel::kRun, k); }
  RngStream round(std::uint64_t r) const { return derive(StreamLabel::kRound, r); }
  RngStream step(std::uint64_t t) const { return derive(StreamLabel::kStep, t); }
  RngStream node(std::uint64_t i) const { return derive(StreamLabel::kNode, i); }
  RngStream purpose(Purpose p) const {
    return derive(StreamLabel::kPurpose, static_cast<std::uint64_t>(p));
  }

  CounterEngine engine() const { return CounterEngine(key_); }
  std::uint64_t key() const { return key_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  explicit RngStream(std::uint64_t key, int /*tag*/) : key_(key) {}

  std::uint64_t key_;
};

/// Stream for the gradient noise of one node at one local step of one round.
inline RngStream gradient_noise_stream(const RngStream& run_stream, std::uint64_t round,
                                       std::uint64_t step, std::uint64_t node) {
  return run_stream.round(round).step(step).node(node).purpose(Purpose::kGradientNoise);
}

}  // namespace ledsim
