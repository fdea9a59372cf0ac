#include "ledsim/rng.hpp"

namespace ledsim {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterEngine::result_type CounterEngine::operator()() {
  ++counter_;
  return splitmix64(key_ + counter_ * kGolden);
}

RngStream::RngStream(std::uint64_t seed) : key_(splitmix64(seed ^ 0x6C656473696D2D31ULL)) {}

RngStream RngStream::derive(StreamLabel label, std::uint64_t index) const {
  const std::uint64_t tag = splitmix64(static_cast<std::uint64_t>(label) * kGolden ^ index);
  return RngStream(splitmix64(key_ ^ splitmix64(tag + index)), 0);
}

}  // namespace ledsim
