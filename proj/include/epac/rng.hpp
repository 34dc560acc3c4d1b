#pragma once

#include <cstdint>
#include <random>

namespace epac {

/// One reproducible random stream per (seed, stream id).
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the C++
/// standard); the pair (seed, stream) is mixed through SplitMix64 into the
/// engine's seed words. Uniform and Gaussian variates are produced here
/// instead of through <random> distributions, whose algorithms are
/// implementation-defined, so a seed gives the same numbers with any
/// standard library.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace epac
