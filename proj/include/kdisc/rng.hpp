#pragma once

#include <array>
#include <cstdint>

namespace kdisc {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every stochastic routine in the library draws from a `Philox` keyed by the
/// caller's seed and a stream id, so replicate b of a bootstrap or the i-th
/// initial particle always sees the same numbers regardless of thread count
/// or platform.
class Philox {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream = 0);

  /// Raw block function, exposed for known-answer tests.
  static Counter block(Counter ctr, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller (deterministic, unlike std::normal_distribution).
  double normal();
  /// +1 or -1 with equal probability.
  double rademacher();

 private:
  void refill();

  Key key_{};
  Counter counter_{};
  Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kdisc
