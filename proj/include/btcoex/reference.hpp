#pragma once

// Slow reference implementations that share no code path with the fast
// ones they check: a tap-list convolutional encoder, exhaustive ML
// decoding, and the Gaussian tail function.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "btcoex/phy_bits.hpp"

namespace btcoex::reference {

// 133 and 171 octal written out tap by tap, current input first.
inline constexpr std::array<std::uint8_t, 7> kTapsA{1, 0, 1, 1, 0, 1, 1};
inline constexpr std::array<std::uint8_t, 7> kTapsB{1, 1, 1, 1, 0, 0, 1};

inline Bits encode(std::span<const std::uint8_t> info) {
  Bits out;
  for (std::size_t n = 0; n < info.size(); ++n) {
    std::uint8_t a = 0;
    std::uint8_t b = 0;
    for (std::size_t d = 0; d < 7 && d <= n; ++d) {
      a ^= kTapsA[d] & info[n - d];
      b ^= kTapsB[d] & info[n - d];
    }
    out.push_back(a);
    out.push_back(b);
  }
  return out;
}

inline double path_metric(std::span<const std::uint8_t> codeword, std::span<const SoftBit> soft) {
  double m = 0.0;
  for (std::size_t i = 0; i < soft.size(); ++i) {
    if (soft[i].erased) continue;
    m += codeword[i] ? -soft[i].value : soft[i].value;
  }
  return m;
}

struct MlResult {
  Bits message;
  double metric;
};

// Exhaustive search over all 2^k messages (each followed by six zero tail
// bits) for the codeword with the largest metric against `soft`.
inline MlResult brute_force_ml(std::span<const SoftBit> soft, int k) {
  MlResult best{{}, -std::numeric_limits<double>::infinity()};
  Bits msg(static_cast<std::size_t>(k + kTailBits), 0);
  for (std::uint32_t v = 0; v < (1u << k); ++v) {
    for (int i = 0; i < k; ++i) msg[i] = (v >> i) & 1u;
    const double m = path_metric(encode(msg), soft);
    if (m > best.metric) best = {Bits(msg.begin(), msg.begin() + k), m};
  }
  return best;
}

inline double qfunc(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace btcoex::reference
