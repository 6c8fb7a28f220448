#pragma once

// Bit-level FEC pipeline of the 802.11 OFDM PHY: K=7 convolutional code,
// puncturing, per-symbol interleaving and a soft-decision Viterbi decoder
// that treats erased positions as zero-information.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "btcoex/error.hpp"

namespace btcoex {

using Bits = std::vector<std::uint8_t>;

enum class CodeRate { kHalf, kTwoThirds, kThreeQuarters };

inline std::string to_string(CodeRate r) {
  switch (r) {
    case CodeRate::kHalf: return "1/2";
    case CodeRate::kTwoThirds: return "2/3";
    case CodeRate::kThreeQuarters: return "3/4";
  }
  return "?";
}

// Tail length of the K=7 mother code.
inline constexpr int kTailBits = 6;

struct CodeConfig {
  int constraint_length = 7;
  // Octal 133 and 171. Bit 6 taps the current input, bit 0 the oldest delay.
  std::array<unsigned, 2> generators{0133, 0171};

  void validate() const {
    if (constraint_length != 7) throw InvalidInput("constraint length must be 7");
    for (unsigned g : generators) {
      if (g >= (1u << 7)) throw InvalidInput("generator has more than 7 taps");
      if (!(g & 1u) || !(g & (1u << 6))) throw InvalidInput("generator must tap input and oldest delay");
    }
  }
};

// Transmit masks over one puncturing period of the rate-1/2 stream A0 B0 A1 B1 ...
inline std::span<const std::uint8_t> puncture_mask(CodeRate rate) {
  static constexpr std::array<std::uint8_t, 2> kHalf{1, 1};
  static constexpr std::array<std::uint8_t, 4> kTwoThirds{1, 1, 1, 0};
  static constexpr std::array<std::uint8_t, 6> kThreeQuarters{1, 1, 1, 0, 0, 1};
  switch (rate) {
    case CodeRate::kHalf: return kHalf;
    case CodeRate::kTwoThirds: return kTwoThirds;
    case CodeRate::kThreeQuarters: return kThreeQuarters;
  }
  return kHalf;
}

inline int kept_per_period(CodeRate rate) {
  int n = 0;
  for (auto b : puncture_mask(rate)) n += b;
  return n;
}

// Positive value favors bit 0. An erased bit contributes nothing to any
// path metric regardless of its value.
struct SoftBit {
  double value = 0.0;
  bool erased = false;

  friend bool operator==(const SoftBit&, const SoftBit&) = default;
};

namespace detail {

// Output pair for a 7-bit register (bit 6 = current input).
struct BranchTable {
  std::array<std::uint8_t, 128> out0{};
  std::array<std::uint8_t, 128> out1{};

  explicit BranchTable(const CodeConfig& cfg) {
    for (unsigned r = 0; r < 128; ++r) {
      out0[r] = static_cast<std::uint8_t>(std::popcount(r & cfg.generators[0]) & 1);
      out1[r] = static_cast<std::uint8_t>(std::popcount(r & cfg.generators[1]) & 1);
    }
  }
};

}  // namespace detail

// Rate-1/2 encoding from the all-zero state. The caller appends the tail.
inline Bits conv_encode(std::span<const std::uint8_t> info, const CodeConfig& cfg = {}) {
  cfg.validate();
  const detail::BranchTable table(cfg);
  Bits out;
  out.reserve(2 * info.size());
  unsigned state = 0;  // bit 5 = most recent input
  for (auto b : info) {
    const unsigned reg = ((b & 1u) << 6) | state;
    out.push_back(table.out0[reg]);
    out.push_back(table.out1[reg]);
    state = reg >> 1;
  }
  return out;
}

inline Bits puncture(std::span<const std::uint8_t> coded, CodeRate rate) {
  const auto mask = puncture_mask(rate);
  if (coded.size() % mask.size() != 0) {
    throw InvalidInput("coded length " + std::to_string(coded.size()) +
                       " is not a multiple of the puncture period");
  }
  Bits out;
  out.reserve(coded.size());
  for (std::size_t i = 0; i < coded.size(); ++i) {
    if (mask[i % mask.size()]) out.push_back(coded[i]);
  }
  return out;
}

// Punctured positions come back as erasures, indistinguishable from
// interference erasures to the decoder.
inline std::vector<SoftBit> depuncture(std::span<const SoftBit> soft, CodeRate rate) {
  const auto mask = puncture_mask(rate);
  const auto kept = static_cast<std::size_t>(kept_per_period(rate));
  if (soft.size() % kept != 0) {
    throw InvalidInput("soft length " + std::to_string(soft.size()) +
                       " is inconsistent with the puncture mask");
  }
  std::vector<SoftBit> out;
  out.reserve(soft.size() / kept * mask.size());
  std::size_t in = 0;
  while (in < soft.size()) {
    for (auto m : mask) {
      out.push_back(m ? soft[in++] : SoftBit{0.0, true});
    }
  }
  return out;
}

// Channel position of input bit k under the two-step 802.11 interleaver.
inline int interleaver_index(int k, int n_cbps, int n_bpsc) {
  const int s = std::max(n_bpsc / 2, 1);
  const int i = (n_cbps / 16) * (k % 16) + k / 16;
  return s * (i / s) + (i + n_cbps - (16 * i) / n_cbps) % s;
}

namespace detail {

inline void check_block(std::size_t size, int n_cbps, int n_bpsc) {
  if (n_cbps <= 0 || n_cbps % 16 != 0 || n_bpsc <= 0) {
    throw InvalidInput("invalid interleaver geometry");
  }
  if (size != static_cast<std::size_t>(n_cbps)) {
    throw InvalidInput("interleaver block length " + std::to_string(size) +
                       " != n_cbps " + std::to_string(n_cbps));
  }
}

}  // namespace detail

template <typename T>
std::vector<T> interleave(std::span<const T> block, int n_cbps, int n_bpsc) {
  detail::check_block(block.size(), n_cbps, n_bpsc);
  std::vector<T> out(block.size());
  for (int k = 0; k < n_cbps; ++k) out[interleaver_index(k, n_cbps, n_bpsc)] = block[k];
  return out;
}

template <typename T>
std::vector<T> deinterleave(std::span<const T> block, int n_cbps, int n_bpsc) {
  detail::check_block(block.size(), n_cbps, n_bpsc);
  std::vector<T> out(block.size());
  for (int k = 0; k < n_cbps; ++k) out[k] = block[interleaver_index(k, n_cbps, n_bpsc)];
  return out;
}

template <typename T>
std::vector<T> interleave(const std::vector<T>& block, int n_cbps, int n_bpsc) {
  return interleave(std::span<const T>(block), n_cbps, n_bpsc);
}

template <typename T>
std::vector<T> deinterleave(const std::vector<T>& block, int n_cbps, int n_bpsc) {
  return deinterleave(std::span<const T>(block), n_cbps, n_bpsc);
}

struct ViterbiResult {
  Bits bits;      // info bits, tail stripped
  double metric;  // path metric of the survivor ending in state 0
};

// Maximum-metric path over the 64-state trellis, zero start and zero end
// state, full-sequence traceback. Ties go to the lower-index predecessor,
// so an all-erased input decodes to all zeros.
inline ViterbiResult viterbi_decode_with_metric(std::span<const SoftBit> soft,
                                                const CodeConfig& cfg = {}) {
  cfg.validate();
  if (soft.size() % 2 != 0) throw InvalidInput("soft input length must be even");
  const std::size_t steps = soft.size() / 2;
  if (steps < static_cast<std::size_t>(kTailBits)) {
    throw InvalidInput("soft input shorter than the code tail");
  }

  constexpr int kStates = 64;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const detail::BranchTable table(cfg);

  std::array<double, kStates> metric;
  std::array<double, kStates> next;
  metric.fill(kNegInf);
  metric[0] = 0.0;
  std::vector<std::uint64_t> decisions(steps);  // bit s set: odd predecessor survived

  for (std::size_t t = 0; t < steps; ++t) {
    const SoftBit& a = soft[2 * t];
    const SoftBit& b = soft[2 * t + 1];
    const double va = a.erased ? 0.0 : a.value;
    const double vb = b.erased ? 0.0 : b.value;
    // metric for coded pair (c0, c1) = (c0 ? -va : va) + (c1 ? -vb : vb)
    const std::array<double, 4> bm{va + vb, va - vb, -va + vb, -va - vb};

    std::uint64_t dec = 0;
    for (int ns = 0; ns < kStates; ++ns) {
      const unsigned u = static_cast<unsigned>(ns) >> 5;
      const unsigned p0 = (static_cast<unsigned>(ns) & 31u) << 1;
      const unsigned p1 = p0 | 1u;
      const unsigned r0 = (u << 6) | p0;
      const unsigned r1 = (u << 6) | p1;
      const double m0 = metric[p0] + bm[table.out0[r0] * 2 + table.out1[r0]];
      const double m1 = metric[p1] + bm[table.out0[r1] * 2 + table.out1[r1]];
      if (m1 > m0) {
        next[ns] = m1;
        dec |= std::uint64_t{1} << ns;
      } else {
        next[ns] = m0;
      }
    }
    decisions[t] = dec;
    metric = next;
  }

  Bits path(steps);
  unsigned s = 0;
  for (std::size_t t = steps; t-- > 0;) {
    path[t] = static_cast<std::uint8_t>(s >> 5);
    s = ((s & 31u) << 1) | static_cast<unsigned>((decisions[t] >> s) & 1u);
  }
  path.resize(steps - kTailBits);
  return {std::move(path), metric[0]};
}

inline Bits viterbi_decode(std::span<const SoftBit> soft, const CodeConfig& cfg = {}) {
  return viterbi_decode_with_metric(soft, cfg).bits;
}

}  // namespace btcoex
