#pragma once

// 802.11g OFDM mode table, Gray constellation mapping, max-log soft
// demapping and frequency-domain packet assembly. The simulation never
// leaves the frequency domain: one OFDM symbol is 64 subcarrier values.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "btcoex/error.hpp"
#include "btcoex/phy_bits.hpp"
#include "btcoex/random.hpp"

namespace btcoex {

using cplx = std::complex<double>;

inline constexpr int kNumSubcarriers = 64;
inline constexpr int kNumData = 48;
inline constexpr int kServiceBits = 16;
inline constexpr double kSubcarrierSpacingMhz = 20.0 / 64.0;
inline constexpr double kSymbolDurationUs = 4.0;

enum class Modulation { kBpsk, kQpsk, kQam16, kQam64 };

inline std::string to_string(Modulation m) {
  switch (m) {
    case Modulation::kBpsk: return "BPSK";
    case Modulation::kQpsk: return "QPSK";
    case Modulation::kQam16: return "16-QAM";
    case Modulation::kQam64: return "64-QAM";
  }
  return "?";
}

struct ModeParams {
  int rate_mbps;
  Modulation modulation;
  CodeRate code_rate;
  int n_bpsc;
  int n_cbps;
  int n_dbps;

  friend bool operator==(const ModeParams&, const ModeParams&) = default;
};

// The five rates under study.
inline constexpr std::array<ModeParams, 5> kModes{{
    {12, Modulation::kQpsk, CodeRate::kHalf, 2, 96, 48},
    {24, Modulation::kQam16, CodeRate::kHalf, 4, 192, 96},
    {36, Modulation::kQam16, CodeRate::kThreeQuarters, 4, 192, 144},
    {48, Modulation::kQam64, CodeRate::kTwoThirds, 6, 288, 192},
    {54, Modulation::kQam64, CodeRate::kThreeQuarters, 6, 288, 216},
}};

// Supported by the mapper and interleaver, never swept.
inline constexpr ModeParams kBpsk6{6, Modulation::kBpsk, CodeRate::kHalf, 1, 48, 24};

inline const ModeParams& mode_for_rate(int rate_mbps) {
  for (const auto& m : kModes) {
    if (m.rate_mbps == rate_mbps) return m;
  }
  throw InvalidInput("unsupported rate " + std::to_string(rate_mbps) + " Mb/s");
}

// ---------------------------------------------------------------------------
// Subcarrier geometry. Index k runs over -32..31; k = 0 is DC.

inline constexpr std::array<int, 4> kPilotSubcarriers{-21, -7, 7, 21};

inline constexpr bool is_pilot(int k) {
  return k == -21 || k == -7 || k == 7 || k == 21;
}

inline constexpr bool is_occupied(int k) { return k != 0 && k >= -26 && k <= 26; }

inline constexpr bool is_data(int k) { return is_occupied(k) && !is_pilot(k); }

// Data subcarriers in mapping order, -26 upwards.
inline constexpr std::array<int, kNumData> kDataSubcarriers = [] {
  std::array<int, kNumData> out{};
  int n = 0;
  for (int k = -26; k <= 26; ++k) {
    if (is_data(k)) out[n++] = k;
  }
  return out;
}();

// Position of subcarrier k in a 64-point DFT output.
inline constexpr int dft_bin(int k) { return (k + kNumSubcarriers) % kNumSubcarriers; }

inline constexpr double subcarrier_offset_mhz(int k) { return k * kSubcarrierSpacingMhz; }

using OfdmSymbol = std::array<cplx, kNumSubcarriers>;

struct SubcarrierGrid {
  std::vector<OfdmSymbol> symbols;  // cell [s][k + 32]

  std::size_t n_symbols() const { return symbols.size(); }
  cplx& at(std::size_t sym, int k) { return symbols[sym][static_cast<std::size_t>(k + 32)]; }
  const cplx& at(std::size_t sym, int k) const {
    return symbols[sym][static_cast<std::size_t>(k + 32)];
  }
};

// Per-(symbol, data subcarrier) erasure flags; the inner index follows
// kDataSubcarriers.
struct ErasureMask {
  std::vector<std::array<bool, kNumData>> cells;

  static ErasureMask none(std::size_t n_symbols) {
    ErasureMask m;
    m.cells.resize(n_symbols);
    for (auto& row : m.cells) row.fill(false);
    return m;
  }
  std::size_t n_symbols() const { return cells.size(); }
};

// ---------------------------------------------------------------------------
// Constellations. Square QAM is two Gray-coded PAM axes; b0.. go to I and
// the second half of the label goes to Q.

namespace detail {

struct Axis {
  int bits;                      // bits per axis
  std::array<double, 8> level;   // indexed by axis label, MSB first
  double scale;                  // unit average symbol energy
};

inline const Axis& axis_for(Modulation m) {
  // QPSK and BPSK send bit 0 as +1 so that a positive LLR sits on the
  // positive real axis. 16/64-QAM follow the 802.11 Gray tables.
  static const Axis kBpsk{1, {1, -1}, 1.0};
  static const Axis kQpsk{1, {1, -1}, 1.0 / std::sqrt(2.0)};
  static const Axis kQam16{2, {-3, -1, 3, 1}, 1.0 / std::sqrt(10.0)};
  static const Axis kQam64{3, {-7, -5, -1, -3, 7, 5, 1, 3}, 1.0 / std::sqrt(42.0)};
  switch (m) {
    case Modulation::kBpsk: return kBpsk;
    case Modulation::kQpsk: return kQpsk;
    case Modulation::kQam16: return kQam16;
    case Modulation::kQam64: return kQam64;
  }
  return kQpsk;
}

inline bool has_quadrature(Modulation m) { return m != Modulation::kBpsk; }

}  // namespace detail

// Maps n_bpsc bits (first bit first) to one unit-energy constellation point.
inline cplx map_point(std::span<const std::uint8_t> bits, Modulation m) {
  const auto& ax = detail::axis_for(m);
  auto label = [&](std::size_t first) {
    unsigned v = 0;
    for (int b = 0; b < ax.bits; ++b) v = (v << 1) | (bits[first + b] & 1u);
    return v;
  };
  const double i = ax.level[label(0)];
  const double q = detail::has_quadrature(m) ? ax.level[label(ax.bits)] : 0.0;
  return {i * ax.scale, q * ax.scale};
}

// Coded (already interleaved) bits onto data subcarriers. Pilots carry +1.
inline SubcarrierGrid map_symbols(std::span<const std::uint8_t> coded, const ModeParams& mode) {
  if (coded.size() % static_cast<std::size_t>(mode.n_cbps) != 0) {
    throw InvalidInput("coded length " + std::to_string(coded.size()) +
                       " is not a multiple of n_cbps " + std::to_string(mode.n_cbps));
  }
  SubcarrierGrid grid;
  const std::size_t n_sym = coded.size() / mode.n_cbps;
  grid.symbols.assign(n_sym, OfdmSymbol{});
  std::size_t pos = 0;
  for (std::size_t s = 0; s < n_sym; ++s) {
    for (int k : kDataSubcarriers) {
      grid.at(s, k) = map_point(coded.subspan(pos, mode.n_bpsc), mode.modulation);
      pos += mode.n_bpsc;
    }
    for (int k : kPilotSubcarriers) grid.at(s, k) = 1.0;
  }
  return grid;
}

namespace detail {

// Max-log LLRs for one PAM axis; out receives ax.bits values.
inline void axis_llr(double y, double inv_var, const Axis& ax, double* out) {
  const int n_levels = 1 << ax.bits;
  for (int b = 0; b < ax.bits; ++b) {
    double d0 = std::numeric_limits<double>::infinity();
    double d1 = std::numeric_limits<double>::infinity();
    for (int l = 0; l < n_levels; ++l) {
      const double d = y - ax.level[l] * ax.scale;
      const double dd = d * d;
      if ((l >> (ax.bits - 1 - b)) & 1) {
        d1 = std::min(d1, dd);
      } else {
        d0 = std::min(d0, dd);
      }
    }
    out[b] = (d1 - d0) * inv_var;
  }
}

}  // namespace detail

// Soft bits for every data cell in mapping order. h is the per-subcarrier
// channel in DFT bin order (see dft_bin). Masked cells yield n_bpsc erased
// soft bits with value 0.
inline std::vector<SoftBit> demap_soft(const SubcarrierGrid& grid, std::span<const cplx> h,
                                       double noise_var, const ModeParams& mode,
                                       const ErasureMask& mask) {
  if (h.size() != kNumSubcarriers) throw InvalidInput("channel must have 64 subcarrier gains");
  if (mask.n_symbols() != grid.n_symbols()) throw InvalidInput("mask/grid symbol count mismatch");
  if (!(noise_var > 0.0)) throw InvalidInput("noise variance must be positive");

  const auto& ax = detail::axis_for(mode.modulation);
  const bool quad = detail::has_quadrature(mode.modulation);
  std::vector<SoftBit> out;
  out.reserve(grid.n_symbols() * kNumData * mode.n_bpsc);
  std::array<double, 8> llr{};

  for (std::size_t s = 0; s < grid.n_symbols(); ++s) {
    for (int d = 0; d < kNumData; ++d) {
      if (mask.cells[s][d]) {
        out.insert(out.end(), mode.n_bpsc, SoftBit{0.0, true});
        continue;
      }
      const int k = kDataSubcarriers[d];
      const cplx hk = h[dft_bin(k)];
      const double g2 = std::norm(hk);
      if (g2 == 0.0) {
        throw DegenerateChannel("zero channel gain on data subcarrier " + std::to_string(k));
      }
      const cplx y = grid.at(s, k) / hk;
      const double inv_var = g2 / noise_var;  // effective noise noise_var / |h|^2
      detail::axis_llr(y.real(), inv_var, ax, llr.data());
      if (quad) detail::axis_llr(y.imag(), inv_var, ax, llr.data() + ax.bits);
      for (int b = 0; b < mode.n_bpsc; ++b) out.push_back({llr[b], false});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Packet assembly: SERVICE + payload + tail + pad, encode, puncture,
// interleave per symbol, map.

inline int symbols_for_payload(int payload_octets, const ModeParams& mode) {
  const int bits = kServiceBits + 8 * payload_octets + kTailBits;
  return (bits + mode.n_dbps - 1) / mode.n_dbps;
}

inline double packet_duration_us(int n_sym) { return kSymbolDurationUs * n_sym; }

struct TxPacket {
  Bits info_bits;  // n_sym * n_dbps bits
  SubcarrierGrid grid;
  int n_sym = 0;
};

// Payload bits only, out of a full info-bit vector.
inline std::span<const std::uint8_t> payload_view(std::span<const std::uint8_t> info,
                                                  int payload_octets) {
  return info.subspan(kServiceBits, static_cast<std::size_t>(8 * payload_octets));
}

// Interleaves each n_cbps block of an already punctured stream.
inline Bits interleave_stream(std::span<const std::uint8_t> punctured, const ModeParams& mode) {
  Bits out;
  out.reserve(punctured.size());
  for (std::size_t pos = 0; pos < punctured.size(); pos += mode.n_cbps) {
    auto block = interleave(punctured.subspan(pos, mode.n_cbps), mode.n_cbps, mode.n_bpsc);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

inline TxPacket assemble_packet(int payload_octets, const ModeParams& mode, RandomStream& rng) {
  if (payload_octets < 1) throw InvalidInput("payload must be at least one octet");
  TxPacket pkt;
  pkt.n_sym = symbols_for_payload(payload_octets, mode);
  pkt.info_bits.assign(static_cast<std::size_t>(pkt.n_sym) * mode.n_dbps, 0);
  for (int i = 0; i < 8 * payload_octets; ++i) pkt.info_bits[kServiceBits + i] = rng.bit();

  const Bits coded = conv_encode(pkt.info_bits);
  const Bits punctured = puncture(coded, mode.code_rate);
  pkt.grid = map_symbols(interleave_stream(punctured, mode), mode);
  return pkt;
}

inline TxPacket assemble_packet(int payload_octets, const ModeParams& mode, std::uint64_t seed) {
  RandomStream rng(seed);
  return assemble_packet(payload_octets, mode, rng);
}

}  // namespace btcoex
