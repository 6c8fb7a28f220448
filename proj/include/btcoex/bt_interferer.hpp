#pragma once

// Bluetooth HV1 interferer: GFSK baseband bursts, their spectral footprint
// on the OFDM subcarrier grid, the 1600 hop/s slot timeline and
// per-OFDM-symbol injection in the frequency domain.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "btcoex/error.hpp"
#include "btcoex/ofdm_mapper.hpp"
#include "btcoex/random.hpp"

namespace btcoex {

inline constexpr int kBtChannels = 79;
inline constexpr double kBtFirstChannelMhz = 2402.0;
inline constexpr double kBtLastChannelMhz = 2480.0;

inline constexpr double bt_channel_mhz(int ch) { return kBtFirstChannelMhz + ch; }

struct BtConfig {
  double sir_db = 0.0;  // data-subcarrier power over total BT power; +inf disables
  double wlan_center_mhz = 2441.0;
  double slot_us = 625.0;
  double active_us = 366.0;
  double hop_rate_hz = 1600.0;
  double modulation_index = 0.32;
  double gaussian_bt = 0.5;
  double symbol_rate_hz = 1e6;
  int oversampling = 20;
  // Width of the OFDM band as seen by the 1 MHz hop raster: 52 * 312.5 kHz
  // rounded down to whole hop channels.
  double occupied_band_mhz = 16.0;
  // Any temporal overlap counts as full overlap instead of sqrt(alpha) scaling.
  bool binary_overlap = false;

  void validate() const {
    if (std::abs(hop_rate_hz * slot_us - 1e6) > 1e-6) {
      throw InvalidInput("hop rate must be one hop per slot");
    }
    if (!(active_us > 0.0 && active_us <= slot_us)) throw InvalidInput("invalid active window");
    if (!(modulation_index > 0.0) || !(gaussian_bt > 0.0)) throw InvalidInput("invalid GFSK parameters");
    if (oversampling < 1 || !(symbol_rate_hz > 0.0)) throw InvalidInput("invalid sampling");
  }

  double sample_rate_hz() const { return symbol_rate_hz * oversampling; }
  int burst_bits() const { return static_cast<int>(std::lround(active_us * symbol_rate_hz * 1e-6)); }
  double duty_cycle() const { return active_us / slot_us; }
  // Total BT power on the 64-point grid, relative to one unit data subcarrier.
  double footprint_power() const {
    if (std::isinf(sir_db) && sir_db > 0) return 0.0;
    return kNumData * std::pow(10.0, -sir_db / 10.0);
  }
};

// Hop channel centre inside [center - B/2, center + B/2).
inline bool in_occupied_band(double f_bt_mhz, const BtConfig& cfg) {
  const double off = f_bt_mhz - cfg.wlan_center_mhz;
  return off >= -cfg.occupied_band_mhz / 2.0 && off < cfg.occupied_band_mhz / 2.0;
}

inline int in_band_channel_count(const BtConfig& cfg) {
  int n = 0;
  for (int ch = 0; ch < kBtChannels; ++ch) n += in_occupied_band(bt_channel_mhz(ch), cfg);
  return n;
}

// ---------------------------------------------------------------------------
// GFSK

namespace detail {

// Gaussian pulse-shaping taps over +-3 symbols, unit DC gain.
inline std::vector<double> gaussian_taps(double bt, int os) {
  const double sigma = std::sqrt(std::log(2.0)) / (2.0 * std::numbers::pi * bt);
  const int half = 3 * os;
  std::vector<double> g(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / os;
    g[i + half] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += g[i + half];
  }
  for (auto& x : g) x /= sum;
  return g;
}

}  // namespace detail

// Unit-modulus complex baseband GFSK at oversampling * symbol_rate. A one
// bit deviates by +h/2 * symbol_rate.
inline std::vector<cplx> gfsk_baseband(std::span<const std::uint8_t> bits, const BtConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(bits.size()) < cfg.burst_bits()) {
    throw InvalidInput("GFSK burst needs at least " + std::to_string(cfg.burst_bits()) + " bits");
  }
  const int os = cfg.oversampling;
  const std::size_t n = bits.size() * static_cast<std::size_t>(os);
  const auto g = detail::gaussian_taps(cfg.gaussian_bt, os);
  const int half = static_cast<int>(g.size() / 2);

  std::vector<double> nrz(n);
  for (std::size_t i = 0; i < n; ++i) nrz[i] = bits[i / os] ? 1.0 : -1.0;

  std::vector<cplx> out(n);
  const double step = std::numbers::pi * cfg.modulation_index / os;  // 2 pi (h/2) / os
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (int j = -half; j <= half; ++j) {
      // edges hold the first/last symbol value
      const auto idx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - j, 0,
                                                  static_cast<std::ptrdiff_t>(n) - 1);
      f += g[j + half] * nrz[static_cast<std::size_t>(idx)];
    }
    phase += step * f;
    out[i] = std::polar(1.0, phase);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral footprint

using Footprint = std::array<cplx, kNumSubcarriers>;  // index k + 32

// Burst spectrum on the 64 subcarriers for a hop at f_bt_mhz. Each
// subcarrier's magnitude is the burst energy falling in its 312.5 kHz bin;
// its phase is the spectrum phase at the bin centre, rotated by
// carrier_phase. The whole burst is scaled to cfg.footprint_power(), so
// sum |I_k|^2 equals it up to the (negligible for in-band hops) energy
// that falls outside the 64-subcarrier window.
inline Footprint spectral_footprint(std::span<const cplx> burst, double f_bt_mhz,
                                    const BtConfig& cfg, double carrier_phase = 0.0) {
  if (burst.empty()) throw InvalidInput("empty burst");
  if (!(f_bt_mhz >= kBtFirstChannelMhz && f_bt_mhz <= kBtLastChannelMhz)) {
    throw InvalidInput("BT centre frequency outside 2402..2480 MHz");
  }
  Footprint fp{};
  const double target = cfg.footprint_power();
  if (target == 0.0) return fp;

  std::size_t nfft = 1;
  while (nfft < burst.size()) nfft <<= 1;
  std::vector<cplx> in(burst.begin(), burst.end());
  in.resize(nfft, 0.0);
  std::vector<cplx> spec;
  Eigen::FFT<double> fft;
  fft.fwd(spec, in);

  const double fs_mhz = cfg.sample_rate_hz() * 1e-6;
  const double df = fs_mhz / static_cast<double>(nfft);
  const auto half_n = static_cast<std::ptrdiff_t>(nfft / 2);
  auto bin_of = [&](double f) { return static_cast<std::ptrdiff_t>(std::ceil(f / df - 1e-9)); };
  auto value = [&](std::ptrdiff_t b) {
    return spec[static_cast<std::size_t>(b < 0 ? b + static_cast<std::ptrdiff_t>(nfft) : b)];
  };

  double total = 0.0;
  for (const auto& x : spec) total += std::norm(x);
  if (total == 0.0) return fp;

  const double offset = f_bt_mhz - cfg.wlan_center_mhz;
  std::array<double, kNumSubcarriers> energy{};
  for (int k = -32; k < 32; ++k) {
    // subcarrier frequency relative to the BT carrier
    const double rel = subcarrier_offset_mhz(k) - offset;
    const auto lo = std::max(bin_of(rel - kSubcarrierSpacingMhz / 2), -half_n);
    const auto hi = std::min(bin_of(rel + kSubcarrierSpacingMhz / 2), half_n);
    double e = 0.0;
    for (auto b = lo; b < hi; ++b) e += std::norm(value(b));
    energy[k + 32] = e;
  }

  const double scale = target / total;
  for (int k = -32; k < 32; ++k) {
    const double rel = subcarrier_offset_mhz(k) - offset;
    const auto c = static_cast<std::ptrdiff_t>(std::lround(rel / df));
    const double ph = (c >= -half_n && c < half_n) ? std::arg(value(c)) : 0.0;
    fp[k + 32] = std::polar(std::sqrt(energy[k + 32] * scale), ph + carrier_phase);
  }
  return fp;
}

// ---------------------------------------------------------------------------
// Episode: the interference context of one packet.

struct SymbolOverlap {
  double time_fraction = 0.0;     // share of the 4 us symbol inside an active window
  double overlap_fraction = 0.0;  // alpha; zero unless the burst's hop is in band
  int slot = -1;                  // overlapping slot, -1 if none
  double f_bt_mhz = 0.0;
};

struct BtEpisode {
  double t_dt_us = 0.0;
  std::vector<int> hop_channels;     // per slot touched by the packet
  std::vector<double> hop_freqs_mhz;
  std::vector<double> carrier_phase;
  std::vector<SymbolOverlap> per_symbol;
  std::vector<Footprint> footprints;  // per slot; zero unless some symbol uses it

  bool collided() const {
    return std::any_of(per_symbol.begin(), per_symbol.end(),
                       [](const SymbolOverlap& s) { return s.overlap_fraction > 0.0; });
  }
};

inline int draw_hop_channel(RandomStream& rng) { return static_cast<int>(rng.below(kBtChannels)); }

// Interference context for a packet of n_sym OFDM symbols starting t_dt
// into the BT slot cycle; hops, phases and burst payloads come from rng.
// Footprints are only computed for slots that hit the packet in both time
// and frequency.
inline BtEpisode episode_at(double t_dt_us, double packet_duration_us, int n_sym,
                            const BtConfig& cfg, RandomStream& rng, bool with_footprints = true) {
  cfg.validate();
  if (n_sym < 1 || std::abs(packet_duration_us - kSymbolDurationUs * n_sym) > 1e-9) {
    throw InvalidInput("packet duration must be 4 us per OFDM symbol");
  }
  if (!(t_dt_us >= 0.0 && t_dt_us < cfg.slot_us)) throw InvalidInput("t_dt outside [0, slot)");
  BtEpisode ep;
  ep.t_dt_us = t_dt_us;
  const auto n_slots =
      static_cast<std::size_t>(std::floor((ep.t_dt_us + packet_duration_us) / cfg.slot_us)) + 1;
  ep.hop_channels.resize(n_slots);
  ep.hop_freqs_mhz.resize(n_slots);
  ep.carrier_phase.resize(n_slots);
  for (std::size_t n = 0; n < n_slots; ++n) {
    ep.hop_channels[n] = draw_hop_channel(rng);
    ep.hop_freqs_mhz[n] = bt_channel_mhz(ep.hop_channels[n]);
    ep.carrier_phase[n] = 2.0 * std::numbers::pi * rng.uniform();
  }

  std::vector<bool> used(n_slots, false);
  ep.per_symbol.resize(static_cast<std::size_t>(n_sym));
  for (int i = 0; i < n_sym; ++i) {
    const double start = ep.t_dt_us + kSymbolDurationUs * i;
    const double end = start + kSymbolDurationUs;
    auto& so = ep.per_symbol[i];
    const auto first = static_cast<std::size_t>(std::floor(start / cfg.slot_us));
    // the inter-burst gap exceeds a symbol, so at most one window overlaps
    for (std::size_t n = first; n <= first + 1 && n < n_slots; ++n) {
      const double ws = cfg.slot_us * static_cast<double>(n);
      const double len = std::min(end, ws + cfg.active_us) - std::max(start, ws);
      if (len > 0.0) {
        so.time_fraction = std::min(1.0, len / kSymbolDurationUs);
        so.slot = static_cast<int>(n);
        so.f_bt_mhz = ep.hop_freqs_mhz[n];
        break;
      }
    }
    if (so.slot >= 0 && in_occupied_band(so.f_bt_mhz, cfg)) {
      so.overlap_fraction = cfg.binary_overlap ? 1.0 : so.time_fraction;
      used[static_cast<std::size_t>(so.slot)] = true;
    }
  }

  ep.footprints.assign(n_slots, Footprint{});
  if (with_footprints) {
    const int nbits = cfg.burst_bits();
    Bits payload(static_cast<std::size_t>(nbits));
    for (std::size_t n = 0; n < n_slots; ++n) {
      if (!used[n]) continue;
      for (auto& b : payload) b = rng.bit();
      const auto burst = gfsk_baseband(payload, cfg);
      ep.footprints[n] = spectral_footprint(burst, ep.hop_freqs_mhz[n], cfg, ep.carrier_phase[n]);
    }
  }
  return ep;
}

// As episode_at, with t_dt drawn uniformly over one slot.
inline BtEpisode draw_episode(double packet_duration_us, int n_sym, const BtConfig& cfg,
                              RandomStream& rng, bool with_footprints = true) {
  const double t_dt = cfg.slot_us * rng.uniform();
  return episode_at(t_dt, packet_duration_us, n_sym, cfg, rng, with_footprints);
}

// Adds sqrt(alpha) * I_k to every subcarrier of each overlapped symbol.
inline SubcarrierGrid inject(SubcarrierGrid grid, const BtEpisode& ep) {
  if (ep.per_symbol.size() != grid.n_symbols()) {
    throw InvalidInput("episode covers " + std::to_string(ep.per_symbol.size()) +
                       " symbols, grid has " + std::to_string(grid.n_symbols()));
  }
  for (std::size_t s = 0; s < grid.n_symbols(); ++s) {
    const auto& so = ep.per_symbol[s];
    if (so.overlap_fraction <= 0.0) continue;
    const double amp = std::sqrt(so.overlap_fraction);
    const auto& fp = ep.footprints.at(static_cast<std::size_t>(so.slot));
    for (std::size_t k = 0; k < kNumSubcarriers; ++k) grid.symbols[s][k] += amp * fp[k];
  }
  return grid;
}

}  // namespace btcoex
