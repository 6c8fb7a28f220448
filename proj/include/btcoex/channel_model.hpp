#pragma once

// Block-fading Rayleigh multipath with an exponential power delay profile,
// plus AWGN calibrated to Eb/N0.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "btcoex/error.hpp"
#include "btcoex/ofdm_mapper.hpp"
#include "btcoex/random.hpp"

namespace btcoex {

inline constexpr double kCyclicPrefixS = 800e-9;

struct ChannelConfig {
  double tau_rms_s = 100e-9;
  double sample_period_s = 50e-9;
  int n_taps = 16;

  void validate() const {
    if (n_taps < 1) throw InvalidInput("channel needs at least one tap");
    if (!(sample_period_s > 0.0)) throw InvalidInput("sample period must be positive");
    if (!(tau_rms_s >= 0.0)) throw InvalidInput("tau_rms must be non-negative");
    // taps beyond the cyclic prefix would cause ISI the model does not simulate
    if (n_taps * sample_period_s > kCyclicPrefixS * (1.0 + 1e-12)) {
      throw InvalidInput("channel impulse response exceeds the cyclic prefix");
    }
  }

  // sigma_k^2 proportional to exp(-k T / tau_rms), summing to one. A zero
  // tau_rms is the single-tap limit.
  std::vector<double> tap_variances() const {
    validate();
    std::vector<double> v(static_cast<std::size_t>(n_taps), 0.0);
    if (tau_rms_s == 0.0) {
      v[0] = 1.0;
      return v;
    }
    double sum = 0.0;
    for (int k = 0; k < n_taps; ++k) {
      v[k] = std::exp(-k * sample_period_s / tau_rms_s);
      sum += v[k];
    }
    for (auto& x : v) x /= sum;
    return v;
  }
};

// h_freq[k] = sum_m taps[m] exp(-j 2 pi k m / 64), k in DFT bin order.
inline std::array<cplx, kNumSubcarriers> frequency_response(std::span<const cplx> taps) {
  std::array<cplx, kNumSubcarriers> h{};
  for (int k = 0; k < kNumSubcarriers; ++k) {
    cplx acc = 0.0;
    for (std::size_t m = 0; m < taps.size(); ++m) {
      const auto idx = (static_cast<std::size_t>(k) * m) % kNumSubcarriers;
      acc += taps[m] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(idx) /
                                           kNumSubcarriers);
    }
    h[k] = acc;
  }
  return h;
}

struct ChannelRealization {
  std::vector<cplx> taps;
  std::array<cplx, kNumSubcarriers> h_freq{};

  // Gain of subcarrier k in -32..31.
  cplx gain(int k) const { return h_freq[dft_bin(k)]; }
};

inline ChannelRealization flat_channel() {
  ChannelRealization ch;
  ch.taps = {1.0};
  ch.h_freq.fill(1.0);
  return ch;
}

inline ChannelRealization draw_channel(const ChannelConfig& cfg, RandomStream& rng) {
  const auto var = cfg.tap_variances();
  ChannelRealization ch;
  ch.taps.reserve(var.size());
  for (double v : var) ch.taps.push_back(rng.complex_normal(v));
  ch.h_freq = frequency_response(ch.taps);
  return ch;
}

inline void apply_channel(SubcarrierGrid& grid, const ChannelRealization& ch) {
  for (auto& sym : grid.symbols) {
    for (int k = -32; k < 32; ++k) sym[k + 32] *= ch.gain(k);
  }
}

// Per-subcarrier complex noise variance for a given Eb/N0, with unit
// energy data subcarriers and n_dbps information bits per 48 data cells.
inline double noise_variance(double ebn0_db, const ModeParams& mode) {
  return (static_cast<double>(kNumData) / mode.n_dbps) * std::pow(10.0, -ebn0_db / 10.0);
}

// Adds CN(0, n0) to every occupied subcarrier cell. n0 = 0 leaves the grid untouched.
inline SubcarrierGrid add_noise(SubcarrierGrid grid, double n0, RandomStream& rng) {
  if (!(n0 >= 0.0)) throw InvalidInput("noise variance must be non-negative");
  if (n0 == 0.0) return grid;
  for (std::size_t s = 0; s < grid.n_symbols(); ++s) {
    for (int k = -26; k <= 26; ++k) {
      if (is_occupied(k)) grid.at(s, k) += rng.complex_normal(n0);
    }
  }
  return grid;
}

}  // namespace btcoex
