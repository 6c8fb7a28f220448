#pragma once

// Symbol erasures: on every OFDM symbol hit by a burst, the E data
// subcarriers nearest the BT centre frequency are erased before decoding.
// The erasure itself happens in demap_soft via the ErasureMask.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "btcoex/bt_interferer.hpp"
#include "btcoex/error.hpp"
#include "btcoex/ofdm_mapper.hpp"

namespace btcoex {

struct ErasurePolicy {
  int n_erasures = 0;
  // Added to the receiver's belief of f_bt - wlan_center; zero means the
  // receiver knows the hop frequency exactly.
  double frequency_error_mhz = 0.0;

  void validate() const {
    if (n_erasures < 0 || n_erasures > kNumData) {
      throw InvalidInput("erasure count must be in [0, 48]");
    }
  }
};

// Indices into kDataSubcarriers of the `count` data subcarriers closest to
// offset_mhz, closest first; equal distances prefer the lower subcarrier.
inline std::vector<int> nearest_data_subcarriers(double offset_mhz, int count) {
  std::array<int, kNumData> order;
  std::iota(order.begin(), order.end(), 0);
  auto dist = [&](int d) { return std::abs(subcarrier_offset_mhz(kDataSubcarriers[d]) - offset_mhz); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = dist(a);
    const double db = dist(b);
    if (std::abs(da - db) > 1e-12) return da < db;
    return kDataSubcarriers[a] < kDataSubcarriers[b];
  });
  const int n = std::clamp(count, 0, kNumData);
  return {order.begin(), order.begin() + n};
}

inline ErasureMask build_mask(const BtEpisode& ep, const ErasurePolicy& policy,
                              std::size_t n_symbols, const BtConfig& cfg = {}) {
  policy.validate();
  if (ep.per_symbol.size() < n_symbols) throw InvalidInput("episode shorter than grid");
  auto mask = ErasureMask::none(n_symbols);
  if (policy.n_erasures == 0) return mask;
  for (std::size_t s = 0; s < n_symbols; ++s) {
    const auto& so = ep.per_symbol[s];
    if (so.overlap_fraction <= 0.0) continue;
    const double offset = so.f_bt_mhz - cfg.wlan_center_mhz + policy.frequency_error_mhz;
    for (int d : nearest_data_subcarriers(offset, policy.n_erasures)) mask.cells[s][d] = true;
  }
  return mask;
}

}  // namespace btcoex
