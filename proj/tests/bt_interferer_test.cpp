#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "btcoex/bt_interferer.hpp"
#include "btcoex/sim_engine.hpp"

namespace btcoex {
namespace {

Bits random_bits(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  Bits b(n);
  for (auto& x : b) x = rng.bit();
  return b;
}

int nearest_subcarrier(double offset_mhz) {
  int best = -32;
  for (int k = -32; k < 32; ++k) {
    if (std::abs(k * kSubcarrierSpacingMhz - offset_mhz) <
        std::abs(best * kSubcarrierSpacingMhz - offset_mhz)) {
      best = k;
    }
  }
  return best;
}

TEST(BtConfig, NominalTiming) {
  const BtConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.hop_rate_hz * cfg.slot_us, 1e6);
  EXPECT_DOUBLE_EQ(cfg.duty_cycle(), 0.5856);
  EXPECT_EQ(cfg.burst_bits(), 366);
}

TEST(BtConfig, SixteenInBandChannels) {
  const BtConfig cfg;
  EXPECT_EQ(in_band_channel_count(cfg), 16);
  EXPECT_TRUE(in_occupied_band(2433.0, cfg));
  EXPECT_TRUE(in_occupied_band(2448.0, cfg));
  EXPECT_FALSE(in_occupied_band(2449.0, cfg));
  EXPECT_FALSE(in_occupied_band(2432.0, cfg));
}

TEST(BtConfig, EdgeChannelClipsOverlapSet) {
  BtConfig cfg;
  cfg.wlan_center_mhz = 2407.0;  // band [2399, 2415) loses the three hops below 2402
  EXPECT_EQ(in_band_channel_count(cfg), 13);
}

TEST(Gfsk, ConstantEnvelope) {
  const BtConfig cfg;
  const auto s = gfsk_baseband(random_bits(366, 1), cfg);
  ASSERT_EQ(s.size(), 366u * 20u);
  for (const auto& x : s) EXPECT_NEAR(std::abs(x), 1.0, 1e-12);
}

TEST(Gfsk, RejectsShortBurst) {
  EXPECT_THROW(gfsk_baseband(random_bits(365, 1), BtConfig{}), InvalidInput);
}

TEST(Gfsk, AllOnesSteadyStateFrequency) {
  const BtConfig cfg;
  const auto s = gfsk_baseband(Bits(400, 1), cfg);
  // phase slope in the middle of the burst, in Hz
  const std::size_t a = 4000;
  const std::size_t b = 4200;
  double dphi = 0.0;
  for (std::size_t i = a; i < b; ++i) dphi += std::arg(s[i + 1] * std::conj(s[i]));
  const double f_hz = dphi / (b - a) / (2.0 * std::numbers::pi) * cfg.sample_rate_hz();
  EXPECT_NEAR(f_hz, 160e3, 1.0);
}

TEST(Gfsk, NinetyNinePercentBandwidth) {
  const BtConfig cfg;
  const auto s = gfsk_baseband(random_bits(10000, 2), cfg);
  std::size_t n = 1;
  while (n < s.size()) n <<= 1;
  std::vector<cplx> in(s.begin(), s.end());
  in.resize(n, 0.0);
  std::vector<cplx> spec;
  Eigen::FFT<double> fft;
  fft.fwd(spec, in);
  // centred periodogram
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = std::norm(spec[(i + n / 2) % n]);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  double c = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c += p[i];
    if (c < 0.005 * total) lo = i + 1;
    if (c < 0.995 * total) hi = i + 1;
  }
  const double bw_mhz = static_cast<double>(hi - lo) * cfg.sample_rate_hz() / n * 1e-6;
  EXPECT_GE(bw_mhz, 0.8);
  EXPECT_LE(bw_mhz, 1.2);
}

TEST(Footprint, InfiniteSirIsZero) {
  BtConfig cfg;
  cfg.sir_db = std::numeric_limits<double>::infinity();
  const auto fp = spectral_footprint(gfsk_baseband(random_bits(366, 3), cfg), 2441.0, cfg);
  for (const auto& x : fp) EXPECT_EQ(x, cplx(0.0, 0.0));
}

TEST(Footprint, RejectsOutOfBandCentre) {
  const BtConfig cfg;
  const auto burst = gfsk_baseband(random_bits(366, 3), cfg);
  EXPECT_THROW(spectral_footprint(burst, 2401.0, cfg), InvalidInput);
  EXPECT_THROW(spectral_footprint(burst, 2481.0, cfg), InvalidInput);
  EXPECT_THROW(spectral_footprint({}, 2441.0, cfg), InvalidInput);
}

TEST(Footprint, PeaksAtNearestSubcarrierAcrossAllHops) {
  const BtConfig cfg;
  const auto burst = gfsk_baseband(random_bits(10000, 4), cfg);
  int nonzero = 0;
  for (int ch = 0; ch < kBtChannels; ++ch) {
    const double f = bt_channel_mhz(ch);
    const auto fp = spectral_footprint(burst, f, cfg);
    const auto it = std::max_element(fp.begin(), fp.end(),
                                      [](const cplx& a, const cplx& b) { return std::norm(a) < std::norm(b); });
    if (std::norm(*it) == 0.0) {
      // hops 20 MHz or more away leave nothing inside the sampled window
      EXPECT_GE(std::abs(f - cfg.wlan_center_mhz), 20.0);
      continue;
    }
    ++nonzero;
    const int k_max = static_cast<int>(it - fp.begin()) - 32;
    EXPECT_EQ(k_max, nearest_subcarrier(f - cfg.wlan_center_mhz)) << "hop " << f;
  }
  EXPECT_GE(nonzero, 39);
}

TEST(Footprint, TotalPowerFollowsSir) {
  const BtConfig cfg;  // 0 dB
  RandomStream rng(5);
  double sum = 0.0;
  const int bursts = 20;
  for (int i = 0; i < bursts; ++i) {
    const double f = 2433.0 + static_cast<double>(rng.below(16));
    const auto fp = spectral_footprint(gfsk_baseband(random_bits(366, 100 + i), cfg), f, cfg,
                                       2.0 * std::numbers::pi * rng.uniform());
    for (const auto& x : fp) sum += std::norm(x);
  }
  EXPECT_NEAR(sum / bursts, 48.0, 0.05 * 48.0);

  BtConfig weaker = cfg;
  weaker.sir_db = 10.0;
  const auto burst = gfsk_baseband(random_bits(366, 6), cfg);
  double p0 = 0.0, p10 = 0.0;
  for (const auto& x : spectral_footprint(burst, 2441.0, cfg)) p0 += std::norm(x);
  for (const auto& x : spectral_footprint(burst, 2441.0, weaker)) p10 += std::norm(x);
  EXPECT_NEAR(p10 / p0, 0.1, 1e-12);
}

TEST(Footprint, LocalisedAroundHopFrequency) {
  const BtConfig cfg;
  const auto burst = gfsk_baseband(random_bits(366, 7), cfg);
  for (int off = -8; off < 8; ++off) {
    const double f = cfg.wlan_center_mhz + off;
    const auto fp = spectral_footprint(burst, f, cfg);
    const int kn = nearest_subcarrier(off);
    double near = 0.0, total = 0.0;
    for (int k = -32; k < 32; ++k) {
      total += std::norm(fp[k + 32]);
      if (std::abs(k - kn) <= 2) near += std::norm(fp[k + 32]);
    }
    EXPECT_GE(near / total, 0.6) << "offset " << off;
  }
}

TEST(Footprint, CarrierPhaseRotatesEveryCell) {
  const BtConfig cfg;
  const auto burst = gfsk_baseband(random_bits(366, 8), cfg);
  const auto a = spectral_footprint(burst, 2440.0, cfg, 0.0);
  const auto b = spectral_footprint(burst, 2440.0, cfg, 1.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_LE(std::abs(b[k] - a[k] * std::polar(1.0, 1.0)), 1e-9 * (1.0 + std::abs(a[k])));
  }
}

TEST(Episode, InBandHopProbability) {
  const BtConfig cfg;
  RandomStream rng(9);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += in_occupied_band(bt_channel_mhz(draw_hop_channel(rng)), cfg);
  EXPECT_NEAR(static_cast<double>(hits) / n, 16.0 / 79.0, 0.003);
}

TEST(Episode, HopChannelsUniform) {
  RandomStream rng(10);
  const int n = 1000000;
  std::array<int, kBtChannels> counts{};
  for (int i = 0; i < n; ++i) ++counts[draw_hop_channel(rng)];
  const double expected = static_cast<double>(n) / kBtChannels;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 109.958);  // chi-square 99th percentile, 78 degrees of freedom
}

TEST(Episode, PacketInsideGapSeesNoBurst) {
  const BtConfig cfg;
  RandomStream rng(11);
  const auto ep = episode_at(400.0, 72.0, 18, cfg, rng);
  EXPECT_EQ(ep.hop_channels.size(), 1u);
  for (const auto& so : ep.per_symbol) {
    EXPECT_EQ(so.time_fraction, 0.0);
    EXPECT_EQ(so.overlap_fraction, 0.0);
  }
  EXPECT_FALSE(ep.collided());
}

TEST(Episode, PartialOverlapFractions) {
  BtConfig cfg;
  RandomStream rng(12);
  // packet starts 2 us before the end of slot 0's burst
  const auto ep = episode_at(364.0, 16.0, 4, cfg, rng, false);
  EXPECT_DOUBLE_EQ(ep.per_symbol[0].time_fraction, 0.5);
  EXPECT_EQ(ep.per_symbol[1].time_fraction, 0.0);
  // straddles into slot 1's burst: [622, 626) overlaps [625, 991) by 1 us
  const auto ep2 = episode_at(610.0, 16.0, 4, cfg, rng, false);
  EXPECT_EQ(ep2.per_symbol[2].time_fraction, 0.0);
  EXPECT_DOUBLE_EQ(ep2.per_symbol[3].time_fraction, 0.25);
  EXPECT_EQ(ep2.per_symbol[3].slot, 1);
}

TEST(Episode, OverlapRequiresInBandHop) {
  const BtConfig cfg;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomStream rng(seed);
    const auto ep = draw_episode(72.0, 18, cfg, rng);
    for (const auto& so : ep.per_symbol) {
      if (so.overlap_fraction > 0.0) {
        EXPECT_GT(so.time_fraction, 0.0);
        EXPECT_TRUE(in_occupied_band(so.f_bt_mhz, cfg));
        EXPECT_DOUBLE_EQ(so.overlap_fraction, so.time_fraction);
      }
      EXPECT_GE(so.time_fraction, 0.0);
      EXPECT_LE(so.time_fraction, 1.0);
    }
    EXPECT_GE(ep.t_dt_us, 0.0);
    EXPECT_LT(ep.t_dt_us, 625.0);
  }
}

TEST(Episode, BinaryOverlapSwitch) {
  BtConfig cfg;
  cfg.binary_overlap = true;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomStream rng(seed);
    for (const auto& so : draw_episode(72.0, 18, cfg, rng, false).per_symbol) {
      EXPECT_TRUE(so.overlap_fraction == 0.0 || so.overlap_fraction == 1.0);
    }
  }
}

TEST(Episode, LongPacketDutyCycle) {
  const BtConfig cfg;
  RandomStream rng(13);
  double covered = 0.0;
  const int n_sym = 2500;  // 10 ms
  for (int i = 0; i < 20; ++i) {
    const auto ep = draw_episode(4.0 * n_sym, n_sym, cfg, rng, false);
    for (const auto& so : ep.per_symbol) covered += so.time_fraction;
  }
  EXPECT_NEAR(covered / (20.0 * n_sym), 0.5856, 0.005);
}

TEST(Episode, CollisionFrequencyMatchesClosedForm) {
  const BtConfig cfg;
  for (int n_sym : {4, 18}) {
    const int n = 60000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      RandomStream rng(77, Stream::kInterferer, static_cast<std::uint64_t>(i));
      hits += draw_episode(4.0 * n_sym, n_sym, cfg, rng, false).collided();
    }
    EXPECT_NEAR(static_cast<double>(hits) / n, analytic_collision_probability(4.0 * n_sym, cfg), 0.01)
        << n_sym;
  }
}

TEST(Episode, Deterministic) {
  const BtConfig cfg;
  RandomStream a(14), b(14);
  const auto e1 = draw_episode(72.0, 18, cfg, a);
  const auto e2 = draw_episode(72.0, 18, cfg, b);
  EXPECT_EQ(e1.t_dt_us, e2.t_dt_us);
  EXPECT_EQ(e1.hop_channels, e2.hop_channels);
  EXPECT_EQ(e1.carrier_phase, e2.carrier_phase);
  EXPECT_EQ(e1.footprints, e2.footprints);
}

TEST(Episode, RejectsInconsistentDuration) {
  RandomStream rng(1);
  EXPECT_THROW(draw_episode(70.0, 18, BtConfig{}, rng), InvalidInput);
}

SubcarrierGrid test_grid(std::size_t n_sym) {
  RandomStream rng(15);
  const auto& mode = mode_for_rate(12);
  Bits bits(n_sym * mode.n_cbps);
  for (auto& b : bits) b = rng.bit();
  return map_symbols(bits, mode);
}

BtEpisode one_burst_episode(std::size_t n_sym, std::size_t hit, double alpha) {
  const BtConfig cfg;
  BtEpisode ep;
  ep.per_symbol.resize(n_sym);
  ep.footprints.resize(1);
  ep.footprints[0] = spectral_footprint(gfsk_baseband(random_bits(366, 16), cfg), 2444.0, cfg, 0.3);
  ep.per_symbol[hit] = {alpha, alpha, 0, 2444.0};
  return ep;
}

TEST(Inject, NoOverlapIsIdentity) {
  const auto grid = test_grid(3);
  BtEpisode ep;
  ep.per_symbol.resize(3);
  const auto out = inject(grid, ep);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(out.symbols[s], grid.symbols[s]);
}

TEST(Inject, FullOverlapAddsFootprint) {
  const auto grid = test_grid(3);
  const auto ep = one_burst_episode(3, 1, 1.0);
  const auto out = inject(grid, ep);
  EXPECT_EQ(out.symbols[0], grid.symbols[0]);
  EXPECT_EQ(out.symbols[2], grid.symbols[2]);
  for (std::size_t k = 0; k < 64; ++k) {
    EXPECT_EQ(out.symbols[1][k], grid.symbols[1][k] + ep.footprints[0][k]);
  }
}

TEST(Inject, HalfOverlapHalvesPower) {
  SubcarrierGrid zero;
  zero.symbols.assign(2, OfdmSymbol{});
  const auto full = inject(zero, one_burst_episode(2, 0, 1.0));
  const auto half = inject(zero, one_burst_episode(2, 0, 0.5));
  double pf = 0.0, ph = 0.0;
  for (std::size_t k = 0; k < 64; ++k) {
    pf += std::norm(full.symbols[0][k]);
    ph += std::norm(half.symbols[0][k]);
  }
  EXPECT_NEAR(ph / pf, 0.5, 1e-12);
}

TEST(Inject, RejectsDimensionMismatch) {
  BtEpisode ep;
  ep.per_symbol.resize(2);
  EXPECT_THROW(inject(test_grid(3), ep), InvalidInput);
}

}  // namespace
}  // namespace btcoex
