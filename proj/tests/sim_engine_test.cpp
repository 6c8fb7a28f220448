#include <gtest/gtest.h>

#include <cmath>

#include "btcoex/sim_engine.hpp"

namespace btcoex {
namespace {

SimPoint clean_point() {
  SimPoint p;
  p.ebn0_db = 60.0;
  p.bt_enabled = false;
  p.flat_channel = true;
  return p;
}

TEST(RunPacket, CleanLinkIsErrorFree) {
  auto p = clean_point();
  for (const auto& mode : kModes) {
    p.mode = mode;
    for (std::uint64_t t = 0; t < 20; ++t) {
      const auto tr = run_packet_trace(p, t);
      EXPECT_FALSE(tr.error) << mode.rate_mbps;
      EXPECT_EQ(tr.decoded.size(), tr.tx.info_bits.size() - kTailBits);
    }
  }
}

TEST(RunPacket, HopelessLinkAlwaysFails) {
  auto p = clean_point();
  p.ebn0_db = -40.0;
  const auto r = estimate_per(p, {25, 1000}, 1);
  EXPECT_EQ(r.trials, 25);
  EXPECT_EQ(r.packet_errors, 25);
  EXPECT_DOUBLE_EQ(r.per, 1.0);
  EXPECT_DOUBLE_EQ(r.ci95.hi, 1.0);
}

TEST(RunPacket, TraceIsReproducible) {
  SimPoint p;
  p.mode = mode_for_rate(36);
  p.ebn0_db = 15.0;
  p.n_erasures = 5;
  const auto a = run_packet_trace(p, 17);
  const auto b = run_packet_trace(p, 17);
  EXPECT_EQ(a.decoded, b.decoded);
  EXPECT_EQ(a.episode.t_dt_us, b.episode.t_dt_us);
  EXPECT_EQ(a.rx.symbols, b.rx.symbols);
  const auto c = run_packet_trace(p, 18);
  EXPECT_NE(a.rx.symbols, c.rx.symbols);
}

TEST(RunPacket, ErasureCountDoesNotChangeTheRandomDraws) {
  SimPoint p;
  p.ebn0_db = 25.0;
  for (std::uint64_t t = 0; t < 30; ++t) {
    p.n_erasures = 0;
    const auto a = run_packet_trace(p, t);
    p.n_erasures = 7;
    const auto b = run_packet_trace(p, t);
    EXPECT_EQ(a.rx.symbols, b.rx.symbols);
    EXPECT_EQ(a.tx.info_bits, b.tx.info_bits);
  }
}

TEST(RunPacket, ValidatesThePoint) {
  SimPoint p;
  p.n_erasures = 49;
  EXPECT_THROW(estimate_per(p, {}), InvalidInput);
  p = SimPoint{};
  p.payload_bytes = 0;
  EXPECT_THROW(estimate_per(p, {}), InvalidInput);
  EXPECT_THROW(estimate_per(SimPoint{}, {10, 5}), InvalidInput);
}

TEST(EstimatePer, WorkerCountDoesNotMatter) {
  SimPoint p;
  p.mode = mode_for_rate(24);
  p.ebn0_db = 20.0;
  const StopRule stop{10, 300};
  const auto one = estimate_per(p, stop, 1);
  const auto four = estimate_per(p, stop, 4);
  EXPECT_EQ(one.trials, four.trials);
  EXPECT_EQ(one.packet_errors, four.packet_errors);
  EXPECT_GE(one.packet_errors, 1);
}

TEST(EstimatePer, StopsAtMaxTrials) {
  const auto r = estimate_per(clean_point(), {5, 70}, 1);
  EXPECT_EQ(r.trials, 70);
  EXPECT_EQ(r.packet_errors, 0);
  EXPECT_EQ(r.per, 0.0);
  EXPECT_EQ(r.ci95.lo, 0.0);
  EXPECT_GT(r.ci95.hi, 0.0);
}

TEST(Sweep, SinglePointEqualsEstimate) {
  SimPoint p;
  p.ebn0_db = 20.0;
  const StopRule stop{5, 100};
  const auto s = sweep({p}, stop, 1);
  const auto e = estimate_per(p, stop, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].trials, e.trials);
  EXPECT_EQ(s[0].packet_errors, e.packet_errors);
  EXPECT_THROW(sweep({}, stop), InvalidInput);
}

TEST(Wilson, KnownValues) {
  const auto ci = wilson_interval(10, 100);
  EXPECT_NEAR(ci.lo, 0.05522, 1e-4);
  EXPECT_NEAR(ci.hi, 0.17437, 1e-4);
  const auto zero = wilson_interval(0, 50);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_NEAR(zero.hi, 0.07135, 1e-4);
}

TEST(Wilson, ContainsEstimateAndShrinks) {
  for (std::int64_t n : {1, 7, 100, 10000}) {
    for (std::int64_t k = 0; k <= n; k += std::max<std::int64_t>(1, n / 13)) {
      const auto ci = wilson_interval(k, n);
      const double p = static_cast<double>(k) / n;
      EXPECT_LE(ci.lo, p);
      EXPECT_GE(ci.hi, p);
      EXPECT_GE(ci.lo, 0.0);
      EXPECT_LE(ci.hi, 1.0);
    }
  }
  const auto a = wilson_interval(10, 100);
  const auto b = wilson_interval(100, 1000);
  EXPECT_LT(b.hi - b.lo, a.hi - a.lo);
  EXPECT_TRUE(intervals_overlap(a, b));
  EXPECT_FALSE(intervals_overlap({0.1, 0.2}, {0.3, 0.4}));
}

TEST(Throughput, Normalisation) {
  PerPoint r;
  r.point.mode = mode_for_rate(54);
  r.per = 0.0;
  EXPECT_DOUBLE_EQ(normalized_throughput(r), 1.0);
  r.per = 1.0;
  EXPECT_DOUBLE_EQ(normalized_throughput(r), 0.0);
  r.point.mode = mode_for_rate(12);
  r.per = 0.1;
  EXPECT_NEAR(normalized_throughput(r), 0.2, 1e-15);
}

TEST(AnalyticCollision, FrozenValues) {
  const BtConfig cfg;
  EXPECT_NEAR(analytic_collision_probability(1e-9, cfg), 0.1186025, 1e-6);
  EXPECT_NEAR(analytic_collision_probability(16.0, cfg), 0.12378734, 1e-7);
  EXPECT_NEAR(analytic_collision_probability(72.0, cfg), 0.14193418, 1e-7);
  EXPECT_NEAR(time_overlap_probability(16.0, cfg), 0.6112, 1e-12);
  EXPECT_NEAR(time_overlap_probability(72.0, cfg), 0.7008, 1e-12);
  EXPECT_NEAR(time_overlap_probability(259.0, cfg), 1.0, 1e-12);
  EXPECT_NEAR(analytic_collision_probability(259.0, cfg), 16.0 / 79.0, 1e-12);
  EXPECT_NEAR(analytic_collision_probability(1000.0, cfg), 0.3879497, 1e-6);
}

TEST(AnalyticCollision, MonotoneInDuration) {
  const BtConfig cfg;
  double prev = 0.0;
  for (double d = 0.0; d <= 3000.0; d += 7.0) {
    const double p = analytic_collision_probability(d, cfg);
    EXPECT_GE(p, prev - 1e-12) << d;
    EXPECT_LE(p, 1.0);
    prev = p;
  }
  EXPECT_THROW(analytic_collision_probability(-1.0, cfg), InvalidInput);
}

TEST(AnalyticCollision, AgreesWithEpisodesForLongPacket) {
  const BtConfig cfg;
  const int n_sym = 300;  // 1200 us, spans three slots
  int hits = 0;
  const int episodes = 20000;
  for (int i = 0; i < episodes; ++i) {
    RandomStream rng(77, Stream::kInterferer, static_cast<std::uint64_t>(i));
    hits += draw_episode(packet_duration_us(n_sym), n_sym, cfg, rng, false).collided();
  }
  EXPECT_NEAR(static_cast<double>(hits) / episodes, analytic_collision_probability(1200.0, cfg), 0.015);
}

// Small budgets: the interference floor exists at high SNR and erasures do
// not hurt there.
TEST(Floor, InterferenceLimitsHighSnr) {
  SimPoint p;
  p.ebn0_db = 40.0;
  const auto r = estimate_per(p, {40, 2000}, 1);
  EXPECT_GT(r.per, 0.05);
  EXPECT_LT(r.per, 0.4);
}

TEST(Floor, ErasuresHelpOnPairedDraws) {
  SimPoint p;
  p.ebn0_db = 30.0;
  const StopRule stop{600, 600};
  const auto e0 = estimate_per(p, stop, 1);
  p.n_erasures = 7;
  const auto e7 = estimate_per(p, stop, 1);
  EXPECT_LT(e7.packet_errors, e0.packet_errors);
}

TEST(Floor, IndependentSeedsAgree) {
  SimPoint p;
  p.ebn0_db = 30.0;
  const StopRule stop{60, 5000};
  const auto a = estimate_per(p, stop, 1);
  p.seed = 2;
  const auto b = estimate_per(p, stop, 1);
  EXPECT_TRUE(intervals_overlap(a.ci95, b.ci95));
}

}  // namespace
}  // namespace btcoex
