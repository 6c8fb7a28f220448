#pragma once

// End-to-end packet transaction and the Monte Carlo PER harness.
//
// Every trial draws from private streams derived from (master seed, trial
// index), so a trial's outcome does not depend on which worker ran it or
// on which point of a sweep it belongs to. Points that share a master seed
// therefore see the same payloads, channels, hops and noise shapes, which
// makes comparisons between erasure counts paired.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <utility>
#include <vector>

#include "btcoex/bt_interferer.hpp"
#include "btcoex/channel_model.hpp"
#include "btcoex/erasure_mitigation.hpp"
#include "btcoex/ofdm_mapper.hpp"
#include "btcoex/phy_bits.hpp"
#include "btcoex/random.hpp"

namespace btcoex {

struct SimPoint {
  ModeParams mode = kModes[0];
  double ebn0_db = 30.0;
  int n_erasures = 0;
  bool bt_enabled = true;
  double sir_db = 0.0;
  std::uint64_t seed = 1;
  int payload_bytes = 100;
  ChannelConfig channel{};
  bool flat_channel = false;  // h = 1 on every subcarrier, for debugging
  BtConfig bt{};              // sir_db above takes precedence over bt.sir_db
  double frequency_error_mhz = 0.0;

  BtConfig bt_config() const {
    BtConfig c = bt;
    c.sir_db = sir_db;
    return c;
  }

  void validate() const {
    if (!std::isfinite(ebn0_db)) throw InvalidInput("Eb/N0 must be finite");
    if (n_erasures < 0 || n_erasures > kNumData) throw InvalidInput("erasure count must be in [0, 48]");
    if (payload_bytes < 1) throw InvalidInput("payload must be at least one octet");
    channel.validate();
    bt_config().validate();
  }
};

struct StopRule {
  std::int64_t min_errors = 100;
  std::int64_t max_trials = 200000;

  void validate() const {
    if (min_errors < 1) throw InvalidInput("min_errors must be at least 1");
    if (max_trials < min_errors) throw InvalidInput("max_trials must be >= min_errors");
  }
};

struct Interval {
  double lo;
  double hi;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::int64_t errors, std::int64_t trials, double z = 1.959963984540054) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // clamp so that p always lies inside despite rounding at p = 0 or 1
  return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

struct PerPoint {
  SimPoint point;
  std::int64_t trials = 0;
  std::int64_t packet_errors = 0;
  double per = 0.0;
  Interval ci95{0.0, 1.0};
};

inline bool intervals_overlap(const Interval& a, const Interval& b) {
  return a.lo <= b.hi && b.lo <= a.hi;
}

// Result of one simulated packet, kept for diagnostics and tests.
struct PacketTrace {
  TxPacket tx;
  ChannelRealization channel;
  BtEpisode episode;
  SubcarrierGrid rx;
  ErasureMask mask;
  Bits decoded;  // info bits, tail stripped
  bool error = false;
};

inline PacketTrace run_packet_trace(const SimPoint& point, std::uint64_t trial_index) {
  PacketTrace tr;
  const auto& mode = point.mode;

  RandomStream payload_rng(point.seed, Stream::kPayload, trial_index);
  tr.tx = assemble_packet(point.payload_bytes, mode, payload_rng);

  RandomStream channel_rng(point.seed, Stream::kChannel, trial_index);
  tr.channel = point.flat_channel ? flat_channel() : draw_channel(point.channel, channel_rng);

  SubcarrierGrid grid = tr.tx.grid;
  apply_channel(grid, tr.channel);

  const BtConfig bt = point.bt_config();
  if (point.bt_enabled) {
    RandomStream bt_rng(point.seed, Stream::kInterferer, trial_index);
    tr.episode = draw_episode(packet_duration_us(tr.tx.n_sym), tr.tx.n_sym, bt, bt_rng);
    grid = inject(std::move(grid), tr.episode);
  } else {
    tr.episode.per_symbol.resize(static_cast<std::size_t>(tr.tx.n_sym));
  }

  RandomStream noise_rng(point.seed, Stream::kNoise, trial_index);
  const double n0 = noise_variance(point.ebn0_db, mode);
  tr.rx = add_noise(std::move(grid), n0, noise_rng);

  tr.mask = build_mask(tr.episode, {point.n_erasures, point.frequency_error_mhz},
                       tr.rx.n_symbols(), bt);
  const auto soft = demap_soft(tr.rx, tr.channel.h_freq, n0, mode, tr.mask);

  std::vector<SoftBit> punctured;
  punctured.reserve(soft.size());
  const std::span<const SoftBit> all(soft);
  for (std::size_t pos = 0; pos < soft.size(); pos += mode.n_cbps) {
    auto block = deinterleave(all.subspan(pos, mode.n_cbps), mode.n_cbps, mode.n_bpsc);
    punctured.insert(punctured.end(), block.begin(), block.end());
  }
  const auto depunctured = depuncture(punctured, mode.code_rate);
  tr.decoded = viterbi_decode(depunctured);

  const auto sent = payload_view(tr.tx.info_bits, point.payload_bytes);
  const auto got = payload_view(tr.decoded, point.payload_bytes);
  tr.error = !std::equal(sent.begin(), sent.end(), got.begin());
  return tr;
}

// True iff any payload bit was decoded wrongly.
inline bool run_packet(const SimPoint& point, std::uint64_t trial_index) {
  return run_packet_trace(point, trial_index).error;
}

inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

namespace detail {

// Evaluates fn(i) for i in [begin, end) on `workers` threads.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, unsigned workers, Fn&& fn) {
  if (workers <= 1 || end - begin <= 1) {
    for (auto i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{begin};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (auto i = next.fetch_add(1); i < end; i = next.fetch_add(1)) fn(i);
    });
  }
}

}  // namespace detail

// Runs trials 0, 1, 2, ... until min_errors errors or max_trials trials.
// Trials are evaluated in parallel batches but accepted strictly in index
// order, so the result is the one a single worker would produce.
inline PerPoint estimate_per(const SimPoint& point, const StopRule& stop, unsigned workers = 0) {
  point.validate();
  stop.validate();
  if (workers == 0) workers = default_workers();
  const std::int64_t batch = std::max<std::int64_t>(64, 16 * static_cast<std::int64_t>(workers));

  PerPoint r;
  r.point = point;
  std::vector<std::uint8_t> outcome;
  bool done = false;
  while (!done) {
    const std::int64_t start = r.trials;
    const std::int64_t count = std::min(batch, stop.max_trials - start);
    outcome.assign(static_cast<std::size_t>(count), 0);
    detail::parallel_for(0, count, workers, [&](std::int64_t i) {
      outcome[static_cast<std::size_t>(i)] = run_packet(point, static_cast<std::uint64_t>(start + i));
    });
    for (auto e : outcome) {
      ++r.trials;
      r.packet_errors += e;
      if (r.packet_errors >= stop.min_errors || r.trials >= stop.max_trials) {
        done = true;
        break;
      }
    }
  }
  r.per = static_cast<double>(r.packet_errors) / static_cast<double>(r.trials);
  r.ci95 = wilson_interval(r.packet_errors, r.trials);
  return r;
}

inline std::vector<PerPoint> sweep(const std::vector<SimPoint>& points, const StopRule& stop,
                                   unsigned workers = 0) {
  if (points.empty()) throw InvalidInput("sweep needs at least one point");
  std::vector<PerPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(estimate_per(p, stop, workers));
  return out;
}

// Throughput relative to a lossless 54 Mb/s link.
inline double normalized_throughput(const PerPoint& p) {
  return (1.0 - p.per) * p.point.mode.rate_mbps / 54.0;
}

// ---------------------------------------------------------------------------
// Closed-form collision model

namespace detail {

// Number of active windows [n*slot, n*slot + active) that a packet starting
// at t (uniform over one slot) overlaps, as a piecewise-constant function;
// fn receives (segment length, window count).
template <typename Fn>
void for_each_overlap_segment(double duration_us, const BtConfig& cfg, Fn&& fn) {
  const double slot = cfg.slot_us;
  const auto last = static_cast<int>(std::ceil(duration_us / slot)) + 1;
  // window n overlaps iff t in (n*slot - duration, n*slot + active)
  std::vector<double> cuts{0.0, slot};
  for (int n = 0; n <= last; ++n) {
    for (double c : {n * slot - duration_us, n * slot + cfg.active_us}) {
      if (c > 0.0 && c < slot) cuts.push_back(c);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const double t = 0.5 * (cuts[i] + cuts[i + 1]);
    int count = 0;
    for (int n = 0; n <= last; ++n) {
      if (t > n * slot - duration_us && t < n * slot + cfg.active_us) ++count;
    }
    fn(len, count);
  }
}

}  // namespace detail

// Probability that a packet overlaps at least one BT burst in time.
inline double time_overlap_probability(double duration_us, const BtConfig& cfg) {
  if (!(duration_us >= 0.0)) throw InvalidInput("duration must be non-negative");
  double p = 0.0;
  detail::for_each_overlap_segment(duration_us, cfg, [&](double len, int count) {
    if (count > 0) p += len;
  });
  return p / cfg.slot_us;
}

// Probability that a packet overlaps at least one burst whose hop lands in
// the occupied OFDM band; hops are independent and uniform per slot.
inline double analytic_collision_probability(double duration_us, const BtConfig& cfg) {
  if (!(duration_us >= 0.0)) throw InvalidInput("duration must be non-negative");
  const double q = static_cast<double>(in_band_channel_count(cfg)) / kBtChannels;
  double p = 0.0;
  detail::for_each_overlap_segment(duration_us, cfg, [&](double len, int count) {
    p += len * (1.0 - std::pow(1.0 - q, count));
  });
  return p / cfg.slot_us;
}

}  // namespace btcoex
