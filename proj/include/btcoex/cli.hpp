#pragma once

// Experiment front end: key = value configuration, sweep execution, CSV and
// gnuplot output, and the fast self-test suite.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "btcoex/bt_interferer.hpp"
#include "btcoex/channel_model.hpp"
#include "btcoex/ofdm_mapper.hpp"
#include "btcoex/phy_bits.hpp"
#include "btcoex/reference.hpp"
#include "btcoex/sim_engine.hpp"

namespace btcoex::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kSelftestFailure = 3 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<int> rates{12, 24, 36, 48, 54};
  std::vector<double> ebn0_db{5, 10, 15, 20, 25, 30, 35, 40};
  std::vector<int> erasures{0, 5, 7};
  double sir_db = 0.0;
  int payload_bytes = 100;
  double tau_rms_ns = 100.0;
  bool bt_enabled = true;
  std::uint64_t seed = 1;
  StopRule stop{};
  unsigned workers = 0;  // 0: machine parallelism
  std::filesystem::path out = ".";
};

using Setting = std::pair<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(trim(text));
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw ConfigError(key, "cannot parse '" + text + "'");
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError(key, "list must not be empty");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + text + "'");
}

}  // namespace detail

// Applies one key/value pair, validating it. Unknown keys are errors.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "rates") {
    auto rates = parse_list<int>(key, value);
    for (int r : rates) {
      try {
        mode_for_rate(r);
      } catch (const InvalidInput&) {
        throw ConfigError(key, "rate " + std::to_string(r) + " not in {12,24,36,48,54}");
      }
    }
    cfg.rates = std::move(rates);
  } else if (key == "ebn0_db") {
    auto grid = parse_list<double>(key, value);
    for (double v : grid) {
      if (!std::isfinite(v)) throw ConfigError(key, "values must be finite");
    }
    cfg.ebn0_db = std::move(grid);
  } else if (key == "erasures") {
    auto es = parse_list<int>(key, value);
    for (int e : es) {
      if (e < 0 || e > kNumData) throw ConfigError(key, "erasure counts must be in [0, 48]");
    }
    cfg.erasures = std::move(es);
  } else if (key == "sir_db") {
    cfg.sir_db = parse_number<double>(key, value);
  } else if (key == "payload_bytes") {
    const int p = parse_number<int>(key, value);
    if (p < 1 || p > 2304) throw ConfigError(key, "must be in [1, 2304]");
    cfg.payload_bytes = p;
  } else if (key == "tau_rms_ns") {
    const double t = parse_number<double>(key, value);
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError(key, "must be non-negative");
    cfg.tau_rms_ns = t;
  } else if (key == "bt_enabled") {
    cfg.bt_enabled = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "min_errors") {
    const auto v = parse_number<std::int64_t>(key, value);
    if (v < 1) throw ConfigError(key, "must be at least 1");
    cfg.stop.min_errors = v;
  } else if (key == "max_trials") {
    const auto v = parse_number<std::int64_t>(key, value);
    if (v < 1) throw ConfigError(key, "must be at least 1");
    cfg.stop.max_trials = v;
  } else if (key == "workers") {
    const auto v = parse_number<int>(key, value);
    if (v < 0) throw ConfigError(key, "must be non-negative");
    cfg.workers = static_cast<unsigned>(v);
  } else if (key == "out") {
    if (detail::trim(value).empty()) throw ConfigError(key, "must not be empty");
    cfg.out = detail::trim(value);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

// Key/value pairs of a config document: one `key = value` per line, `#`
// starts a comment.
inline std::vector<Setting> read_settings(std::istream& in) {
  std::vector<Setting> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

// File settings first, then flag overrides.
inline RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<Setting>& overrides = {}) {
  RunConfig cfg;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw FileError("cannot read config file " + file->string());
    for (const auto& [k, v] : read_settings(in)) apply_setting(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  if (cfg.stop.max_trials < cfg.stop.min_errors) {
    throw ConfigError("max_trials", "must be >= min_errors");
  }
  return cfg;
}

// Points in output order: rate, then erasure count, then Eb/N0.
inline std::vector<SimPoint> build_points(const RunConfig& cfg) {
  std::vector<SimPoint> points;
  for (int rate : cfg.rates) {
    for (int e : cfg.erasures) {
      for (double eb : cfg.ebn0_db) {
        SimPoint p;
        p.mode = mode_for_rate(rate);
        p.ebn0_db = eb;
        p.n_erasures = e;
        p.bt_enabled = cfg.bt_enabled;
        p.sir_db = cfg.sir_db;
        p.seed = cfg.seed;
        p.payload_bytes = cfg.payload_bytes;
        p.channel.tau_rms_s = cfg.tau_rms_ns * 1e-9;
        points.push_back(p);
      }
    }
  }
  return points;
}

inline constexpr const char* kCsvHeader =
    "rate_mbps,ebn0_db,erasures,sir_db,trials,errors,per,ci_lo,ci_hi,norm_throughput";

inline std::string csv_row(const PerPoint& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%g,%d,%g,%lld,%lld,%.6g,%.6g,%.6g,%.6g",
                r.point.mode.rate_mbps, r.point.ebn0_db, r.point.n_erasures, r.point.sir_db,
                static_cast<long long>(r.trials), static_cast<long long>(r.packet_errors), r.per,
                r.ci95.lo, r.ci95.hi, normalized_throughput(r));
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<PerPoint>& results) {
  out << kCsvHeader << '\n';
  for (const auto& r : results) out << csv_row(r) << '\n';
}

// gnuplot script with one log-scale PER panel per rate and one curve per
// erasure count, reading results.csv from its own directory.
inline std::string plot_script(const RunConfig& cfg) {
  const auto n = static_cast<int>(cfg.rates.size());
  const int cols = std::min(3, n);
  const int rows = (n + cols - 1) / cols;
  std::ostringstream gp;
  gp << "# PER versus Eb/N0, one panel per rate, one curve per erasure count\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size " << 500 * cols << ',' << 400 * rows << "\n"
     << "set output 'per.png'\n"
     << "set logscale y\n"
     << "set format y '10^{%L}'\n"
     << "set yrange [1e-4:1]\n"
     << "set xlabel 'E_b/N_0 (dB)'\n"
     << "set ylabel 'PER'\n"
     << "set grid\n"
     << "set key bottom left\n"
     << "set multiplot layout " << rows << ',' << cols << "\n";
  for (int rate : cfg.rates) {
    gp << "set title '" << rate << " Mb/s'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < cfg.erasures.size(); ++i) {
      const int e = cfg.erasures[i];
      if (i > 0) gp << ", \\\n     ";
      gp << "'results.csv' skip 1 using ($1==" << rate << " && $3==" << e
         << " ? $2 : 1/0):($7>0 ? $7 : 1/0) with linespoints title 'E" << e << "'";
    }
    gp << "\n";
  }
  gp << "unset multiplot\n";
  return gp.str();
}

// Runs the sweep and writes results.csv and plot.gp into cfg.out.
inline int run(const RunConfig& cfg, std::ostream& log) {
  std::ofstream csv;
  std::ofstream gp;
  try {
    std::filesystem::create_directories(cfg.out);
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kIoError;
  }
  csv.open(cfg.out / "results.csv", std::ios::binary | std::ios::trunc);
  gp.open(cfg.out / "plot.gp", std::ios::binary | std::ios::trunc);
  if (!csv || !gp) {
    log << "error: cannot write to " << cfg.out.string() << '\n';
    return kIoError;
  }

  std::vector<PerPoint> results;
  results.reserve(cfg.rates.size() * cfg.erasures.size() * cfg.ebn0_db.size());
  for (const auto& p : build_points(cfg)) {
    results.push_back(estimate_per(p, cfg.stop, cfg.workers));
    const auto& r = results.back();
    char line[200];
    std::snprintf(line, sizeof line, "%2d Mb/s  E%-2d  Eb/N0 %5.1f dB  PER %.4g  [%.4g, %.4g]  (%lld/%lld)",
                  r.point.mode.rate_mbps, r.point.n_erasures, r.point.ebn0_db, r.per, r.ci95.lo,
                  r.ci95.hi, static_cast<long long>(r.packet_errors),
                  static_cast<long long>(r.trials));
    log << line << '\n';
  }

  write_csv(csv, results);
  gp << plot_script(cfg);
  csv.flush();
  gp.flush();
  if (!csv || !gp) {
    log << "error: failed writing results to " << cfg.out.string() << '\n';
    return kIoError;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Self-test

struct SelftestOptions {
  // Encoder uses a wrong first generator (negative control).
  bool corrupt_generator = false;
};

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

namespace detail {

inline CheckResult check_codec(const SelftestOptions& opt) {
  CodeConfig enc_cfg;
  if (opt.corrupt_generator) enc_cfg.generators[0] = 0135;
  const CodeConfig dec_cfg;

  Bits impulse(7, 0);
  impulse[0] = 1;
  if (conv_encode(impulse, enc_cfg) != reference::encode(impulse)) {
    return {"codec_oracle", false, "impulse response differs from 133/171"};
  }

  // noiseless round trip, every 10-bit message
  for (std::uint32_t v = 0; v < 1024; ++v) {
    Bits msg(16, 0);
    for (int i = 0; i < 10; ++i) msg[i] = (v >> i) & 1u;
    std::vector<SoftBit> soft;
    for (auto c : conv_encode(msg, enc_cfg)) soft.push_back({c ? -1.0 : 1.0, false});
    if (viterbi_decode(soft, dec_cfg) != Bits(msg.begin(), msg.begin() + 10)) {
      return {"codec_oracle", false, "noiseless round trip failed"};
    }
  }

  // Viterbi against exhaustive ML on random soft input, all code rates
  RandomStream rng(20240601);
  for (CodeRate rate : {CodeRate::kHalf, CodeRate::kTwoThirds, CodeRate::kThreeQuarters}) {
    const auto period = puncture_mask(rate).size() / 2;  // info bits per period
    for (int trial = 0; trial < 100; ++trial) {
      int k = 1 + static_cast<int>(rng.below(10));
      while ((k + kTailBits) % period != 0) --k;
      if (k < 1) k += static_cast<int>(period);
      const auto n_kept = static_cast<std::size_t>(2 * (k + kTailBits)) / puncture_mask(rate).size() *
                          static_cast<std::size_t>(kept_per_period(rate));
      std::vector<SoftBit> rx(n_kept);
      for (auto& s : rx) s = {rng.normal(), false};
      const auto soft = depuncture(rx, rate);
      const auto vit = viterbi_decode_with_metric(soft, dec_cfg);
      const auto ml = reference::brute_force_ml(soft, k);
      if (std::abs(vit.metric - ml.metric) > 1e-9 * (1.0 + std::abs(ml.metric)) ||
          vit.bits != ml.message) {
        return {"codec_oracle", false, "Viterbi disagrees with exhaustive ML at rate " + to_string(rate)};
      }
    }
  }
  return {"codec_oracle", true, ""};
}

inline CheckResult check_interleaver() {
  for (auto [n_cbps, n_bpsc] : {std::pair{48, 1}, {96, 2}, {192, 4}, {288, 6}}) {
    std::vector<int> seen(static_cast<std::size_t>(n_cbps), 0);
    for (int k = 0; k < n_cbps; ++k) {
      const int j = interleaver_index(k, n_cbps, n_bpsc);
      if (j < 0 || j >= n_cbps || seen[j]++) {
        return {"interleaver_bijection", false, "not a permutation for n_cbps=" + std::to_string(n_cbps)};
      }
    }
  }
  return {"interleaver_bijection", true, ""};
}

inline CheckResult check_collision() {
  const BtConfig cfg;
  const int n_sym = 18;
  const double duration = packet_duration_us(n_sym);
  const int episodes = 20000;
  int hits = 0;
  for (int i = 0; i < episodes; ++i) {
    RandomStream rng(7, Stream::kInterferer, static_cast<std::uint64_t>(i));
    hits += draw_episode(duration, n_sym, cfg, rng, false).collided();
  }
  const double empirical = static_cast<double>(hits) / episodes;
  const double analytic = analytic_collision_probability(duration, cfg);
  std::ostringstream d;
  d << "empirical " << empirical << " analytic " << analytic;
  return {"collision_probability", std::abs(empirical - analytic) < 0.01, d.str()};
}

inline CheckResult check_uncoded_ber() {
  const double ebn0_db = 4.0;
  const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
  const double n0 = 1.0 / (2.0 * ebn0);  // Es = 1, two bits per symbol
  const int n_sym = 2000;
  RandomStream rng(99);
  Bits bits(static_cast<std::size_t>(n_sym) * 96);
  for (auto& b : bits) b = rng.bit();
  const auto& mode = mode_for_rate(12);
  const auto rx = add_noise(map_symbols(bits, mode), n0, rng);
  const auto soft = demap_soft(rx, flat_channel().h_freq, n0, mode, ErasureMask::none(rx.n_symbols()));
  std::int64_t errors = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) errors += (soft[i].value < 0.0) != (bits[i] == 1);
  const auto ci = wilson_interval(errors, static_cast<std::int64_t>(bits.size()));
  const double theory = reference::qfunc(std::sqrt(2.0 * ebn0));
  std::ostringstream d;
  d << "BER " << static_cast<double>(errors) / bits.size() << " theory " << theory;
  return {"uncoded_ber", theory >= ci.lo && theory <= ci.hi, d.str()};
}

}  // namespace detail

inline int selftest(const SelftestOptions& opt, std::ostream& log) {
  std::vector<std::function<CheckResult()>> checks{
      [&] { return detail::check_codec(opt); },
      detail::check_interleaver,
      detail::check_collision,
      detail::check_uncoded_ber,
  };
  int rc = kOk;
  for (const auto& check : checks) {
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {"<exception>", false, e.what()};
    }
    log << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) log << "  (" << r.detail << ")";
    log << '\n';
    if (!r.passed) rc = kSelftestFailure;
  }
  return rc;
}

}  // namespace btcoex::cli
