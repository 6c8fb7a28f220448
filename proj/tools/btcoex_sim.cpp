// Command-line driver: PER sweeps of 802.11g under Bluetooth HV1
// interference, and the self-test suite.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "btcoex/cli.hpp"

namespace {

using btcoex::cli::Setting;

}  // namespace

int main(int argc, char** argv) {
  namespace cli = btcoex::cli;

  CLI::App app{"802.11g packet error rate under Bluetooth HV1 interference"};
  app.set_help_all_flag("--help-all");

  std::optional<std::string> config_path;
  std::optional<std::string> rates, ebn0, erasures, sir, payload, bt_enabled, seed, workers,
      out, min_errors, max_trials, tau_rms;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--rates", rates, "comma-separated rates in Mb/s (12,24,36,48,54)");
  app.add_option("--ebn0", ebn0, "comma-separated Eb/N0 grid in dB");
  app.add_option("--erasures", erasures, "comma-separated erasure counts");
  app.add_option("--sir", sir, "signal-to-interference ratio in dB");
  app.add_option("--payload", payload, "payload octets per packet");
  app.add_option("--bt-enabled", bt_enabled, "simulate the Bluetooth interferer (true/false)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_option("--out", out, "output directory for results.csv and plot.gp");
  app.add_option("--min-errors", min_errors, "stop a point after this many packet errors");
  app.add_option("--max-trials", max_trials, "stop a point after this many packets");
  app.add_option("--tau-rms", tau_rms, "RMS delay spread in ns");

  auto* selftest = app.add_subcommand("selftest", "run the fast invariant checks");
  bool corrupt_generator = false;
  selftest->add_flag("--corrupt-generator", corrupt_generator, "negative control for the codec check")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kConfigError;
  }

  if (*selftest) {
    return cli::selftest({corrupt_generator}, std::cout);
  }

  std::vector<Setting> overrides;
  auto add = [&](const char* key, const std::optional<std::string>& v) {
    if (v) overrides.emplace_back(key, *v);
  };
  add("rates", rates);
  add("ebn0_db", ebn0);
  add("erasures", erasures);
  add("sir_db", sir);
  add("payload_bytes", payload);
  add("bt_enabled", bt_enabled);
  add("seed", seed);
  add("workers", workers);
  add("out", out);
  add("min_errors", min_errors);
  add("max_trials", max_trials);
  add("tau_rms_ns", tau_rms);

  cli::RunConfig cfg;
  try {
    std::optional<std::filesystem::path> file;
    if (config_path) file = *config_path;
    cfg = cli::parse_config(file, overrides);
  } catch (const cli::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  }

  try {
    return cli::run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kIoError;
  }
}
