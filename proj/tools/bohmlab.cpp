#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohmlab/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitComparison = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

constexpr std::size_t kDefaultScanCap = 20;

fs::path default_output_dir() {
  if (const char* env = std::getenv("BOHMLAB_OUTPUT_DIR"); env && *env) return env;
  return "bohmlab-out";
}

int exit_code_for(const bohmlab::Error& e) {
  if (e.kind() == bohmlab::ErrorKind::config || e.kind() == bohmlab::ErrorKind::invalid_argument ||
      e.kind() == bohmlab::ErrorKind::invalid_grid || e.kind() == bohmlab::ErrorKind::invalid_model ||
      e.kind() == bohmlab::ErrorKind::io) {
    return kExitConfig;
  }
  return kExitNumerical;
}

bohmlab::ScenarioConfig resolve(const std::string& target) {
  if (auto builtin = bohmlab::find_builtin(target)) return *builtin;
  if (fs::exists(target)) return bohmlab::load_config(target);
  throw bohmlab::Error(bohmlab::ErrorKind::config,
                       "'" + target + "' is neither a built-in scenario nor a config file");
}

void print_list(bool json) {
  const auto catalog = bohmlab::builtin_scenarios();
  if (json) {
    auto rows = nlohmann::json::array();
    for (const auto& c : catalog) {
      rows.push_back({{"name", c.name},
                      {"figure", c.figure},
                      {"kind", std::string(bohmlab::to_string(c.kind))},
                      {"n", c.n_values},
                      {"force", bohmlab::describe(c.force)},
                      {"potential", bohmlab::describe(c.potential)},
                      {"L", c.grid.half_width},
                      {"M", c.grid.num_points},
                      {"t_max", c.t_max},
                      {"samples", c.samples}});
    }
    std::cout << rows.dump(2) << "\n";
    return;
  }
  for (const auto& c : catalog) {
    std::cout << c.name << "\t" << c.figure << "\t" << bohmlab::parameter_summary(c) << "\n";
  }
}

int report_outcome(const bohmlab::ComparisonReport& report) {
  std::cout << report.format();
  return report.overall() ? kExitPass : kExitComparison;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectory simulator for the driven quantum oscillator"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "Show the built-in scenarios");
  bool list_json = false;
  list->add_flag("--json", list_json, "Emit the catalog as JSON rows");

  auto* run = app.add_subcommand("run", "Run a built-in scenario or a config file");
  std::string target;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  run->add_option("scenario", target, "Built-in name or path to a config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the sampling seed");
  run->add_option("--samples", samples, "Override the number of trajectories");

  auto* scan = app.add_subcommand("scan", "Amplitude scan of the free oscillator over n");
  std::size_t from = 1, to = kDefaultScanCap;
  bool allow_large = false;
  std::string scan_out;
  std::optional<std::size_t> scan_samples;
  scan->add_option("--from", from, "First n (>= 1)")->required();
  scan->add_option("--to", to, "Last n")->required();
  scan->add_flag("--allow-large", allow_large, "Permit n above 20 (up to 50)");
  scan->add_option("--out", scan_out, "Output directory");
  scan->add_option("--samples", scan_samples, "Trajectories per n");

  auto* check = app.add_subcommand("check", "Run every built-in and aggregate pass/fail");
  std::string check_out;
  check->add_option("--out", check_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*list) {
      print_list(list_json);
      return kExitPass;
    }

    if (*run) {
      auto config = resolve(target);
      if (seed) {
        config.seed = *seed;
        config.sampling = bohmlab::SamplingStrategy::seeded_random;
      }
      if (samples) config.samples = *samples;
      config.validate();
      const fs::path dir = out_dir.empty() ? default_output_dir() : fs::path(out_dir);
      return report_outcome(bohmlab::run_scenario(config, dir));
    }

    if (*scan) {
      if (to > kDefaultScanCap && !allow_large) {
        throw bohmlab::Error(bohmlab::ErrorKind::config,
                             "scans above n = 20 need --allow-large");
      }
      if (to > 50) throw bohmlab::Error(bohmlab::ErrorKind::config, "scans stop at n = 50");
      auto config = *bohmlab::find_builtin("fig3-amplitude-scan");
      config.n_values.clear();
      for (std::size_t n = from; n <= to; ++n) config.n_values.push_back(n);
      if (scan_samples) config.samples = *scan_samples;
      const fs::path dir = scan_out.empty() ? default_output_dir() : fs::path(scan_out);
      return report_outcome(bohmlab::run_scenario(config, dir));
    }

    if (*check) {
      const fs::path dir = check_out.empty() ? default_output_dir() : fs::path(check_out);
      bool all_pass = true;
      for (const auto& config : bohmlab::builtin_scenarios()) {
        const auto report = bohmlab::run_scenario(config, dir);
        std::cout << (report.overall() ? "PASS " : "FAIL ") << config.name << "\n";
        for (const auto& m : report.metrics) {
          if (!m.pass) std::cout << "  failed: " << m.name << " = " << m.value << "\n";
        }
        all_pass = all_pass && report.overall();
      }
      std::cout << "overall: " << (all_pass ? "PASS" : "FAIL") << "\n";
      return all_pass ? kExitPass : kExitComparison;
    }
  } catch (const bohmlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitPass;
}
