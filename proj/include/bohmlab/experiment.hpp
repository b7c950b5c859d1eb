#pragma once

// Scenario runner: wires propagate -> sample -> integrate -> average ->
// compare against the classical oracle, writes CSV artifacts, and scores the
// result as a ComparisonReport.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bohmlab/bohm_engine.hpp"
#include "bohmlab/classical_oracle.hpp"
#include "bohmlab/core_model.hpp"
#include "bohmlab/ensemble_stats.hpp"
#include "bohmlab/error.hpp"
#include "bohmlab/io.hpp"
#include "bohmlab/tdse_solver.hpp"

namespace bohmlab {

enum class ScenarioKind { single, amplitude_scan };

enum class OutputKind { trajectories, averages, phase_space, fits, oracle_comparison };

inline std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::single ? "single" : "amplitude-scan";
}

inline std::string_view to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::trajectories: return "trajectories";
    case OutputKind::averages: return "averages";
    case OutputKind::phase_space: return "phase-space";
    case OutputKind::fits: return "fits";
    case OutputKind::oracle_comparison: return "oracle-comparison";
  }
  return "unknown";
}

struct GridSpec {
  double half_width = 10.0;
  std::size_t num_points = 2001;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline constexpr std::size_t kMaxSamples = 100000;

struct ScenarioConfig {
  std::string name;
  std::string figure;
  ScenarioKind kind = ScenarioKind::single;
  /// Superposition cutoffs; each value is run as an independent variant.
  std::vector<std::size_t> n_values{0};
  ForceModel force = ZeroForce{};
  PotentialModel potential = HarmonicPotential{};
  GridSpec grid;
  double t_max = 20.0;
  /// Oracle comparison covers t in [0, compare_until].
  double compare_until = 20.0;
  double dt_pde = 0.001;
  double dt_out = 0.01;
  std::size_t samples = 2000;
  SamplingStrategy sampling = SamplingStrategy::quantile;
  std::uint64_t seed = 0;
  std::vector<OutputKind> outputs{OutputKind::averages, OutputKind::phase_space, OutputKind::fits,
                                  OutputKind::oracle_comparison};

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  bool wants(OutputKind kind) const {
    return std::find(outputs.begin(), outputs.end(), kind) != outputs.end();
  }

  SolverConfig solver_config() const {
    SolverConfig c;
    c.dt_pde = dt_pde;
    c.dt_out = dt_out;
    c.t_max = t_max;
    c.potential = potential;
    c.force = force;
    return c;
  }

  void validate() const {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::config, "scenario '" + name + "': " + why);
    };
    if (name.empty()) fail("name must not be empty");
    if (n_values.empty()) fail("at least one superposition cutoff n is required");
    if (samples < 1 || samples > kMaxSamples) fail("samples must lie in [1, 100000]");
    if (!(t_max > 0.0)) fail("t_max must be positive");
    if (!(compare_until > 0.0) || compare_until > t_max + 1e-12) {
      fail("compare_until must lie in (0, t_max]");
    }
    if (kind == ScenarioKind::amplitude_scan && n_values.size() < 2) {
      fail("an amplitude scan needs at least two values of n");
    }
    try {
      (void)build_grid(grid.half_width, grid.num_points);
      solver_config().validate();
    } catch (const Error& e) {
      fail(e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Reports

struct Metric {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=" or "=="
  bool pass = false;

  static Metric at_most(std::string name, double value, double limit) {
    return {std::move(name), value, limit, "<=", value <= limit};
  }
  static Metric at_least(std::string name, double value, double limit) {
    return {std::move(name), value, limit, ">=", value >= limit};
  }
  static Metric holds(std::string name, bool ok) {
    return {std::move(name), ok ? 1.0 : 0.0, 1.0, "==", ok};
  }
};

struct ComparisonReport {
  std::string scenario;
  std::vector<Metric> metrics;

  bool overall() const {
    return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
  }

  std::string format() const {
    std::ostringstream out;
    out << "scenario: " << scenario << "\n";
    for (const auto& m : metrics) {
      out << "metric: " << m.name << " = " << format_value(m.value) << " (" << m.relation << " "
          << format_value(m.tolerance) << ") " << (m.pass ? "PASS" : "FAIL") << "\n";
    }
    out << "overall: " << (overall() ? "PASS" : "FAIL") << "\n";
    return out.str();
  }
};

// ---------------------------------------------------------------------------
// Built-in catalog

inline std::vector<ScenarioConfig> builtin_scenarios() {
  std::vector<ScenarioConfig> all;

  ScenarioConfig fig1;
  fig1.name = "fig1-trajectories";
  fig1.figure = "FIG. 1";
  fig1.n_values = {2, 6};
  fig1.samples = 400;
  fig1.outputs = {OutputKind::trajectories, OutputKind::phase_space, OutputKind::averages,
                  OutputKind::oracle_comparison};
  all.push_back(fig1);

  ScenarioConfig fig2;
  fig2.name = "fig2-free-oscillator";
  fig2.figure = "FIG. 2";
  fig2.n_values = {1, 2, 4, 6};
  all.push_back(fig2);

  ScenarioConfig fig3;
  fig3.name = "fig3-amplitude-scan";
  fig3.figure = "FIG. 3";
  fig3.kind = ScenarioKind::amplitude_scan;
  fig3.n_values.clear();
  for (std::size_t n = 1; n <= 20; ++n) fig3.n_values.push_back(n);
  // Higher eigenstates reach further out; L = 15 keeps |Psi(+-L)| < 1e-10 up to n = 50.
  fig3.grid = {15.0, 3001};
  fig3.samples = 400;
  fig3.outputs = {OutputKind::fits};
  all.push_back(fig3);

  ScenarioConfig fig5;
  fig5.name = "fig5-constant-force";
  fig5.figure = "FIG. 4-5";
  fig5.n_values = {0, 4};
  fig5.force = ConstantForce{0.7};
  all.push_back(fig5);

  ScenarioConfig fig7;
  fig7.name = "fig7-impulse";
  fig7.figure = "FIG. 6-7";
  fig7.n_values = {0, 2};
  fig7.force = GaussianImpulse(5.0, 0.4);
  all.push_back(fig7);

  ScenarioConfig high;
  high.name = "fig8-sinusoidal-high";
  high.figure = "FIG. 8 (left)";
  high.n_values = {0, 2};
  high.force = SinusoidalForce(0.8, 1.4);
  all.push_back(high);

  ScenarioConfig low = high;
  low.name = "fig8-sinusoidal-low";
  low.figure = "FIG. 8 (right)";
  low.force = SinusoidalForce(0.8, 0.6);
  all.push_back(low);

  ScenarioConfig res;
  res.name = "resonance";
  res.figure = "FIG. 9-10";
  res.n_values = {0};
  res.force = SinusoidalForce(0.2, 1.0);
  res.grid = {15.0, 3001};
  res.t_max = 50.0;
  res.compare_until = 50.0;
  all.push_back(res);

  ScenarioConfig duff;
  duff.name = "fig9-duffing";
  duff.figure = "FIG. 11";
  duff.n_values = {0};
  duff.force = SinusoidalForce(0.2, 1.0);
  duff.potential = DuffingPotential{0.01};
  duff.t_max = 50.0;
  duff.compare_until = 40.0;
  all.push_back(duff);

  return all;
}

inline std::optional<ScenarioConfig> find_builtin(std::string_view name) {
  for (auto& c : builtin_scenarios()) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

inline std::string parameter_summary(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "n=";
  if (c.kind == ScenarioKind::amplitude_scan) {
    out << c.n_values.front() << ".." << c.n_values.back();
  } else {
    for (std::size_t i = 0; i < c.n_values.size(); ++i) out << (i ? "," : "") << c.n_values[i];
  }
  out << " force=" << describe(c.force) << " potential=" << describe(c.potential)
      << " L=" << c.grid.half_width << " M=" << c.grid.num_points << " t_max=" << c.t_max
      << " N=" << c.samples;
  return out.str();
}

// ---------------------------------------------------------------------------
// Config text format: INI-style sections of `key = value` lines.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::config, "key '" + key + "' expects a number, got '" + text + "'");
  }
  return value;
}

inline std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorKind::config,
                "key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return value;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) items.push_back(t);
  }
  return items;
}

/// "1, 2, 4" or "1..20" (inclusive) or a mix.
inline std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_unsigned(item, "n"));
      continue;
    }
    const auto lo = parse_unsigned(item.substr(0, dots), "n");
    const auto hi = parse_unsigned(item.substr(dots + 2), "n");
    if (hi < lo) throw Error(ErrorKind::config, "empty range '" + item + "' for n");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline std::string serialize(const ScenarioConfig& c) {
  using detail::trim;
  std::ostringstream out;
  out << "[scenario]\n"
      << "name = " << c.name << "\n";
  if (!c.figure.empty()) out << "figure = " << c.figure << "\n";
  out << "kind = " << to_string(c.kind) << "\n"
      << "n = ";
  for (std::size_t i = 0; i < c.n_values.size(); ++i) out << (i ? ", " : "") << c.n_values[i];
  out << "\n"
      << "t_max = " << format_exact(c.t_max) << "\n"
      << "compare_until = " << format_exact(c.compare_until) << "\n\n";

  out << "[force]\n";
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ZeroForce>) {
          out << "type = zero\n";
        } else if constexpr (std::is_same_v<F, ConstantForce>) {
          out << "type = constant\nvalue = " << format_exact(f.value) << "\n";
        } else if constexpr (std::is_same_v<F, GaussianImpulse>) {
          out << "type = gaussian\nt_mu = " << format_exact(f.center())
              << "\nsigma = " << format_exact(f.width()) << "\n";
        } else {
          out << "type = sinusoidal\namplitude = " << format_exact(f.amplitude())
              << "\nomega = " << format_exact(f.frequency()) << "\n";
        }
      },
      c.force);

  out << "\n[potential]\n";
  if (const auto* d = std::get_if<DuffingPotential>(&c.potential)) {
    out << "type = duffing\nlambda = " << format_exact(d->lambda) << "\n";
  } else {
    out << "type = harmonic\n";
  }

  out << "\n[grid]\n"
      << "L = " << format_exact(c.grid.half_width) << "\n"
      << "M = " << c.grid.num_points << "\n\n"
      << "[solver]\n"
      << "dt_pde = " << format_exact(c.dt_pde) << "\n"
      << "dt_out = " << format_exact(c.dt_out) << "\n\n"
      << "[sampling]\n"
      << "strategy = " << to_string(c.sampling) << "\n"
      << "seed = " << c.seed << "\n"
      << "samples = " << c.samples << "\n\n"
      << "[outputs]\n"
      << "select = ";
  for (std::size_t i = 0; i < c.outputs.size(); ++i) {
    out << (i ? ", " : "") << to_string(c.outputs[i]);
  }
  out << "\n";
  return out.str();
}

inline ScenarioConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::config, e.what());
  }

  static const std::map<std::string, std::set<std::string>> schema = {
      {"scenario", {"name", "figure", "kind", "n", "t_max", "compare_until"}},
      {"force", {"type", "value", "t_mu", "sigma", "amplitude", "omega"}},
      {"potential", {"type", "lambda"}},
      {"grid", {"L", "M"}},
      {"solver", {"dt_pde", "dt_out"}},
      {"sampling", {"strategy", "seed", "samples"}},
      {"outputs", {"select"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end() || body.empty()) {
      throw Error(ErrorKind::config, "unknown or malformed section '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw Error(ErrorKind::config, "unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) {
      return detail::trim(*v);
    }
    return std::nullopt;
  };
  auto need = [&](const std::string& path) {
    auto v = get(path);
    if (!v) throw Error(ErrorKind::config, "missing required key '" + path + "'");
    return *v;
  };
  auto number = [&](const std::string& path) { return detail::parse_number(need(path), path); };

  ScenarioConfig c;
  c.name = need("scenario.name");
  c.figure = get("scenario.figure").value_or("");
  if (auto kind = get("scenario.kind")) {
    if (*kind == "single") {
      c.kind = ScenarioKind::single;
    } else if (*kind == "amplitude-scan") {
      c.kind = ScenarioKind::amplitude_scan;
    } else {
      throw Error(ErrorKind::config, "unknown scenario kind '" + *kind + "'");
    }
  }
  c.n_values = detail::parse_n_list(need("scenario.n"));
  if (get("scenario.t_max")) c.t_max = number("scenario.t_max");
  c.compare_until = get("scenario.compare_until") ? number("scenario.compare_until") : c.t_max;

  const auto force_type = get("force.type").value_or("zero");
  try {
    if (force_type == "zero") {
      c.force = ZeroForce{};
    } else if (force_type == "constant") {
      c.force = ConstantForce{number("force.value")};
    } else if (force_type == "gaussian") {
      c.force = GaussianImpulse(number("force.t_mu"), number("force.sigma"));
    } else if (force_type == "sinusoidal") {
      c.force = SinusoidalForce(number("force.amplitude"), number("force.omega"));
    } else {
      throw Error(ErrorKind::config, "unknown force type '" + force_type + "'");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    throw Error(ErrorKind::config, e.what());
  }

  const auto potential_type = get("potential.type").value_or("harmonic");
  if (potential_type == "harmonic") {
    c.potential = HarmonicPotential{};
  } else if (potential_type == "duffing") {
    c.potential = DuffingPotential{number("potential.lambda")};
  } else {
    throw Error(ErrorKind::config, "unknown potential type '" + potential_type + "'");
  }

  if (get("grid.L")) c.grid.half_width = number("grid.L");
  if (auto m = get("grid.M")) c.grid.num_points = detail::parse_unsigned(*m, "grid.M");
  if (get("solver.dt_pde")) c.dt_pde = number("solver.dt_pde");
  if (get("solver.dt_out")) c.dt_out = number("solver.dt_out");

  if (auto s = get("sampling.strategy")) {
    if (*s == "quantile") {
      c.sampling = SamplingStrategy::quantile;
    } else if (*s == "seeded-random") {
      c.sampling = SamplingStrategy::seeded_random;
    } else {
      throw Error(ErrorKind::config, "unknown sampling strategy '" + *s + "'");
    }
  }
  if (auto s = get("sampling.seed")) c.seed = detail::parse_unsigned(*s, "sampling.seed");
  if (auto s = get("sampling.samples")) c.samples = detail::parse_unsigned(*s, "sampling.samples");

  if (auto sel = get("outputs.select")) {
    c.outputs.clear();
    for (const auto& item : detail::split_list(*sel)) {
      bool known = false;
      for (auto k : {OutputKind::trajectories, OutputKind::averages, OutputKind::phase_space,
                     OutputKind::fits, OutputKind::oracle_comparison}) {
        if (item == to_string(k)) {
          c.outputs.push_back(k);
          known = true;
        }
      }
      if (!known) throw Error(ErrorKind::config, "unknown output selector '" + item + "'");
    }
  }

  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineResult {
  std::size_t n = 0;
  double max_norm_drift = 0.0;
  TrajectoryEnsemble ensemble;
  AveragedSeries averages;
  std::vector<ClassicalState> oracle;
  /// Position of the maximum of |Psi(x, 0)|^2.
  double density_peak = 0.0;
};

/// Classical reference on the averages' time axis, seeded with <x(0)>, <p(0)>.
inline std::vector<ClassicalState> oracle_series(const ScenarioConfig& config, double x0, double p0,
                                                 std::span<const double> times) {
  if (std::holds_alternative<DuffingPotential>(config.potential)) {
    return duffing_solve(quartic_coupling(config.potential), config.force, x0, p0, times.back(),
                         config.dt_out);
  }
  std::vector<ClassicalState> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(classical_comparator_state(config.force, x0, p0, t));
  return out;
}

inline PipelineResult run_pipeline(const ScenarioConfig& config, std::size_t n) {
  const auto grid = build_grid(config.grid.half_width, config.grid.num_points);
  const auto psi0 = initial_superposition(n, grid);

  PipelineResult result;
  result.n = n;
  std::size_t peak = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (psi0.density(j) > psi0.density(peak)) peak = j;
  }
  result.density_peak = grid.x(peak);

  const auto positions = sample_initial_positions(psi0, config.samples, config.sampling, config.seed);
  {
    const auto history = propagate(psi0, config.solver_config());
    result.max_norm_drift = history.max_norm_drift();
    result.ensemble = integrate_ensemble(history, positions,
                                         {config.sampling, config.seed, config.samples});
  }
  result.averages = bohmian_average(result.ensemble);
  result.oracle = oracle_series(config, result.averages.mean_x.front(),
                                result.averages.mean_p.front(), result.averages.times);
  return result;
}

// ---------------------------------------------------------------------------
// Scoring

inline constexpr double kOracleTolerance = 2e-2;
inline constexpr double kDuffingOracleTolerance = 5e-2;
inline constexpr double kEhrenfestTolerance = 5e-3;
inline constexpr double kBeatHorizon = 100.0;

/// sup |<x>(t) - oracle(t)| for t <= until.
inline double oracle_deviation(const PipelineResult& r, double until) {
  double worst = 0.0;
  for (std::size_t k = 0; k < r.averages.size(); ++k) {
    if (r.averages.times[k] > until + 1e-9) break;
    worst = std::max(worst, std::abs(r.averages.mean_x[k] - r.oracle[k].x));
  }
  return worst;
}

/// True when every time slice keeps the unflagged trajectories in their
/// initial order.
inline bool ordering_preserved(const TrajectoryEnsemble& ensemble) {
  std::vector<const Trajectory*> live;
  for (const auto& t : ensemble.trajectories) {
    if (!t.flagged()) live.push_back(&t);
  }
  std::sort(live.begin(), live.end(),
            [](const Trajectory* a, const Trajectory* b) { return a->positions[0] < b->positions[0]; });
  for (std::size_t k = 0; k < ensemble.times->size(); ++k) {
    for (std::size_t i = 0; i + 1 < live.size(); ++i) {
      if (!(live[i]->positions[k] < live[i + 1]->positions[k])) return false;
    }
  }
  return true;
}

inline double max_displacement(const TrajectoryEnsemble& ensemble) {
  double worst = 0.0;
  for (const auto& t : ensemble.trajectories) {
    for (double x : t.positions) worst = std::max(worst, std::abs(x - t.positions[0]));
  }
  return worst;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Per-period maxima of |x| for the classical Duffing oscillator at rest,
/// integrated to kBeatHorizon.
inline std::vector<double> classical_beat_peaks(const ScenarioConfig& config) {
  const auto states = duffing_solve(quartic_coupling(config.potential), config.force, 0.0, 0.0,
                                    std::max(kBeatHorizon, config.t_max), config.dt_out);
  std::vector<double> ts, xs;
  for (const auto& s : states) {
    ts.push_back(s.t);
    xs.push_back(std::abs(s.x));
  }
  return periodic_maxima(ts, xs, 2.0 * std::numbers::pi);
}

struct VariantFits {
  std::optional<FitResult> full;
  std::optional<FitResult> before_impulse;
  std::optional<FitResult> after_impulse;
};

namespace detail {

inline FitResult fit_window(const AveragedSeries& s, double t_from, double t_to,
                            std::optional<double> omega) {
  std::vector<double> ts, xs;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.times[k] >= t_from - 1e-9 && s.times[k] <= t_to + 1e-9) {
      ts.push_back(s.times[k]);
      xs.push_back(s.mean_x[k]);
    }
  }
  return fit_sinusoid(ts, xs, omega);
}

}  // namespace detail

inline VariantFits variant_fits(const ScenarioConfig& config, const PipelineResult& r) {
  VariantFits fits;
  const auto& s = r.averages;
  if (const auto* g = std::get_if<GaussianImpulse>(&config.force)) {
    const double pre_end = g->center() - 4.0 * g->width();
    const double post_begin = g->center() + 4.0 * g->width();
    if (pre_end > 0.05) fits.before_impulse = detail::fit_window(s, 0.0, pre_end, 1.0);
    if (post_begin < config.t_max - 0.05) {
      fits.after_impulse = detail::fit_window(s, post_begin, config.t_max, 1.0);
    }
  } else if (std::holds_alternative<ZeroForce>(config.force) && r.n == 0) {
    fits.full = fit_sinusoid(s.times, s.mean_x, 1.0);
  } else {
    fits.full = fit_sinusoid(s.times, s.mean_x);
  }
  return fits;
}

inline std::vector<Metric> evaluate_variant(const ScenarioConfig& config, const PipelineResult& r,
                                            const VariantFits& fits) {
  const std::string tag = "[n=" + std::to_string(r.n) + "]";
  const auto& s = r.averages;
  std::vector<Metric> m;
  m.push_back(Metric::at_most("norm_drift" + tag, r.max_norm_drift, kNormDriftTolerance));
  m.push_back(Metric::at_most("flagged_trajectories" + tag,
                              static_cast<double>(r.ensemble.flagged_count()), 0.0));
  if (config.sampling == SamplingStrategy::quantile) {
    m.push_back(Metric::holds("ordering_preserved" + tag, ordering_preserved(r.ensemble)));
  }

  const bool harmonic = std::holds_alternative<HarmonicPotential>(config.potential);
  const auto* sine = std::get_if<SinusoidalForce>(&config.force);
  const bool resonant = sine && sine->frequency() == 1.0;

  if (harmonic) {
    m.push_back(Metric::at_most("oracle_sup_deviation" + tag,
                                oracle_deviation(r, config.compare_until), kOracleTolerance));
  } else {
    m.push_back(Metric::at_most("oracle_sup_deviation" + tag,
                                oracle_deviation(r, config.compare_until),
                                kDuffingOracleTolerance));
  }

  // Static ground state and free-oscillation fit.
  if (harmonic && std::holds_alternative<ZeroForce>(config.force)) {
    if (r.n == 0) {
      double worst = 0.0;
      for (double x : s.mean_x) worst = std::max(worst, std::abs(x));
      m.push_back(Metric::at_most("max_abs_mean_x" + tag, worst, 1e-3));
      m.push_back(Metric::at_most("max_trajectory_displacement" + tag,
                                  max_displacement(r.ensemble), 1e-6));
    } else if (fits.full) {
      const auto& p = fits.full->sinusoid();
      m.push_back(Metric::at_most("fit_omega_rel_error" + tag, std::abs(p.omega - 1.0), 0.01));
      m.push_back(Metric::at_most("fit_abs_phase" + tag, std::abs(p.phase), 0.02));
      m.push_back(Metric::at_most("fit_rms_residual" + tag, fits.full->rms_residual, 1e-2));
    }
  }

  // Ehrenfest relations for the linear, non-impulsive, off-resonant drives.
  const bool ehrenfest_checked =
      harmonic && !std::holds_alternative<GaussianImpulse>(config.force) && !resonant;
  if (ehrenfest_checked || !harmonic) {
    const auto res = ehrenfest_residuals(s, config.force, config.potential);
    const double t_to = std::min(config.compare_until, config.t_max) - 1.0;
    m.push_back(Metric::at_most("ehrenfest_position_residual" + tag, res.sup_position(1.0, t_to),
                                kEhrenfestTolerance));
    m.push_back(Metric::at_most("ehrenfest_momentum_residual" + tag, res.sup_momentum(1.0, t_to),
                                kEhrenfestTolerance));
    if (!harmonic) {
      const auto naive = ehrenfest_residuals(s, config.force, HarmonicPotential{});
      m.push_back(Metric::at_least("ehrenfest_naive_harmonic_excess" + tag,
                                   naive.sup_momentum(1.0, t_to) - res.sup_momentum(1.0, t_to),
                                   0.0));
    }
  }

  if (const auto* g = std::get_if<GaussianImpulse>(&config.force)) {
    if (fits.before_impulse && fits.after_impulse) {
      const double pre = fits.before_impulse->sinusoid().amplitude;
      const double post = fits.after_impulse->sinusoid().amplitude;
      m.push_back(Metric::at_least("impulse_amplitude_gain" + tag, post - pre, 0.0));
      if (r.n == 0) {
        const double expected = std::exp(-0.5 * g->width() * g->width());
        m.push_back(Metric::at_most("impulse_post_amplitude_rel_error" + tag,
                                    std::abs(post - expected) / expected, 0.03));
      }
    }
  }

  if (resonant && harmonic) {
    const double slope = envelope_slope(s.times, s.mean_x, {0.0, config.t_max});
    const double expected = 0.5 * sine->amplitude();
    m.push_back(Metric::at_most("envelope_slope_rel_error" + tag,
                                std::abs(slope - expected) / expected, 0.05));
    std::vector<double> radius(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) radius[k] = std::hypot(s.mean_x[k], s.mean_p[k]);
    const auto peaks = periodic_maxima(s.times, radius, 2.0 * std::numbers::pi);
    m.push_back(Metric::holds("phase_space_radius_monotone" + tag,
                              std::is_sorted(peaks.begin(), peaks.end(), std::less_equal<>()) &&
                                  std::adjacent_find(peaks.begin(), peaks.end()) == peaks.end()));
  }

  if (!harmonic) {
    const auto gap = third_moment_gap(s);
    double gap_max = 0.0;
    std::vector<double> abs_gap(s.size()), abs_x(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      abs_gap[k] = std::abs(gap[k]);
      abs_x[k] = std::abs(s.mean_x[k]);
      gap_max = std::max(gap_max, abs_gap[k]);
    }
    m.push_back(Metric::at_least("third_moment_gap_max" + tag, gap_max, 1e-3));
    const auto gap_peaks = periodic_maxima(s.times, abs_gap, 2.0 * std::numbers::pi);
    const auto x_peaks = periodic_maxima(s.times, abs_x, 2.0 * std::numbers::pi);
    m.push_back(Metric::at_least("gap_envelope_amplitude_correlation" + tag,
                                 pearson(gap_peaks, x_peaks), 0.8));
    const auto beats = classical_beat_peaks(config);
    const double top = *std::max_element(beats.begin(), beats.end());
    m.push_back(Metric::at_least("classical_beat_drop" + tag, (top - beats.back()) / top, 0.1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace detail {

inline std::string metadata_block(const ScenarioConfig& config, std::size_t n) {
  std::ostringstream out;
  out << "# scenario: " << config.name << "\n"
      << "# figure: " << config.figure << "\n"
      << "# n: " << n << "\n"
      << "# force: " << describe(config.force) << "\n"
      << "# potential: " << describe(config.potential) << "\n"
      << "# L: " << format_exact(config.grid.half_width) << "\n"
      << "# M: " << config.grid.num_points << "\n"
      << "# dt_pde: " << format_exact(config.dt_pde) << "\n"
      << "# dt_out: " << format_exact(config.dt_out) << "\n"
      << "# t_max: " << format_exact(config.t_max) << "\n"
      << "# samples: " << config.samples << "\n"
      << "# sampling: " << to_string(config.sampling) << "\n"
      << "# seed: " << config.seed << "\n";
  return out.str();
}

inline void append_fit_rows(std::ostringstream& out, const std::string& prefix,
                            const FitResult& fit) {
  std::istringstream lines(format_fit_report(fit));
  std::string line;
  while (std::getline(lines, line)) out << "# " << prefix << "." << line << "\n";
}

}  // namespace detail

inline void write_variant_outputs(const ScenarioConfig& config, const PipelineResult& r,
                                  const VariantFits& fits, const std::vector<Metric>& metrics,
                                  const std::filesystem::path& dir) {
  const auto& s = r.averages;
  if (config.wants(OutputKind::averages) || config.wants(OutputKind::oracle_comparison)) {
    std::ostringstream out;
    out << detail::metadata_block(config, r.n);
    out << "# n_effective: " << s.n_effective << "\n";
    if (fits.full) detail::append_fit_rows(out, "fit", *fits.full);
    if (fits.before_impulse) detail::append_fit_rows(out, "fit_before", *fits.before_impulse);
    if (fits.after_impulse) detail::append_fit_rows(out, "fit_after", *fits.after_impulse);
    out << "t,mean_x,mean_p,mean_x3,oracle_x,residual\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
      out << format_value(s.times[k]) << ',' << format_value(s.mean_x[k]) << ','
          << format_value(s.mean_p[k]) << ',' << format_value(s.mean_x3[k]) << ','
          << format_value(r.oracle[k].x) << ',' << format_value(s.mean_x[k] - r.oracle[k].x)
          << "\n";
    }
    write_atomically(dir / "averages.csv", out.str());
  }

  if (config.wants(OutputKind::oracle_comparison)) {
    std::ostringstream out;
    out << detail::metadata_block(config, r.n) << "# source: classical oracle\n";
    out << "t,mean_x,mean_p,mean_x3\n";
    for (const auto& st : r.oracle) {
      out << format_value(st.t) << ',' << format_value(st.x) << ',' << format_value(st.p) << ','
          << format_value(st.x * st.x * st.x) << "\n";
    }
    write_atomically(dir / "oracle.csv", out.str());
  }

  if (config.wants(OutputKind::trajectories)) {
    constexpr std::size_t kStride = 10;
    std::ostringstream out;
    out << detail::metadata_block(config, r.n) << "# time_stride: " << kStride << "\n";
    write_ensemble_csv(out, r.ensemble, kStride);
    write_atomically(dir / "trajectories.csv", out.str());
  }

  if (config.wants(OutputKind::phase_space)) {
    // Five trajectories starting closest to the density maximum.
    std::vector<std::size_t> order(r.ensemble.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto dist = [&](std::size_t i) {
      return std::abs(r.ensemble.trajectories[i].positions[0] - r.density_peak);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    order.resize(std::min<std::size_t>(5, order.size()));
    std::sort(order.begin(), order.end());
    std::ostringstream out;
    out << detail::metadata_block(config, r.n) << "# selection: central trajectories\n";
    out << "trajectory,t,x,p\n";
    const auto& times = *r.ensemble.times;
    for (std::size_t i : order) {
      const auto& traj = r.ensemble.trajectories[i];
      for (std::size_t k = 0; k < times.size(); ++k) {
        out << i << ',' << format_value(times[k]) << ',' << format_value(traj.positions[k]) << ','
            << format_value(traj.momenta[k]) << "\n";
      }
    }
    write_atomically(dir / "phase_space.csv", out.str());
  }

  if (config.wants(OutputKind::fits)) {
    std::ostringstream out;
    if (fits.full) out << format_fit_report(*fits.full);
    if (fits.before_impulse) {
      out << "window: before_impulse\n" << format_fit_report(*fits.before_impulse);
    }
    if (fits.after_impulse) {
      out << "window: after_impulse\n" << format_fit_report(*fits.after_impulse);
    }
    write_atomically(dir / "fits.txt", out.str());
  }

  ComparisonReport variant{config.name, metrics};
  write_atomically(dir / "report.txt", variant.format());
}

// ---------------------------------------------------------------------------
// Amplitude scan

struct ScanRow {
  std::size_t n = 0;
  double amplitude = 0.0;
  double volume = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  FitResult power_law;
  /// (max - min) / mean of Gamma_n / n over n >= 1.
  double volume_spread = 0.0;

  std::string csv() const {
    std::ostringstream out;
    out << "# model: power-law\n"
        << "# zeta: " << format_value(power_law.power_law().zeta) << "\n"
        << "# exponent: " << format_value(power_law.power_law().exponent) << "\n"
        << "# volume_spread: " << format_value(volume_spread) << "\n"
        << "n,amplitude,phase_space_volume,volume_per_n\n";
    for (const auto& row : rows) {
      out << row.n << ',' << format_value(row.amplitude) << ',' << format_value(row.volume) << ','
          << (row.n > 0 ? format_value(row.volume / static_cast<double>(row.n)) : "") << "\n";
    }
    return out.str();
  }
};

using AmplitudeProvider = std::function<double(std::size_t)>;

/// Fitted <x> amplitude of the free oscillator started from the n-th
/// equal-weight superposition.
inline double measured_amplitude(const ScenarioConfig& base, std::size_t n) {
  auto config = base;
  config.force = ZeroForce{};
  const auto r = run_pipeline(config, n);
  if (n == 0) return fit_sinusoid(r.averages.times, r.averages.mean_x, 1.0).sinusoid().amplitude;
  return fit_sinusoid(r.averages.times, r.averages.mean_x).sinusoid().amplitude;
}

/// Runs n = 0 and n_from..n_to; fits A_n = zeta n^b on n >= 1.
inline ScanResult amplitude_scan(std::size_t n_from, std::size_t n_to, const ScenarioConfig& base,
                                 AmplitudeProvider provider = {}) {
  if (n_from < 1 || n_to <= n_from) {
    throw Error(ErrorKind::config, "amplitude scan needs 1 <= from < to");
  }
  if (!provider) provider = [&](std::size_t n) { return measured_amplitude(base, n); };

  ScanResult result;
  std::vector<AmplitudePoint> points;
  std::vector<double> per_n;
  auto add = [&](std::size_t n) {
    double a = 0.0;
    try {
      a = provider(n);
    } catch (const Error& e) {
      throw Error(e.kind(), "amplitude scan at n = " + std::to_string(n) + ": " + e.what());
    }
    result.rows.push_back({n, a, phase_space_volume(std::abs(a))});
    if (n >= 1) {
      points.push_back({static_cast<double>(n), a});
      per_n.push_back(result.rows.back().volume / static_cast<double>(n));
    }
  };
  add(0);
  for (std::size_t n = n_from; n <= n_to; ++n) add(n);
  result.power_law = fit_amplitude_power_law(points);
  result.volume_spread = relative_spread(per_n);
  return result;
}

inline ComparisonReport score_scan(const ScenarioConfig& config, const ScanResult& scan) {
  ComparisonReport report{config.name, {}};
  const double b = scan.power_law.power_law().exponent;
  report.metrics.push_back(Metric::at_most("power_law_exponent_error", std::abs(b - 0.5), 0.05));
  report.metrics.push_back(Metric::at_most("volume_per_n_spread", scan.volume_spread, 0.15));
  for (const auto& row : scan.rows) {
    if (row.n == 1) {
      const double expected = 1.0 / std::numbers::sqrt2;
      report.metrics.push_back(Metric::at_most("amplitude_n1_rel_error",
                                               std::abs(row.amplitude - expected) / expected,
                                               0.02));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Entry point

inline ComparisonReport run_scenario(const ScenarioConfig& config,
                                     const std::filesystem::path& output_dir) {
  config.validate();
  const auto dir = output_dir / config.name;
  auto with_context = [&](const Error& e) {
    return Error(e.kind(), "scenario '" + config.name + "': " + e.what());
  };

  if (config.kind == ScenarioKind::amplitude_scan) {
    ScanResult scan;
    try {
      scan = amplitude_scan(config.n_values.front(), config.n_values.back(), config);
    } catch (const Error& e) {
      throw with_context(e);
    }
    auto report = score_scan(config, scan);
    write_atomically(dir / "amplitudes.csv", scan.csv());
    if (config.wants(OutputKind::fits)) {
      write_atomically(dir / "power_law.txt", format_fit_report(scan.power_law));
    }
    write_atomically(dir / "report.txt", report.format());
    return report;
  }

  ComparisonReport report{config.name, {}};
  for (std::size_t n : config.n_values) {
    try {
      const auto result = run_pipeline(config, n);
      const auto fits = variant_fits(config, result);
      auto metrics = evaluate_variant(config, result, fits);
      write_variant_outputs(config, result, fits, metrics, dir / ("n" + std::to_string(n)));
      report.metrics.insert(report.metrics.end(), metrics.begin(), metrics.end());
    } catch (const Error& e) {
      throw with_context(e);
    }
  }
  write_atomically(dir / "report.txt", report.format());
  return report;
}

}  // namespace bohmlab
