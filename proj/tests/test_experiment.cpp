#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bohmlab/experiment.hpp"

using namespace bohmlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bohmlab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.name = "small";
  c.n_values = {1};
  c.grid = {8.0, 801};
  c.t_max = 4.0;
  c.compare_until = 4.0;
  c.samples = 50;
  c.outputs = {OutputKind::trajectories, OutputKind::averages, OutputKind::phase_space,
               OutputKind::fits, OutputKind::oracle_comparison};
  return c;
}

}  // namespace

TEST(Catalog, NineBuiltins) {
  const auto all = builtin_scenarios();
  ASSERT_EQ(all.size(), 9u);
  for (const auto& c : all) EXPECT_NO_THROW(c.validate()) << c.name;
}

TEST(Catalog, ParametersMatchStudy) {
  const auto fig5 = *find_builtin("fig5-constant-force");
  EXPECT_EQ(std::get<ConstantForce>(fig5.force).value, 0.7);
  EXPECT_EQ(fig5.n_values, (std::vector<std::size_t>{0, 4}));

  const auto fig7 = *find_builtin("fig7-impulse");
  EXPECT_EQ(std::get<GaussianImpulse>(fig7.force), GaussianImpulse(5.0, 0.4));

  EXPECT_EQ(std::get<SinusoidalForce>(find_builtin("fig8-sinusoidal-high")->force),
            SinusoidalForce(0.8, 1.4));
  EXPECT_EQ(std::get<SinusoidalForce>(find_builtin("fig8-sinusoidal-low")->force),
            SinusoidalForce(0.8, 0.6));

  const auto res = *find_builtin("resonance");
  EXPECT_EQ(std::get<SinusoidalForce>(res.force), SinusoidalForce(0.2, 1.0));
  EXPECT_EQ(res.grid.half_width, 15.0);

  const auto duff = *find_builtin("fig9-duffing");
  EXPECT_EQ(std::get<DuffingPotential>(duff.potential).lambda, 0.01);
  EXPECT_EQ(std::get<SinusoidalForce>(duff.force), SinusoidalForce(0.2, 1.0));
  EXPECT_EQ(duff.n_values, std::vector<std::size_t>{0});

  const auto fig2 = *find_builtin("fig2-free-oscillator");
  EXPECT_TRUE(std::holds_alternative<ZeroForce>(fig2.force));
  EXPECT_EQ(fig2.grid.half_width, 10.0);

  EXPECT_FALSE(find_builtin("no-such-scenario").has_value());
}

TEST(Config, BuiltinsRoundTrip) {
  for (const auto& c : builtin_scenarios()) {
    EXPECT_EQ(parse_config(serialize(c)), c) << c.name;
  }
}

TEST(Config, RandomRoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    ScenarioConfig c;
    c.name = "random-" + std::to_string(trial);
    c.figure = "trial " + std::to_string(trial);
    c.n_values = {static_cast<std::size_t>(pick(rng)), 7};
    switch (pick(rng)) {
      case 0: c.force = ZeroForce{}; break;
      case 1: c.force = ConstantForce{u(rng) - 1.5}; break;
      case 2: c.force = GaussianImpulse(u(rng) * 3, u(rng)); break;
      default: c.force = SinusoidalForce(u(rng), u(rng)); break;
    }
    if (pick(rng) % 2) c.potential = DuffingPotential{u(rng) / 100};
    c.grid = {8.0 + u(rng), 1001};
    c.t_max = 10.0 * u(rng);
    c.compare_until = c.t_max * 0.5;
    c.dt_pde = 0.002;
    c.samples = 1 + static_cast<std::size_t>(1000 * u(rng));
    c.sampling = pick(rng) % 2 ? SamplingStrategy::quantile : SamplingStrategy::seeded_random;
    c.seed = rng();
    ASSERT_EQ(parse_config(serialize(c)), c) << serialize(c);
  }
}

TEST(Config, ParsesHandWrittenFile) {
  const auto c = parse_config(R"(
[scenario]
name = custom
n = 1..3, 6
t_max = 12.5

[force]
type = sinusoidal
amplitude = 0.3
omega = 0.9

[sampling]
strategy = seeded-random
seed = 99
samples = 300
)");
  EXPECT_EQ(c.name, "custom");
  EXPECT_EQ(c.n_values, (std::vector<std::size_t>{1, 2, 3, 6}));
  EXPECT_EQ(c.t_max, 12.5);
  EXPECT_EQ(c.compare_until, 12.5);
  EXPECT_EQ(std::get<SinusoidalForce>(c.force), SinusoidalForce(0.3, 0.9));
  EXPECT_EQ(c.sampling, SamplingStrategy::seeded_random);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.samples, 300u);
}

TEST(Config, RejectsInvalidInput) {
  const std::vector<std::string> bad{
      "[scenario]\nn = 1\n",                                           // no name
      "[scenario]\nname = x\nn = 1\ncolour = red\n",                   // unknown key
      "[scenario]\nname = x\nn = 1\n[extras]\na = 1\n",                // unknown section
      "[scenario]\nname = x\nn = 1\nt_max = soon\n",                   // not a number
      "[scenario]\nname = x\nn = 1\n[sampling]\nsamples = 200000\n",   // too many samples
      "[scenario]\nname = x\nn = 1\n[sampling]\nsamples = 0\n",        // too few samples
      "[scenario]\nname = x\nn = 1\n[force]\ntype = magnetic\n",       // unknown force
      "[scenario]\nname = x\nn = 1\n[force]\ntype = gaussian\nt_mu = 5\nsigma = 0\n",
      "[scenario]\nname = x\nn = 1\n[grid]\nM = 1000\n",               // even M
      "[scenario]\nname = x\nn = 1\n[solver]\ndt_pde = 0.003\n",       // not a divisor
      "[scenario]\nname = x\nn = 1\ncompare_until = 30\n",             // beyond t_max
  };
  for (const auto& text : bad) {
    try {
      (void)parse_config(text);
      ADD_FAILURE() << "accepted:\n" << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config) << text;
    }
  }
}

TEST(Report, OverallIsConjunction) {
  ComparisonReport r{"x", {Metric::at_most("a", 1.0, 2.0), Metric::at_least("b", 3.0, 1.0)}};
  EXPECT_TRUE(r.overall());
  r.metrics.push_back(Metric::holds("c", false));
  EXPECT_FALSE(r.overall());
  EXPECT_NE(r.format().find("overall: FAIL"), std::string::npos);
}

TEST(AmplitudeScan, InjectedSquareRoot) {
  const auto base = *find_builtin("fig3-amplitude-scan");
  const auto scan = amplitude_scan(1, 20, base, [](std::size_t n) { return std::sqrt(double(n)); });
  EXPECT_NEAR(scan.power_law.power_law().exponent, 0.5, 1e-10);
  ASSERT_EQ(scan.rows.size(), 21u);
  EXPECT_EQ(scan.rows.front().n, 0u);
  EXPECT_NEAR(scan.volume_spread, 0.0, 1e-12);
  const auto csv = scan.csv();
  EXPECT_NE(csv.find("# exponent: 0.5"), std::string::npos);
  EXPECT_NE(csv.find("n,amplitude,phase_space_volume,volume_per_n"), std::string::npos);
}

TEST(AmplitudeScan, Errors) {
  const auto base = *find_builtin("fig3-amplitude-scan");
  auto one = [](std::size_t) { return 1.0; };
  EXPECT_THROW((void)amplitude_scan(0, 5, base, one), Error);
  EXPECT_THROW((void)amplitude_scan(5, 5, base, one), Error);
  try {
    (void)amplitude_scan(1, 5, base, [](std::size_t n) -> double {
      if (n == 3) throw Error(ErrorKind::stability, "boom");
      return 1.0;
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::stability);
    EXPECT_NE(std::string(e.what()).find("n = 3"), std::string::npos);
  }
}

TEST(AmplitudeScan, FirstAmplitudeFromPipeline) {
  auto base = *find_builtin("fig3-amplitude-scan");
  EXPECT_NEAR(measured_amplitude(base, 1), 1.0 / std::numbers::sqrt2, 0.02 / std::numbers::sqrt2);
}

TEST(RunScenario, WritesArtifactsWithMetadata) {
  const auto dir = scratch_dir("artifacts");
  const auto report = run_scenario(small_config(), dir);
  EXPECT_FALSE(report.metrics.empty());
  const auto variant = dir / "small" / "n1";
  for (const char* f : {"averages.csv", "trajectories.csv", "phase_space.csv", "oracle.csv",
                        "fits.txt", "report.txt"}) {
    EXPECT_TRUE(fs::exists(variant / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "small" / "report.txt"));
  const auto averages = slurp(variant / "averages.csv");
  EXPECT_EQ(averages.rfind("# scenario: small\n", 0), 0u);
  EXPECT_NE(averages.find("\nt,mean_x,mean_p,mean_x3,oracle_x,residual\n"), std::string::npos);
  const auto traj = slurp(variant / "trajectories.csv");
  EXPECT_NE(traj.find("\ntrajectory,t,x,p,flag\n"), std::string::npos);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    EXPECT_NE(entry.path().extension(), ".tmp");
  }
  fs::remove_all(dir);
}

TEST(RunScenario, Deterministic) {
  auto c = small_config();
  c.sampling = SamplingStrategy::seeded_random;
  c.seed = 1234;
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  (void)run_scenario(c, a);
  (void)run_scenario(c, b);
  for (const char* f : {"averages.csv", "trajectories.csv", "phase_space.csv", "oracle.csv"}) {
    EXPECT_EQ(slurp(a / "small" / "n1" / f), slurp(b / "small" / "n1" / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunScenario, ErrorsCarryScenarioContext) {
  auto c = small_config();
  c.name = "cramped";
  c.n_values = {30};
  try {
    (void)run_scenario(c, scratch_dir("cramped"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::grid_too_small);
    EXPECT_NE(std::string(e.what()).find("cramped"), std::string::npos);
  }
}

TEST(RunScenario, ConstantForceTracksOracle) {
  auto c = *find_builtin("fig5-constant-force");
  c.samples = 400;
  const auto dir = scratch_dir("fig5");
  const auto report = run_scenario(c, dir);
  for (const auto& m : report.metrics) {
    if (m.name.starts_with("oracle_sup_deviation")) EXPECT_TRUE(m.pass) << m.name << " " << m.value;
  }
  fs::remove_all(dir);
}
