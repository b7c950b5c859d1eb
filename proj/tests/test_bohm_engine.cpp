#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bohmlab/bohm_engine.hpp"
#include "oracle_values.hpp"
#include "test_support.hpp"

using namespace bohmlab;
using testing_support::Case;

namespace {

ComplexField plane_phase(const SpatialGrid& g, double k) {
  const auto psi = eigenstate(0, g);
  std::vector<double> re(g.size()), im(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    re[j] = psi[j] * std::cos(k * g.x(j));
    im[j] = psi[j] * std::sin(k * g.x(j));
  }
  return {g, re, im};
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(VelocityField, GroundStateIsStatic) {
  const auto f = initial_superposition(0, default_grid());
  for (double x : {-3.0, -0.5, 0.0, 0.123, 2.0, 4.5}) EXPECT_NEAR(velocity_field(f, x), 0.0, 1e-10);
}

TEST(VelocityField, PlanePhase) {
  const auto f = plane_phase(default_grid(), 0.5);
  for (double x : {-0.05, 0.0, 0.0371}) EXPECT_NEAR(velocity_field(f, x), 0.5, 1e-4);
}

TEST(VelocityField, Errors) {
  const auto g = default_grid();
  const ComplexField odd(g, eigenstate(1, g), std::vector<double>(g.size(), 0.0));
  try {
    (void)velocity_field(odd, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::node_proximity);
  }
  EXPECT_THROW((void)velocity_field(odd, 10.5), Error);
}

TEST(VelocityField, ParityAntisymmetry) {
  // Even components only, so |Psi|^2 stays symmetric and v odd at all times.
  const auto g = default_grid();
  const auto a = eigenstate(0, g);
  const auto b = eigenstate(2, g);
  std::vector<double> re(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) re[j] = (a[j] + b[j]) / std::numbers::sqrt2;
  SolverConfig c;
  c.t_max = 4.0;
  const auto h = propagate(ComplexField(g, re, std::vector<double>(g.size(), 0.0)), c);
  for (std::size_t k : {50u, 120u, 200u, 400u}) {
    for (double x : {0.3, 1.1, 2.37}) {
      EXPECT_NEAR(velocity_field(h.snapshot(k), -x), -velocity_field(h.snapshot(k), x), 1e-8)
          << "k=" << k << " x=" << x;
    }
  }
}

TEST(QuantumPotential, GroundState) {
  const auto f = initial_superposition(0, default_grid());
  EXPECT_NEAR(quantum_potential(f, 0.0), 0.5, 1e-3);
  EXPECT_NEAR(quantum_potential(f, 1.0), 0.0, 1e-3);
  EXPECT_NEAR(quantum_potential(f, 1.7), 0.5 * (1 - 1.7 * 1.7), 1e-3);
}

TEST(Sampling, QuantileMoments) {
  const auto g = default_grid();
  const auto f0 = initial_superposition(0, g);
  EXPECT_NEAR(mean(sample_initial_positions(f0, 401, SamplingStrategy::quantile)), 0.0, 1e-6);
  const auto xs = sample_initial_positions(f0, 2000, SamplingStrategy::quantile);
  double var = 0.0;
  for (double x : xs) var += x * x;
  EXPECT_NEAR(var / 2000.0, 0.5, 2e-3);
  const auto f1 = initial_superposition(1, g);
  EXPECT_NEAR(mean(sample_initial_positions(f1, 2000, SamplingStrategy::quantile)),
              oracle::kMeanX0[1], 5e-3);
}

TEST(Sampling, QuantilesAreSortedAndInside) {
  const auto g = default_grid();
  const auto xs = sample_initial_positions(initial_superposition(6, g), 2000,
                                           SamplingStrategy::quantile);
  EXPECT_TRUE(std::is_sorted(xs.begin(), xs.end()));
  EXPECT_GT(xs.front(), -10.0);
  EXPECT_LT(xs.back(), 10.0);
}

TEST(Sampling, SeededRandomIsReproducible) {
  const auto f = initial_superposition(2, default_grid());
  const auto a = sample_initial_positions(f, 500, SamplingStrategy::seeded_random, 42);
  const auto b = sample_initial_positions(f, 500, SamplingStrategy::seeded_random, 42);
  const auto c = sample_initial_positions(f, 500, SamplingStrategy::seeded_random, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_LT(ks_statistic(a, f), 0.07);
}

TEST(Sampling, Errors) {
  const auto f = initial_superposition(0, default_grid());
  EXPECT_THROW((void)sample_initial_positions(f.scaled(2.0), 10, SamplingStrategy::quantile),
               Error);
  EXPECT_THROW((void)sample_initial_positions(f, 0, SamplingStrategy::quantile), Error);
}

TEST(DensityCdf, QuantileInvertsCdf) {
  // Random cutoffs and probability levels; the quantile must invert the CDF.
  const auto g = default_grid();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> level(1e-6, 1.0 - 1e-6);
  for (std::size_t n = 0; n <= 8; ++n) {
    const DensityCdf cdf(initial_superposition(n, g));
    for (int i = 0; i < 200; ++i) {
      const double u = level(rng);
      ASSERT_NEAR(cdf(cdf.quantile(u)), u, 1e-10) << "n=" << n << " u=" << u;
    }
  }
}

TEST(Trajectory, GroundStateParticleStaysPut) {
  const auto& h = testing_support::history({.n = 0});
  const auto t = integrate_trajectory(h, 0.5);
  EXPECT_FALSE(t.flagged());
  for (double x : t.positions) ASSERT_NEAR(x, 0.5, 1e-8);
}

TEST(Trajectory, ConstantForceMovesGroundState) {
  const auto& h = testing_support::history({.n = 0, .force = ConstantForce{0.7}});
  const auto t = integrate_trajectory(h, 0.5);
  const auto [lo, hi] = std::minmax_element(t.positions.begin(), t.positions.end());
  EXPECT_GT(*hi - *lo, 1.0);
}

TEST(Ensemble, SingletonMatchesTrajectory) {
  const auto& h = testing_support::history({.n = 2});
  const std::vector<double> x0{0.37};
  const auto e = integrate_ensemble(h, x0);
  const auto t = integrate_trajectory(h, 0.37);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.trajectories[0].positions, t.positions);
  EXPECT_EQ(e.trajectories[0].momenta, t.momenta);
}

TEST(Ensemble, NoCrossing) {
  const auto& e = testing_support::ensemble({.n = 2}, 400);
  EXPECT_EQ(e.flagged_count(), 0u);
  for (std::size_t k = 0; k < e.times->size(); ++k) {
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      ASSERT_LT(e.trajectories[i].positions[k], e.trajectories[i + 1].positions[k])
          << "k=" << k << " i=" << i;
    }
  }
}

TEST(Ensemble, MomentaFinite) {
  const auto& e = testing_support::ensemble({.n = 2}, 400);
  for (const auto& t : e.trajectories) {
    if (t.flagged()) continue;
    for (double p : t.momenta) ASSERT_TRUE(std::isfinite(p));
  }
}

TEST(Ensemble, Equivariance) {
  const Case s{.n = 2};
  const auto& h = testing_support::history(s);
  const auto& e = testing_support::ensemble(s, 2000);
  for (std::size_t k : {0u, 500u, 1000u}) {
    std::vector<double> xs;
    for (const auto& t : e.trajectories) xs.push_back(t.positions[k]);
    EXPECT_LT(ks_statistic(xs, h.snapshot(k)), 0.05) << "t=" << h.time(k);
  }
}

TEST(Ensemble, ThreadCountDoesNotChangeResults) {
  const auto& h = testing_support::history({.n = 2});
  const auto x0 = sample_initial_positions(h.snapshot(0), 37, SamplingStrategy::quantile);
  const auto one = integrate_ensemble(h, x0, {}, 1);
  const auto four = integrate_ensemble(h, x0, {}, 4);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    ASSERT_EQ(one.trajectories[i].positions, four.trajectories[i].positions);
  }
}

TEST(Ensemble, RejectsPositionsOutsideBox) {
  const auto& h = testing_support::history({.n = 0});
  const std::vector<double> x0{0.0, 11.0};
  EXPECT_THROW((void)integrate_ensemble(h, x0), Error);
}

TEST(Ensemble, CsvLayout) {
  const auto& h = testing_support::history({.n = 0});
  const std::vector<double> x0{-0.5, 0.5};
  const auto e = integrate_ensemble(h, x0);
  std::ostringstream out;
  write_ensemble_csv(out, e, 1000);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trajectory,t,x,p,flag");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2u * 3u);
}
