#pragma once

// Shared fixtures: propagations are expensive, so each distinct setup is
// computed once per test binary.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include "bohmlab/bohm_engine.hpp"
#include "bohmlab/core_model.hpp"
#include "bohmlab/ensemble_stats.hpp"
#include "bohmlab/tdse_solver.hpp"

namespace testing_support {

struct Case {
  std::size_t n = 0;
  bohmlab::ForceModel force = bohmlab::ZeroForce{};
  bohmlab::PotentialModel potential = bohmlab::HarmonicPotential{};
  double t_max = 20.0;
  double half_width = 10.0;
  std::size_t num_points = 2001;
  double dt_pde = 0.001;

  bohmlab::SolverConfig solver() const {
    bohmlab::SolverConfig c;
    c.dt_pde = dt_pde;
    c.t_max = t_max;
    c.force = force;
    c.potential = potential;
    return c;
  }

  std::string key() const {
    return std::to_string(n) + "|" + bohmlab::describe(force) + "|" +
           bohmlab::describe(potential) + "|" + std::to_string(t_max) + "|" +
           std::to_string(half_width) + "|" + std::to_string(num_points) + "|" +
           std::to_string(dt_pde);
  }
};

inline const bohmlab::WaveHistory& history(const Case& s) {
  static std::map<std::string, std::unique_ptr<bohmlab::WaveHistory>> cache;
  static std::mutex lock;
  std::scoped_lock guard(lock);
  auto& slot = cache[s.key()];
  if (!slot) {
    const auto grid = bohmlab::build_grid(s.half_width, s.num_points);
    slot = std::make_unique<bohmlab::WaveHistory>(
        bohmlab::propagate(bohmlab::initial_superposition(s.n, grid), s.solver()));
  }
  return *slot;
}

inline const bohmlab::TrajectoryEnsemble& ensemble(const Case& s, std::size_t count) {
  static std::map<std::string, std::unique_ptr<bohmlab::TrajectoryEnsemble>> cache;
  static std::mutex lock;
  const auto& h = history(s);
  std::scoped_lock guard(lock);
  auto& slot = cache[s.key() + "#" + std::to_string(count)];
  if (!slot) {
    const auto x0 = bohmlab::sample_initial_positions(h.snapshot(0), count,
                                                      bohmlab::SamplingStrategy::quantile);
    slot = std::make_unique<bohmlab::TrajectoryEnsemble>(bohmlab::integrate_ensemble(h, x0));
  }
  return *slot;
}

inline bohmlab::AveragedSeries averages(const Case& s, std::size_t count) {
  return bohmlab::bohmian_average(ensemble(s, count));
}

}  // namespace testing_support
