#pragma once

// Guidance-equation machinery: the Bohmian velocity field of a sampled
// wavefunction, |Psi|^2 sampling of initial positions, and RK4 integration of
// trajectories through a stored WaveHistory.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bohmlab/core_model.hpp"
#include "bohmlab/error.hpp"
#include "bohmlab/tdse_solver.hpp"

namespace bohmlab {

/// |Psi|^2 below this is treated as a node.
inline constexpr double kNodeDensity = 1e-12;

namespace detail {

/// Four-point Lagrange stencil on a uniform grid.
struct CubicStencil {
  std::size_t first;
  std::array<double, 4> weights;
};

inline CubicStencil cubic_stencil(const SpatialGrid& grid, double x) {
  const std::size_t m = grid.size();
  const double dx = grid.spacing();
  const double u = (x + grid.half_width()) / dx;
  auto cell = static_cast<std::ptrdiff_t>(std::floor(u));
  cell = std::clamp<std::ptrdiff_t>(cell, 0, static_cast<std::ptrdiff_t>(m) - 2);
  auto first = std::clamp<std::ptrdiff_t>(cell - 1, 0, static_cast<std::ptrdiff_t>(m) - 4);
  // Local coordinate measured from node `first`, in units of dx.
  const double s = u - static_cast<double>(first);
  CubicStencil st{static_cast<std::size_t>(first), {}};
  st.weights[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
  st.weights[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
  st.weights[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
  st.weights[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
  return st;
}

/// First derivative at node j: fourth-order central in the interior,
/// second-order next to the boundary, zero on the boundary nodes.
inline double derivative(std::span<const double> f, std::size_t j, double dx) {
  const std::size_t m = f.size();
  if (j == 0 || j + 1 == m) return 0.0;
  if (j < 2 || j + 2 >= m) return (f[j + 1] - f[j - 1]) / (2.0 * dx);
  return (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * dx);
}

inline double second_derivative(std::span<const double> f, std::size_t j, double dx) {
  const std::size_t m = f.size();
  if (j == 0 || j + 1 == m) return 0.0;
  if (j < 2 || j + 2 >= m) return (f[j - 1] - 2.0 * f[j] + f[j + 1]) / (dx * dx);
  return (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) /
         (12.0 * dx * dx);
}

}  // namespace detail

/// Probability current Im(Psi* dPsi/dx) and density |Psi|^2 at one point.
struct LocalFlux {
  double current = 0.0;
  double density = 0.0;
};

/// Current and density computed on the grid nodes, then interpolated to x
/// separately with cubic Lagrange polynomials.
inline LocalFlux evaluate_flux(const ComplexField& field, double x) {
  const auto& grid = field.grid();
  const double dx = grid.spacing();
  const auto re = field.real();
  const auto im = field.imag();
  const auto st = detail::cubic_stencil(grid, x);
  LocalFlux out;
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t j = st.first + q;
    const double current =
        re[j] * detail::derivative(im, j, dx) - im[j] * detail::derivative(re, j, dx);
    out.current += st.weights[q] * current;
    out.density += st.weights[q] * field.density(j);
  }
  return out;
}

/// Guidance velocity dS/dx = Im(Psi* Psi') / |Psi|^2 (m = hbar = 1).
inline double velocity_field(const ComplexField& field, double x) {
  if (std::abs(x) > field.grid().half_width()) {
    throw Error(ErrorKind::invalid_argument, "position outside the box");
  }
  const auto flux = evaluate_flux(field, x);
  if (!(flux.density >= kNodeDensity)) {
    throw Error(ErrorKind::node_proximity, "|Psi|^2 = " + std::to_string(flux.density) +
                                               " at x = " + std::to_string(x));
  }
  return flux.current / flux.density;
}

/// Q = -R''/(2R). Diagnostic only; trajectories never use it.
inline double quantum_potential(const ComplexField& field, double x) {
  const auto& grid = field.grid();
  if (std::abs(x) > grid.half_width()) {
    throw Error(ErrorKind::invalid_argument, "position outside the box");
  }
  const double dx = grid.spacing();
  std::vector<double> r(grid.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = field.amplitude(j);

  const auto st = detail::cubic_stencil(grid, x);
  double amp = 0.0, curvature = 0.0, density = 0.0;
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t j = st.first + q;
    amp += st.weights[q] * r[j];
    curvature += st.weights[q] * detail::second_derivative(r, j, dx);
    density += st.weights[q] * field.density(j);
  }
  if (!(density >= kNodeDensity)) {
    throw Error(ErrorKind::node_proximity, "|Psi|^2 = " + std::to_string(density) +
                                               " at x = " + std::to_string(x));
  }
  return -0.5 * curvature / amp;
}

// ---------------------------------------------------------------------------
// Sampling

enum class SamplingStrategy { quantile, seeded_random };

inline std::string to_string(SamplingStrategy s) {
  return s == SamplingStrategy::quantile ? "quantile" : "seeded-random";
}

struct SamplingDescriptor {
  SamplingStrategy strategy = SamplingStrategy::quantile;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  friend bool operator==(const SamplingDescriptor&, const SamplingDescriptor&) = default;
};

/// Cumulative distribution of |Psi|^2: trapezoidal at the nodes, exact
/// integral of the piecewise-linear density in between, so it is monotone.
class DensityCdf {
 public:
  explicit DensityCdf(const ComplexField& field) : grid_(field.grid()) {
    const std::size_t m = grid_.size();
    density_.resize(m);
    cumulative_.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) density_[j] = field.density(j);
    const double dx = grid_.spacing();
    for (std::size_t j = 1; j < m; ++j) {
      cumulative_[j] = cumulative_[j - 1] + 0.5 * dx * (density_[j - 1] + density_[j]);
    }
  }

  double total() const noexcept { return cumulative_.back(); }

  /// Normalized CDF at x.
  double operator()(double x) const {
    const double dx = grid_.spacing();
    if (x <= -grid_.half_width()) return 0.0;
    if (x >= grid_.half_width()) return 1.0;
    const auto j = std::min<std::size_t>(
        static_cast<std::size_t>((x + grid_.half_width()) / dx), grid_.size() - 2);
    const double s = x - grid_.x(j);
    const double slope = (density_[j + 1] - density_[j]) / dx;
    return (cumulative_[j] + density_[j] * s + 0.5 * slope * s * s) / total();
  }

  /// Inverse of the normalized CDF for u in (0, 1).
  double quantile(double u) const {
    const double target = u * total();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    auto j = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    j = std::clamp<std::size_t>(j, 1, grid_.size() - 1) - 1;
    const double dx = grid_.spacing();
    const double a = 0.5 * (density_[j + 1] - density_[j]) / dx;
    const double b = density_[j];
    const double need = target - cumulative_[j];
    const double disc = std::max(0.0, b * b + 4.0 * a * need);
    const double denom = b + std::sqrt(disc);
    const double s = denom > 0.0 ? std::clamp(2.0 * need / denom, 0.0, dx) : 0.0;
    return grid_.x(j) + s;
  }

 private:
  SpatialGrid grid_;
  std::vector<double> density_;
  std::vector<double> cumulative_;
};

inline std::vector<double> sample_initial_positions(const ComplexField& field0, std::size_t count,
                                                    SamplingStrategy strategy,
                                                    std::uint64_t seed = 0) {
  const double n0 = norm(field0);
  if (std::abs(n0 - 1.0) > 1e-6) {
    throw Error(ErrorKind::not_normalized,
                "sampling density has norm " + std::to_string(n0) + ", expected 1");
  }
  if (count == 0) throw Error(ErrorKind::invalid_argument, "sample count must be positive");

  const DensityCdf cdf(field0);
  std::vector<double> positions(count);
  if (strategy == SamplingStrategy::quantile) {
    const auto n = static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      positions[i] = cdf.quantile((static_cast<double>(i) + 0.5) / n);
    }
  } else {
    std::mt19937_64 engine(seed);
    for (auto& x : positions) {
      // 53 random bits mapped to the open interval (0, 1).
      const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
      x = cdf.quantile(u);
    }
  }
  return positions;
}

/// Kolmogorov-Smirnov distance between the empirical law of `positions`
/// and |Psi|^2 of `field`.
inline double ks_statistic(std::vector<double> positions, const ComplexField& field) {
  if (positions.empty()) throw Error(ErrorKind::invalid_argument, "no positions");
  std::sort(positions.begin(), positions.end());
  const DensityCdf cdf(field);
  const auto n = static_cast<double>(positions.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double f = cdf(positions[i]);
    worst = std::max({worst, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Trajectories

enum TrajectoryFlag : unsigned {
  kTrajectoryOk = 0u,
  kNodeFrozen = 1u,  // velocity held at its last valid value near a node
  kLeftBox = 2u,     // reached |x| >= L - dx; excluded from averages
};

struct Trajectory {
  std::shared_ptr<const std::vector<double>> times;
  std::vector<double> positions;
  std::vector<double> momenta;
  unsigned flags = kTrajectoryOk;

  bool flagged() const noexcept { return flags != kTrajectoryOk; }
  std::size_t size() const noexcept { return positions.size(); }
};

namespace detail {

/// Velocity along one trajectory, with freeze-and-flag handling of nodes
/// and box exits.
class GuidanceField {
 public:
  explicit GuidanceField(const WaveHistory& history)
      : history_(history),
        exit_radius_(history.grid().half_width() - history.grid().spacing()) {}

  /// Velocity at x and time t_k + frac dt_out, frac in [0, 1]. Between
  /// snapshots current and density are interpolated linearly in time.
  double operator()(double x, std::size_t k, double frac) {
    if (!(std::abs(x) < exit_radius_)) {
      flags |= kLeftBox;
      return last_valid_;
    }
    LocalFlux flux = evaluate_flux(history_.snapshot(k), x);
    if (frac > 0.0) {
      const LocalFlux next = evaluate_flux(history_.snapshot(k + 1), x);
      flux.current = (1.0 - frac) * flux.current + frac * next.current;
      flux.density = (1.0 - frac) * flux.density + frac * next.density;
    }
    if (!(flux.density >= kNodeDensity)) {
      flags |= kNodeFrozen;
      return last_valid_;
    }
    last_valid_ = flux.current / flux.density;
    return last_valid_;
  }

  unsigned flags = kTrajectoryOk;

 private:
  const WaveHistory& history_;
  double exit_radius_;
  double last_valid_ = 0.0;
};

/// Step-doubling control inside one output interval: an RK4 step over
/// [f0, f1] (fractions of dt_out) is accepted when it agrees with two half
/// steps to kTrajectoryTolerance, otherwise both halves are refined.
inline constexpr double kTrajectoryTolerance = 1e-10;
inline constexpr int kMaxTrajectoryDepth = 14;

inline double rk4_fraction(GuidanceField& v, double x, std::size_t k, double f0, double f1,
                           double dt) {
  const double h = (f1 - f0) * dt;
  const double fm = 0.5 * (f0 + f1);
  const double k1 = v(x, k, f0);
  const double k2 = v(x + 0.5 * h * k1, k, fm);
  const double k3 = v(x + 0.5 * h * k2, k, fm);
  const double k4 = v(x + h * k3, k, f1);
  return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

inline double advance_interval(GuidanceField& v, double x, std::size_t k, double f0, double f1,
                               double dt, double coarse, int depth) {
  const double fm = 0.5 * (f0 + f1);
  const double mid = rk4_fraction(v, x, k, f0, fm, dt);
  const double fine = rk4_fraction(v, mid, k, fm, f1, dt);
  if (std::abs(fine - coarse) <= kTrajectoryTolerance || depth >= kMaxTrajectoryDepth) {
    return fine;
  }
  const double left = advance_interval(v, x, k, f0, fm, dt, mid, depth + 1);
  const double right_coarse = rk4_fraction(v, left, k, fm, f1, dt);
  return advance_interval(v, left, k, fm, f1, dt, right_coarse, depth + 1);
}

inline Trajectory integrate_on_axis(const WaveHistory& history,
                                    std::shared_ptr<const std::vector<double>> times, double x0) {
  const double half_width = history.grid().half_width();
  if (!(std::abs(x0) < half_width)) {
    throw Error(ErrorKind::invalid_argument,
                "initial position " + std::to_string(x0) + " is outside the box");
  }
  const std::size_t count = history.size();
  const double dt = history.dt_out();
  const double exit_radius = half_width - history.grid().spacing();

  Trajectory traj;
  traj.times = std::move(times);
  traj.positions.assign(count, x0);
  traj.momenta.assign(count, 0.0);

  GuidanceField velocity(history);
  traj.momenta[0] = velocity(x0, 0, 0.0);
  double x = x0;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const double coarse = rk4_fraction(velocity, x, k, 0.0, 1.0, dt);
    const double next = advance_interval(velocity, x, k, 0.0, 1.0, dt, coarse, 0);
    if ((velocity.flags & kLeftBox) || !(std::abs(next) < exit_radius)) {
      velocity.flags |= kLeftBox;
      // Hold the last in-box position; momentum is undefined past the exit.
      for (std::size_t r = k + 1; r < count; ++r) {
        traj.positions[r] = x;
        traj.momenta[r] = 0.0;
      }
      break;
    }
    x = next;
    traj.positions[k + 1] = x;
    traj.momenta[k + 1] = velocity(x, k + 1, 0.0);
  }
  traj.flags = velocity.flags;
  return traj;
}

}  // namespace detail

/// RK4 on dx/dt = v(x, t), reported every dt_out; p(t_k) = v(x(t_k), t_k).
inline Trajectory integrate_trajectory(const WaveHistory& history, double x0) {
  return detail::integrate_on_axis(
      history, std::make_shared<const std::vector<double>>(history.times()), x0);
}

struct TrajectoryEnsemble {
  std::shared_ptr<const std::vector<double>> times;
  std::vector<Trajectory> trajectories;
  SamplingDescriptor sampling;

  std::size_t size() const noexcept { return trajectories.size(); }

  std::size_t flagged_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                                  [](const Trajectory& t) { return t.flagged(); }));
  }
};

/// Integrates every starting position; output order matches input order
/// regardless of how the work is split across threads.
inline TrajectoryEnsemble integrate_ensemble(const WaveHistory& history,
                                             std::span<const double> positions,
                                             SamplingDescriptor sampling = {},
                                             unsigned threads = 0) {
  if (positions.empty()) throw Error(ErrorKind::invalid_argument, "no initial positions");
  for (double x0 : positions) {
    if (!(std::abs(x0) < history.grid().half_width())) {
      throw Error(ErrorKind::invalid_argument,
                  "initial position " + std::to_string(x0) + " is outside the box");
    }
  }
  if (sampling.count == 0) sampling.count = positions.size();

  TrajectoryEnsemble ensemble;
  ensemble.times = std::make_shared<const std::vector<double>>(history.times());
  ensemble.sampling = sampling;
  ensemble.trajectories.resize(positions.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, positions.size()));

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < positions.size(); i += stride) {
      ensemble.trajectories[i] = detail::integrate_on_axis(history, ensemble.times, positions[i]);
    }
  };

  if (threads <= 1) {
    work(0, 1);
    return ensemble;
  }

  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w, threads);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return ensemble;
}

/// Long-format CSV: trajectory, t, x, p, flag.
inline void write_ensemble_csv(std::ostream& out, const TrajectoryEnsemble& ensemble,
                               std::size_t stride = 1) {
  out << "trajectory,t,x,p,flag\n";
  char line[160];
  const auto& times = *ensemble.times;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& traj = ensemble.trajectories[i];
    for (std::size_t k = 0; k < times.size(); k += std::max<std::size_t>(stride, 1)) {
      std::snprintf(line, sizeof(line), "%zu,%.6f,%.12g,%.12g,%u\n", i, times[k],
                    traj.positions[k], traj.momenta[k], traj.flags);
      out << line;
    }
  }
}

}  // namespace bohmlab
