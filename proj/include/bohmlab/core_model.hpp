#pragma once

// Dimensionless conventions, spatial grids, oscillator eigenstates and the
// force/potential models shared by the rest of the library.
//
// Units: time in 1/omega0, length in sqrt(hbar / (m omega0)), force in
// sqrt(hbar m omega0^3). With these choices hbar = m = omega0 = 1.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bohmlab/error.hpp"

namespace bohmlab {

/// The nondimensionalization in force everywhere. Only the unit constants
/// are representable.
class Convention {
 public:
  constexpr Convention() = default;

  Convention(double hbar, double mass, double omega0) {
    if (hbar != 1.0 || mass != 1.0 || omega0 != 1.0) {
      throw Error(ErrorKind::invalid_model,
                  "dimensionless convention requires hbar = mass = omega0 = 1");
    }
  }

  constexpr double hbar() const noexcept { return 1.0; }
  constexpr double mass() const noexcept { return 1.0; }
  constexpr double omega0() const noexcept { return 1.0; }
};

/// Uniform grid on [-L, L] with an odd number of points, so x = 0 is a node.
class SpatialGrid {
 public:
  double half_width() const noexcept { return half_width_; }
  std::size_t size() const noexcept { return size_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t center() const noexcept { return (size_ - 1) / 2; }

  /// x_j = -L + j dx. Computed as (j - center) dx so that the grid is
  /// exactly mirror symmetric; the endpoints are pinned to +-L.
  double x(std::size_t j) const noexcept {
    if (j == 0) return -half_width_;
    if (j + 1 == size_) return half_width_;
    const auto offset = static_cast<double>(static_cast<std::ptrdiff_t>(j) -
                                            static_cast<std::ptrdiff_t>(center()));
    return offset * spacing_;
  }

  std::vector<double> points() const {
    std::vector<double> xs(size_);
    for (std::size_t j = 0; j < size_; ++j) xs[j] = x(j);
    return xs;
  }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

  friend SpatialGrid build_grid(double half_width, std::size_t num_points);

 private:
  SpatialGrid(double half_width, std::size_t num_points)
      : half_width_(half_width),
        size_(num_points),
        spacing_(2.0 * half_width / static_cast<double>(num_points - 1)) {}

  double half_width_;
  std::size_t size_;
  double spacing_;
};

inline SpatialGrid build_grid(double half_width, std::size_t num_points) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorKind::invalid_grid, "half width L must be positive and finite");
  }
  if (num_points < 3 || num_points % 2 == 0) {
    throw Error(ErrorKind::invalid_grid,
                "number of grid points must be odd and at least 3, got " +
                    std::to_string(num_points));
  }
  return SpatialGrid(half_width, num_points);
}

/// Default production grid: L = 10, dx = 0.01.
inline SpatialGrid default_grid() { return build_grid(10.0, 2001); }

/// Wavefunction Psi = phi_r + i phi_i sampled on a grid, zero at both ends.
class ComplexField {
 public:
  ComplexField(SpatialGrid grid, std::vector<double> phi_r, std::vector<double> phi_i)
      : grid_(grid), phi_r_(std::move(phi_r)), phi_i_(std::move(phi_i)) {
    const std::size_t m = grid_.size();
    if (phi_r_.size() != m || phi_i_.size() != m) {
      throw Error(ErrorKind::invalid_argument, "field arrays must match the grid size");
    }
    if (phi_r_.front() != 0.0 || phi_r_.back() != 0.0 || phi_i_.front() != 0.0 ||
        phi_i_.back() != 0.0) {
      throw Error(ErrorKind::invalid_argument, "field violates the Dirichlet boundary");
    }
  }

  /// Zero field on the grid.
  explicit ComplexField(SpatialGrid grid)
      : grid_(grid), phi_r_(grid.size(), 0.0), phi_i_(grid.size(), 0.0) {}

  const SpatialGrid& grid() const noexcept { return grid_; }
  std::span<const double> real() const noexcept { return phi_r_; }
  std::span<const double> imag() const noexcept { return phi_i_; }

  double density(std::size_t j) const noexcept {
    return phi_r_[j] * phi_r_[j] + phi_i_[j] * phi_i_[j];
  }
  /// R = |Psi|.
  double amplitude(std::size_t j) const noexcept { return std::sqrt(density(j)); }
  /// S = atan2(phi_i, phi_r); defined up to multiples of 2 pi.
  double phase(std::size_t j) const noexcept { return std::atan2(phi_i_[j], phi_r_[j]); }

  ComplexField scaled(double factor) const {
    auto re = phi_r_;
    auto im = phi_i_;
    for (auto& v : re) v *= factor;
    for (auto& v : im) v *= factor;
    return {grid_, std::move(re), std::move(im)};
  }

 private:
  SpatialGrid grid_;
  std::vector<double> phi_r_;
  std::vector<double> phi_i_;
};

// ---------------------------------------------------------------------------
// Eigenstates

namespace detail {

/// Evaluates psi_0..psi_n at x with the normalized two-term recurrence and
/// hands each value to `sink(alpha, value)`.
template <typename Sink>
void eigenstate_ladder(std::size_t n, double x, Sink&& sink) {
  double prev = 0.0;
  double curr = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  sink(std::size_t{0}, curr);
  for (std::size_t a = 0; a < n; ++a) {
    const double ad = static_cast<double>(a);
    const double next = x * std::sqrt(2.0 / (ad + 1.0)) * curr - std::sqrt(ad / (ad + 1.0)) * prev;
    prev = curr;
    curr = next;
    sink(a + 1, curr);
  }
}

}  // namespace detail

/// Unclamped value of the oscillator eigenfunction psi_alpha(x).
inline double eigenstate_value(std::size_t alpha, double x) {
  double out = 0.0;
  detail::eigenstate_ladder(alpha, x, [&](std::size_t a, double v) {
    if (a == alpha) out = v;
  });
  return out;
}

/// psi_alpha sampled on the grid with the boundary values clamped to 0.
inline std::vector<double> eigenstate(std::size_t alpha, const SpatialGrid& grid) {
  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) values[j] = eigenstate_value(alpha, grid.x(j));
  return values;
}

/// Largest boundary amplitude tolerated before the box is declared too small.
inline constexpr double kBoundaryTolerance = 1e-10;

/// Equal-weight superposition (n + 1)^(-1/2) sum_{alpha <= n} psi_alpha,
/// real at t = 0.
inline ComplexField initial_superposition(std::size_t n, const SpatialGrid& grid) {
  const double weight = 1.0 / std::sqrt(static_cast<double>(n + 1));
  auto superpose = [&](double x) {
    double sum = 0.0;
    detail::eigenstate_ladder(n, x, [&](std::size_t, double v) { sum += v; });
    return weight * sum;
  };

  const double left = superpose(grid.x(0));
  const double right = superpose(grid.x(grid.size() - 1));
  if (std::abs(left) > kBoundaryTolerance || std::abs(right) > kBoundaryTolerance) {
    throw Error(ErrorKind::grid_too_small,
                "initial state with n = " + std::to_string(n) + " has amplitude " +
                    std::to_string(std::max(std::abs(left), std::abs(right))) +
                    " at the box edge L = " + std::to_string(grid.half_width()));
  }

  std::vector<double> re(grid.size(), 0.0);
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) re[j] = superpose(grid.x(j));
  return {grid, std::move(re), std::vector<double>(grid.size(), 0.0)};
}

// ---------------------------------------------------------------------------
// Forces

struct ZeroForce {
  friend bool operator==(const ZeroForce&, const ZeroForce&) = default;
};

struct ConstantForce {
  double value = 0.0;
  friend bool operator==(const ConstantForce&, const ConstantForce&) = default;
};

/// Unit-area Gaussian pulse centred at `center` with width `width`.
class GaussianImpulse {
 public:
  GaussianImpulse(double center, double width) : center_(center), width_(width) {
    if (!(width > 0.0)) throw Error(ErrorKind::invalid_model, "impulse width sigma must be > 0");
  }
  double center() const noexcept { return center_; }
  double width() const noexcept { return width_; }
  friend bool operator==(const GaussianImpulse&, const GaussianImpulse&) = default;

 private:
  double center_;
  double width_;
};

/// F0 cos(Omega t).
class SinusoidalForce {
 public:
  SinusoidalForce(double amplitude, double frequency)
      : amplitude_(amplitude), frequency_(frequency) {
    if (!(frequency > 0.0)) {
      throw Error(ErrorKind::invalid_model, "driving frequency Omega must be > 0");
    }
  }
  double amplitude() const noexcept { return amplitude_; }
  double frequency() const noexcept { return frequency_; }
  friend bool operator==(const SinusoidalForce&, const SinusoidalForce&) = default;

 private:
  double amplitude_;
  double frequency_;
};

using ForceModel = std::variant<ZeroForce, ConstantForce, GaussianImpulse, SinusoidalForce>;

inline double force_value(const ForceModel& force, double t) {
  return std::visit(
      [t](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ZeroForce>) {
          return 0.0;
        } else if constexpr (std::is_same_v<F, ConstantForce>) {
          return f.value;
        } else if constexpr (std::is_same_v<F, GaussianImpulse>) {
          const double s = f.width();
          const double u = (t - f.center()) / s;
          return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi * s * s);
        } else {
          return f.amplitude() * std::cos(f.frequency() * t);
        }
      },
      force);
}

inline std::string describe(const ForceModel& force) {
  return std::visit(
      [](const auto& f) -> std::string {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ZeroForce>) {
          return "zero";
        } else if constexpr (std::is_same_v<F, ConstantForce>) {
          return "constant(C=" + std::to_string(f.value) + ")";
        } else if constexpr (std::is_same_v<F, GaussianImpulse>) {
          return "gaussian(t_mu=" + std::to_string(f.center()) +
                 ", sigma=" + std::to_string(f.width()) + ")";
        } else {
          return "sinusoidal(F0=" + std::to_string(f.amplitude()) +
                 ", Omega=" + std::to_string(f.frequency()) + ")";
        }
      },
      force);
}

// ---------------------------------------------------------------------------
// Potentials

struct HarmonicPotential {
  friend bool operator==(const HarmonicPotential&, const HarmonicPotential&) = default;
};

/// x^2/2 + (lambda/4) x^4.
struct DuffingPotential {
  double lambda = 0.0;
  friend bool operator==(const DuffingPotential&, const DuffingPotential&) = default;
};

using PotentialModel = std::variant<HarmonicPotential, DuffingPotential>;

inline double quartic_coupling(const PotentialModel& potential) noexcept {
  if (const auto* d = std::get_if<DuffingPotential>(&potential)) return d->lambda;
  return 0.0;
}

inline double potential_value(const PotentialModel& potential, double x) noexcept {
  const double x2 = x * x;
  return 0.5 * x2 + 0.25 * quartic_coupling(potential) * x2 * x2;
}

/// dV/dx, the conservative part of the restoring force (with a minus sign).
inline double potential_gradient(const PotentialModel& potential, double x) noexcept {
  return x + quartic_coupling(potential) * x * x * x;
}

inline std::string describe(const PotentialModel& potential) {
  if (const auto* d = std::get_if<DuffingPotential>(&potential)) {
    return "duffing(lambda=" + std::to_string(d->lambda) + ")";
  }
  return "harmonic";
}

}  // namespace bohmlab
