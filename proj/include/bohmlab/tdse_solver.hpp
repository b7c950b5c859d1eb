#pragma once

// Time-dependent Schrodinger solver for H(t) = p^2/2 + V(x) - F(t) x on a
// Dirichlet box. The real and imaginary parts of Psi are stepped together as
// one complex vector with the implicit trapezoidal (Crank-Nicolson) rule.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "bohmlab/core_model.hpp"
#include "bohmlab/error.hpp"
#include "bohmlab/tridiagonal.hpp"

namespace bohmlab {

/// Discrete second derivative used in the kinetic term.
///
/// `compact_fourth_order` is the Numerov form B^{-1} delta^2 / dx^2 with
/// B = 1 + delta^2 / 12. It keeps the system tridiagonal and H symmetric.
enum class LaplacianStencil { second_order, compact_fourth_order };

struct SolverConfig {
  double dt_pde = 0.001;
  double dt_out = 0.01;
  double t_max = 20.0;
  PotentialModel potential = HarmonicPotential{};
  ForceModel force = ZeroForce{};
  LaplacianStencil stencil = LaplacianStencil::compact_fourth_order;

  std::size_t substeps() const { return static_cast<std::size_t>(std::llround(dt_out / dt_pde)); }

  std::size_t num_snapshots() const {
    return static_cast<std::size_t>(std::floor(t_max / dt_out + 1e-9)) + 1;
  }

  void validate() const {
    if (!(dt_pde > 0.0) || !(t_max > 0.0) || !(dt_out > 0.0)) {
      throw Error(ErrorKind::invalid_argument, "dt_pde, dt_out and t_max must be positive");
    }
    const double ratio = dt_out / dt_pde;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
      throw Error(ErrorKind::invalid_argument, "dt_out must be an integer multiple of dt_pde");
    }
  }
};

/// Trapezoidal quadrature of |Psi|^2.
inline double norm(const ComplexField& field) {
  const std::size_t m = field.grid().size();
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) sum += field.density(j);
  sum -= 0.5 * (field.density(0) + field.density(m - 1));
  return sum * field.grid().spacing();
}

/// <x> by trapezoidal quadrature.
inline double position_expectation(const ComplexField& field) {
  const auto& grid = field.grid();
  double sum = 0.0;
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) sum += grid.x(j) * field.density(j);
  return sum * grid.spacing();
}

namespace detail {

struct StencilWeights {
  double off;
  double diag;
};

constexpr StencilWeights stencil_weights(LaplacianStencil s) noexcept {
  if (s == LaplacianStencil::compact_fourth_order) return {1.0 / 12.0, 10.0 / 12.0};
  return {0.0, 1.0};
}

}  // namespace detail

/// Crank-Nicolson propagator with preallocated workspace for one grid.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const SpatialGrid& grid, const SolverConfig& config)
      : grid_(grid), config_(config), interior_(grid.size() - 2) {
    static_potential_.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      static_potential_[j] = potential_value(config.potential, grid.x(j));
    }
    lower_.resize(interior_);
    diag_.resize(interior_);
    upper_.resize(interior_);
    rhs_.resize(interior_);
    scratch_.resize(interior_);
    potential_.resize(grid.size());
  }

  /// Advances psi (full grid, boundary entries zero) from t to t + dt with the
  /// Hamiltonian frozen at the midpoint time.
  void advance(std::vector<std::complex<double>>& psi, double t, double dt) {
    using namespace std::complex_literals;
    const double dx = grid_.spacing();
    const double force = force_value(config_.force, t + 0.5 * dt);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      potential_[j] = static_potential_[j] - force * grid_.x(j);
    }

    const auto [b_off, b_diag] = detail::stencil_weights(config_.stencil);
    const double tau = 0.5 * dt;
    const double kin_off = -0.5 / (dx * dx);
    const double kin_diag = 1.0 / (dx * dx);

    for (std::size_t i = 0; i < interior_; ++i) {
      const std::size_t j = i + 1;
      const std::complex<double> h_lo = kin_off + b_off * potential_[j - 1];
      const std::complex<double> h_di = kin_diag + b_diag * potential_[j];
      const std::complex<double> h_up = kin_off + b_off * potential_[j + 1];
      lower_[i] = b_off + 1i * tau * h_lo;
      diag_[i] = b_diag + 1i * tau * h_di;
      upper_[i] = b_off + 1i * tau * h_up;
      rhs_[i] = (b_off - 1i * tau * h_lo) * psi[j - 1] + (b_diag - 1i * tau * h_di) * psi[j] +
                (b_off - 1i * tau * h_up) * psi[j + 1];
    }
    detail::solve_tridiagonal<std::complex<double>>(lower_, diag_, upper_, rhs_, scratch_);
    for (std::size_t i = 0; i < interior_; ++i) psi[i + 1] = rhs_[i];
    psi.front() = 0.0;
    psi.back() = 0.0;
  }

 private:
  SpatialGrid grid_;
  SolverConfig config_;
  std::size_t interior_;
  std::vector<double> static_potential_;
  std::vector<double> potential_;
  std::vector<std::complex<double>> lower_, diag_, upper_, rhs_, scratch_;
};

namespace detail {

inline std::vector<std::complex<double>> to_complex(const ComplexField& field) {
  std::vector<std::complex<double>> psi(field.grid().size());
  for (std::size_t j = 0; j < psi.size(); ++j) psi[j] = {field.real()[j], field.imag()[j]};
  return psi;
}

inline ComplexField from_complex(const SpatialGrid& grid,
                                 const std::vector<std::complex<double>>& psi) {
  std::vector<double> re(psi.size()), im(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    re[j] = psi[j].real();
    im[j] = psi[j].imag();
  }
  re.front() = re.back() = im.front() = im.back() = 0.0;
  return {grid, std::move(re), std::move(im)};
}

}  // namespace detail

/// One Crank-Nicolson step of length dt starting at time t.
inline ComplexField step(const ComplexField& field, double t, double dt,
                         const SolverConfig& config) {
  if (!(dt > 0.0)) throw Error(ErrorKind::invalid_argument, "step length must be positive");
  CrankNicolsonStepper stepper(field.grid(), config);
  auto psi = detail::to_complex(field);
  stepper.advance(psi, t, dt);
  return detail::from_complex(field.grid(), psi);
}

/// <Psi|H(t)|Psi> with the same discrete Hamiltonian the stepper uses.
inline double energy(const ComplexField& field, double t, const SolverConfig& config) {
  const auto& grid = field.grid();
  const std::size_t m = grid.size();
  const double dx = grid.spacing();
  const double force = force_value(config.force, t);
  const auto [b_off, b_diag] = detail::stencil_weights(config.stencil);

  auto kinetic = [&](std::span<const double> u) {
    std::vector<double> lap(m - 2);
    for (std::size_t j = 1; j + 1 < m; ++j) lap[j - 1] = (u[j - 1] - 2.0 * u[j] + u[j + 1]) / (dx * dx);
    if (b_off != 0.0) detail::solve_toeplitz_tridiagonal(b_off, b_diag, lap);
    for (auto& v : lap) v *= -0.5;
    return lap;
  };

  const auto k_re = kinetic(field.real());
  const auto k_im = kinetic(field.imag());
  double sum = 0.0;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const double v = potential_value(config.potential, grid.x(j)) - force * grid.x(j);
    sum += field.real()[j] * (k_re[j - 1] + v * field.real()[j]) +
           field.imag()[j] * (k_im[j - 1] + v * field.imag()[j]);
  }
  return sum * dx;
}

/// Snapshots of Psi at t_k = k dt_out, k = 0..K-1. Immutable once built.
class WaveHistory {
 public:
  WaveHistory(SpatialGrid grid, double dt_out, std::vector<ComplexField> snapshots,
              double max_norm_drift = 0.0)
      : grid_(grid), dt_out_(dt_out), snapshots_(std::move(snapshots)),
        max_norm_drift_(max_norm_drift) {
    if (snapshots_.empty()) throw Error(ErrorKind::invalid_argument, "history has no snapshots");
    for (const auto& s : snapshots_) {
      if (!(s.grid() == grid_)) {
        throw Error(ErrorKind::invalid_argument, "snapshot grid does not match history grid");
      }
    }
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  double dt_out() const noexcept { return dt_out_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_out_; }
  double t_max() const noexcept { return time(size() - 1); }
  const ComplexField& snapshot(std::size_t k) const { return snapshots_.at(k); }
  const std::vector<ComplexField>& snapshots() const noexcept { return snapshots_; }
  double max_norm_drift() const noexcept { return max_norm_drift_; }

  std::vector<double> times() const {
    std::vector<double> ts(size());
    for (std::size_t k = 0; k < ts.size(); ++k) ts[k] = time(k);
    return ts;
  }

 private:
  SpatialGrid grid_;
  double dt_out_;
  std::vector<ComplexField> snapshots_;
  double max_norm_drift_;
};

inline constexpr double kNormDriftTolerance = 1e-6;
inline constexpr double kNormDriftAbort = 1e-5;

inline WaveHistory propagate(const ComplexField& initial, const SolverConfig& config) {
  config.validate();
  const double n0 = norm(initial);
  if (std::abs(n0 - 1.0) > 1e-8) {
    throw Error(ErrorKind::not_normalized,
                "initial state has norm " + std::to_string(n0) + ", expected 1");
  }

  const auto& grid = initial.grid();
  const std::size_t substeps = config.substeps();
  const std::size_t count = config.num_snapshots();

  CrankNicolsonStepper stepper(grid, config);
  auto psi = detail::to_complex(initial);
  std::vector<ComplexField> snapshots;
  snapshots.reserve(count);
  snapshots.push_back(initial);

  double max_drift = std::abs(n0 - 1.0);
  for (std::size_t k = 1; k < count; ++k) {
    for (std::size_t s = 0; s < substeps; ++s) {
      const auto index = static_cast<double>((k - 1) * substeps + s);
      const double t = index * config.dt_pde;
      stepper.advance(psi, t, config.dt_pde);
    }
    snapshots.push_back(detail::from_complex(grid, psi));
    const double drift = std::abs(norm(snapshots.back()) - 1.0);
    max_drift = std::max(max_drift, drift);
    if (!(drift <= kNormDriftAbort)) {
      throw Error(ErrorKind::stability, "norm drift " + std::to_string(drift) + " at t = " +
                                            std::to_string(static_cast<double>(k) * config.dt_out));
    }
  }
  return {grid, config.dt_out, std::move(snapshots), max_drift};
}

// ---------------------------------------------------------------------------
// Binary history cache.
//
// Layout (native little-endian):
//   char[8]  magic "BHWHIST1"
//   f64      L
//   u64      M
//   f64      dt_out
//   u64      K
//   K x { f64[M] phi_r, f64[M] phi_i }

inline constexpr char kHistoryMagic[8] = {'B', 'H', 'W', 'H', 'I', 'S', 'T', '1'};

inline void save_history(const WaveHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  auto put = [&](const auto& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
  };
  out.write(kHistoryMagic, sizeof(kHistoryMagic));
  put(history.grid().half_width());
  put(static_cast<std::uint64_t>(history.grid().size()));
  put(history.dt_out());
  put(static_cast<std::uint64_t>(history.size()));
  for (const auto& s : history.snapshots()) {
    out.write(reinterpret_cast<const char*>(s.real().data()),
              static_cast<std::streamsize>(s.real().size_bytes()));
    out.write(reinterpret_cast<const char*>(s.imag().data()),
              static_cast<std::streamsize>(s.imag().size_bytes()));
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

inline WaveHistory load_history(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kHistoryMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::io, path.string() + " is not a wave history file");
  }
  double half_width = 0.0, dt_out = 0.0;
  std::uint64_t m = 0, k = 0;
  auto get = [&](auto& value) { in.read(reinterpret_cast<char*>(&value), sizeof(value)); };
  get(half_width);
  get(m);
  get(dt_out);
  get(k);
  if (!in || k == 0) throw Error(ErrorKind::io, "truncated header in " + path.string());

  const auto grid = build_grid(half_width, m);
  std::vector<ComplexField> snapshots;
  snapshots.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::vector<double> re(m), im(m);
    in.read(reinterpret_cast<char*>(re.data()), static_cast<std::streamsize>(m * sizeof(double)));
    in.read(reinterpret_cast<char*>(im.data()), static_cast<std::streamsize>(m * sizeof(double)));
    if (!in) throw Error(ErrorKind::io, "truncated payload in " + path.string());
    snapshots.emplace_back(grid, std::move(re), std::move(im));
  }
  double drift = 0.0;
  for (const auto& s : snapshots) drift = std::max(drift, std::abs(norm(s) - 1.0));
  return {grid, dt_out, std::move(snapshots), drift};
}

}  // namespace bohmlab
