#pragma once

// Bohmian averages over trajectory ensembles and the statistics built on
// them: sinusoid and power-law fits, Ehrenfest residuals, envelope slopes,
// and the phase-space-volume / equipartition bookkeeping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bohmlab/bohm_engine.hpp"
#include "bohmlab/core_model.hpp"
#include "bohmlab/error.hpp"

namespace bohmlab {

struct AveragedSeries {
  std::vector<double> times;
  std::vector<double> mean_x;
  std::vector<double> mean_p;
  std::vector<double> mean_x3;
  std::size_t n_effective = 0;

  std::size_t size() const noexcept { return times.size(); }
};

/// Arithmetic means of x, p and x^3 over the unflagged trajectories.
inline AveragedSeries bohmian_average(const TrajectoryEnsemble& ensemble) {
  AveragedSeries out;
  out.times = *ensemble.times;
  const std::size_t count = out.times.size();
  out.mean_x.assign(count, 0.0);
  out.mean_p.assign(count, 0.0);
  out.mean_x3.assign(count, 0.0);
  for (const auto& traj : ensemble.trajectories) {
    if (traj.flagged()) continue;
    ++out.n_effective;
    for (std::size_t k = 0; k < count; ++k) {
      const double x = traj.positions[k];
      out.mean_x[k] += x;
      out.mean_p[k] += traj.momenta[k];
      out.mean_x3[k] += x * x * x;
    }
  }
  if (out.n_effective == 0) {
    throw Error(ErrorKind::all_flagged, "every trajectory in the ensemble is flagged");
  }
  const double inv = 1.0 / static_cast<double>(out.n_effective);
  for (std::size_t k = 0; k < count; ++k) {
    out.mean_x[k] *= inv;
    out.mean_p[k] *= inv;
    out.mean_x3[k] *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fits

/// A cos(omega t + phase) + offset with A >= 0 and phase in (-pi, pi].
struct SinusoidParams {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  double offset = 0.0;

  double operator()(double t) const { return amplitude * std::cos(omega * t + phase) + offset; }
};

/// A(n) = zeta n^exponent.
struct PowerLawParams {
  double zeta = 0.0;
  double exponent = 0.0;
};

struct FitResult {
  std::variant<SinusoidParams, PowerLawParams> model;
  double rms_residual = 0.0;
  std::size_t iterations = 0;
  /// Set when the data carry no information about some parameter (e.g. a
  /// constant series leaves omega unconstrained).
  bool degenerate = false;

  const SinusoidParams& sinusoid() const { return std::get<SinusoidParams>(model); }
  const PowerLawParams& power_law() const { return std::get<PowerLawParams>(model); }
};

class FitConvergenceError : public Error {
 public:
  FitConvergenceError(const std::string& what, FitResult last)
      : Error(ErrorKind::convergence, what), last_(std::move(last)) {}
  const FitResult& last_iterate() const noexcept { return last_; }

 private:
  FitResult last_;
};

namespace detail {

inline double wrap_phase(double phase) {
  double p = std::remainder(phase, 2.0 * std::numbers::pi);
  if (p <= -std::numbers::pi) p += 2.0 * std::numbers::pi;
  return p;
}

inline SinusoidParams canonical(SinusoidParams p) {
  if (p.amplitude < 0.0) {
    p.amplitude = -p.amplitude;
    p.phase += std::numbers::pi;
  }
  p.phase = wrap_phase(p.phase);
  return p;
}

inline double rms(std::span<const double> t, std::span<const double> y, const SinusoidParams& p) {
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = p(t[i]) - y[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(t.size()));
}

/// Amplitude, phase and offset by linear least squares at fixed omega.
inline SinusoidParams linear_subfit(std::span<const double> t, std::span<const double> y,
                                    double omega) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Eigen::Vector3d row(std::cos(omega * t[i]), std::sin(omega * t[i]), 1.0);
    normal += row * row.transpose();
    rhs += row * y[i];
  }
  const Eigen::Vector3d abc = normal.ldlt().solve(rhs);
  // a cos + b sin = A cos(wt + phi) with a = A cos phi, b = -A sin phi.
  SinusoidParams p;
  p.amplitude = std::hypot(abc[0], abc[1]);
  p.phase = std::atan2(-abc[1], abc[0]);
  p.omega = omega;
  p.offset = abc[2];
  return canonical(p);
}

/// Frequency of the largest periodogram peak, scanned on a grid
/// oversampled eight times relative to the record length.
inline double periodogram_peak(std::span<const double> t, std::span<const double> y) {
  const double span_t = t.back() - t.front();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const double dt = span_t / static_cast<double>(t.size() - 1);
  const double resolution = 2.0 * std::numbers::pi / span_t;
  const double omega_max = std::min(std::numbers::pi / dt, 64.0 * resolution);
  const double d_omega = resolution / 8.0;

  double best_omega = resolution;
  double best_power = -1.0;
  for (double w = 0.25 * resolution; w <= omega_max; w += d_omega) {
    std::complex<double> acc{};
    for (std::size_t i = 0; i < t.size(); ++i) {
      acc += (y[i] - mean) * std::polar(1.0, -w * t[i]);
    }
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_omega = w;
    }
  }
  return best_omega;
}

}  // namespace detail

inline constexpr std::size_t kMaxFitIterations = 200;

/// Least-squares fit of A cos(omega t + phase) + offset.
///
/// With `fix_omega` the problem is linear and solved directly. Otherwise
/// omega starts at the periodogram peak, A/phase/offset come from the linear
/// sub-fit at that omega, and all four parameters are refined with
/// Levenberg-Marquardt.
inline FitResult fit_sinusoid(std::span<const double> times, std::span<const double> values,
                              std::optional<double> fix_omega = std::nullopt) {
  if (times.size() != values.size() || times.size() < 4) {
    throw Error(ErrorKind::invalid_argument, "sinusoid fit needs at least 4 matching samples");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(times[i])) {
      throw Error(ErrorKind::invalid_argument, "sinusoid fit input is not finite");
    }
  }

  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double scale = 0.0, spread = 0.0;
  for (double v : values) {
    scale = std::max(scale, std::abs(v));
    spread = std::max(spread, std::abs(v - mean));
  }
  if (spread <= 1e-14 * std::max(1.0, scale)) {
    SinusoidParams flat{0.0, fix_omega.value_or(0.0), 0.0, mean};
    return {flat, detail::rms(times, values, flat), 0, true};
  }

  if (fix_omega) {
    const auto p = detail::linear_subfit(times, values, *fix_omega);
    return {p, detail::rms(times, values, p), 0, false};
  }

  SinusoidParams p = detail::linear_subfit(times, values, detail::periodogram_peak(times, values));
  const std::size_t n = times.size();

  auto cost_of = [&](const SinusoidParams& q) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = q(times[i]) - values[i];
      ss += r * r;
    }
    return ss;
  };

  double cost = cost_of(p);
  double damping = 1e-3;
  for (std::size_t iter = 1; iter <= kMaxFitIterations; ++iter) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = p.omega * times[i] + p.phase;
      const double c = std::cos(theta), s = std::sin(theta);
      const Eigen::Vector4d row(c, -p.amplitude * times[i] * s, -p.amplitude * s, 1.0);
      const double r = p.amplitude * c + p.offset - values[i];
      jtj += row * row.transpose();
      jtr += row * r;
    }

    // Retry with heavier damping until the step lowers the cost.
    while (true) {
      Eigen::Matrix4d lhs = jtj;
      for (int d = 0; d < 4; ++d) lhs(d, d) += damping * std::max(jtj(d, d), 1e-300);
      const Eigen::Vector4d delta = lhs.ldlt().solve(-jtr);
      SinusoidParams trial{p.amplitude + delta[0], p.omega + delta[1], p.phase + delta[2],
                           p.offset + delta[3]};
      const double trial_cost = cost_of(trial);
      if (trial_cost <= cost) {
        const Eigen::Vector4d current(p.amplitude, p.omega, p.phase, p.offset);
        const double rel = delta.norm() / (current.norm() + 1e-300);
        p = trial;
        cost = trial_cost;
        damping = std::max(damping / 3.0, 1e-12);
        if (rel < 1e-10) {
          p = detail::canonical(p);
          return {p, std::sqrt(cost / static_cast<double>(n)), iter, false};
        }
        break;
      }
      damping *= 4.0;
      if (damping > 1e16) {
        // No downhill step left at machine precision: p is the minimum.
        p = detail::canonical(p);
        return {p, std::sqrt(cost / static_cast<double>(n)), iter, false};
      }
    }
  }
  FitResult last{detail::canonical(p), std::sqrt(cost / static_cast<double>(n)),
                 kMaxFitIterations, false};
  throw FitConvergenceError("sinusoid fit did not converge in " +
                                std::to_string(kMaxFitIterations) + " iterations",
                            last);
}

struct AmplitudePoint {
  double n = 0.0;
  double amplitude = 0.0;
};

/// log A = log zeta + b log n by ordinary least squares.
inline FitResult fit_amplitude_power_law(std::span<const AmplitudePoint> points) {
  if (points.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "power-law fit needs at least two points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : points) {
    if (!(pt.amplitude > 0.0) || !(pt.n > 0.0)) {
      throw Error(ErrorKind::invalid_argument, "power-law fit needs positive n and amplitude");
    }
    const double lx = std::log(pt.n), ly = std::log(pt.amplitude);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const auto m = static_cast<double>(points.size());
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "power-law fit needs at least two distinct n");
  }
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  double ss = 0.0;
  for (const auto& pt : points) {
    const double r = intercept + slope * std::log(pt.n) - std::log(pt.amplitude);
    ss += r * r;
  }
  return {PowerLawParams{std::exp(intercept), slope}, std::sqrt(ss / m), 1, false};
}

inline std::string format_fit_report(const FitResult& fit) {
  std::ostringstream out;
  out.precision(12);
  if (const auto* s = std::get_if<SinusoidParams>(&fit.model)) {
    out << "model: sinusoid\n"
        << "amplitude: " << s->amplitude << "\n"
        << "omega: " << s->omega << "\n"
        << "phase: " << s->phase << "\n"
        << "offset: " << s->offset << "\n";
  } else {
    const auto& pl = fit.power_law();
    out << "model: power-law\n"
        << "zeta: " << pl.zeta << "\n"
        << "exponent: " << pl.exponent << "\n";
  }
  out << "rms_residual: " << fit.rms_residual << "\n"
      << "iterations: " << fit.iterations << "\n"
      << "degenerate: " << (fit.degenerate ? "true" : "false") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Ehrenfest residuals

namespace detail {

/// d/dt on a uniform axis: five-point central in the interior, five-point
/// one-sided for the first and last two samples.
inline std::vector<double> time_derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t k = 2; k + 2 < n; ++k) {
    d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
  }
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] +
              3.0 * f[n - 5]) / (12.0 * h);
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) /
             (12.0 * h);
  return d;
}

}  // namespace detail

struct EhrenfestResiduals {
  std::vector<double> times;
  std::vector<double> position;  // d<x>/dt - <p>
  std::vector<double> momentum;  // d<p>/dt + <dV/dx> - F(t)

  /// Sup norms over samples 2..K-3 with t in [t_from, t_to].
  double sup_position(double t_from, double t_to) const { return sup(position, t_from, t_to); }
  double sup_momentum(double t_from, double t_to) const { return sup(momentum, t_from, t_to); }

 private:
  double sup(const std::vector<double>& r, double t_from, double t_to) const {
    double best = 0.0;
    for (std::size_t k = 2; k + 2 < times.size(); ++k) {
      if (times[k] < t_from || times[k] > t_to) continue;
      best = std::max(best, std::abs(r[k]));
    }
    return best;
  }
};

inline EhrenfestResiduals ehrenfest_residuals(const AveragedSeries& series,
                                              const ForceModel& force,
                                              const PotentialModel& potential) {
  if (series.size() < 5) {
    throw Error(ErrorKind::invalid_argument, "Ehrenfest residuals need at least 5 samples");
  }
  const double h = series.times[1] - series.times[0];
  const auto dx = detail::time_derivative(series.mean_x, h);
  const auto dp = detail::time_derivative(series.mean_p, h);
  const double lambda = quartic_coupling(potential);

  EhrenfestResiduals out;
  out.times = series.times;
  out.position.resize(series.size());
  out.momentum.resize(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double mean_gradient = series.mean_x[k] + lambda * series.mean_x3[k];
    out.position[k] = dx[k] - series.mean_p[k];
    out.momentum[k] = dp[k] + mean_gradient - force_value(force, series.times[k]);
  }
  return out;
}

/// <x^3> - <x>^3.
inline std::vector<double> third_moment_gap(const AveragedSeries& series) {
  std::vector<double> gap(series.size());
  for (std::size_t k = 0; k < gap.size(); ++k) {
    gap[k] = series.mean_x3[k] - series.mean_x[k] * series.mean_x[k] * series.mean_x[k];
  }
  return gap;
}

// ---------------------------------------------------------------------------
// Envelopes

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

struct Extremum {
  double time = 0.0;
  double value = 0.0;
};

/// Local extrema inside the window, refined by a parabola through the three
/// samples around each sign change of the slope. Extrema smaller than
/// 1e-3 of the largest one are discarded as noise.
inline std::vector<Extremum> local_extrema(std::span<const double> times,
                                           std::span<const double> values, TimeWindow window) {
  std::vector<Extremum> found;
  for (std::size_t k = 1; k + 1 < values.size(); ++k) {
    if (times[k] < window.begin || times[k] > window.end) continue;
    const double left = values[k] - values[k - 1];
    const double right = values[k + 1] - values[k];
    if (!(left * right < 0.0) && !(left != 0.0 && right == 0.0)) continue;
    const double curvature = values[k + 1] - 2.0 * values[k] + values[k - 1];
    double shift = 0.0, peak = values[k];
    if (curvature != 0.0) {
      shift = 0.5 * (values[k - 1] - values[k + 1]) / curvature;
      peak = values[k] - 0.125 * (values[k + 1] - values[k - 1]) * (values[k + 1] - values[k - 1]) /
                             curvature;
    }
    found.push_back({times[k] + shift * (times[k + 1] - times[k]), peak});
  }
  double largest = 0.0;
  for (const auto& e : found) largest = std::max(largest, std::abs(e.value));
  std::erase_if(found, [&](const Extremum& e) { return std::abs(e.value) < 1e-3 * largest; });
  return found;
}

/// Slope of |extremum| against time by linear least squares.
inline double envelope_slope(std::span<const double> times, std::span<const double> values,
                             TimeWindow window) {
  const auto extrema = local_extrema(times, values, window);
  if (extrema.size() < 3) {
    throw Error(ErrorKind::invalid_argument,
                "envelope needs at least 3 extrema, found " + std::to_string(extrema.size()));
  }
  double st = 0, sa = 0, stt = 0, sta = 0;
  for (const auto& e : extrema) {
    const double a = std::abs(e.value);
    st += e.time;
    sa += a;
    stt += e.time * e.time;
    sta += e.time * a;
  }
  const auto m = static_cast<double>(extrema.size());
  return (m * sta - st * sa) / (m * stt - st * st);
}

/// Maximum of `values` in consecutive windows of length `period` starting at
/// times.front(); incomplete trailing windows are dropped.
inline std::vector<double> periodic_maxima(std::span<const double> times,
                                           std::span<const double> values, double period) {
  std::vector<double> peaks;
  if (times.empty()) return peaks;
  const double t0 = times.front();
  std::size_t window = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto w = static_cast<std::size_t>(std::floor((times[k] - t0) / period));
    if (w != window) {
      peaks.push_back(best);
      best = -std::numeric_limits<double>::infinity();
      window = w;
    }
    best = std::max(best, values[k]);
  }
  return peaks;
}

// ---------------------------------------------------------------------------
// Phase-space volume and equipartition

inline double phase_space_volume(double amplitude) {
  if (!(amplitude >= 0.0)) throw Error(ErrorKind::invalid_argument, "amplitude must be >= 0");
  return std::numbers::pi * amplitude * amplitude;
}

struct ThermoRow {
  double beta = 0.0;
  double u_continuum = 0.0;
  double u_discrete = 0.0;

  double ratio() const { return u_discrete / u_continuum; }
};

/// Internal energy from the classical energy ladder E_n = zeta^2 n / 2 (k_B = 1):
/// the continuum partition function gives U = 1/beta, the discrete geometric
/// sum gives U = (zeta^2/2) / (exp(beta zeta^2/2) - 1).
inline std::vector<ThermoRow> thermo_check(double zeta, std::span<const double> betas) {
  if (!(zeta > 0.0)) throw Error(ErrorKind::invalid_argument, "zeta must be positive");
  std::vector<ThermoRow> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    if (!(beta > 0.0)) throw Error(ErrorKind::invalid_argument, "beta must be positive");
    const double quantum = 0.5 * zeta * zeta;
    rows.push_back({beta, 1.0 / beta, quantum / std::expm1(beta * quantum)});
  }
  return rows;
}

/// (max - min) / mean.
inline double relative_spread(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return (*hi - *lo) / std::abs(mean);
}

}  // namespace bohmlab
