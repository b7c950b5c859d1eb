#pragma once

// Classical reference solutions for the driven oscillator: free harmonic
// motion, the sine-kernel convolution response to F(t), and RK4 for the
// driven Duffing equation. Nothing here touches the quantum pipeline.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bohmlab/core_model.hpp"
#include "bohmlab/error.hpp"

namespace bohmlab {

struct ClassicalState {
  double x = 0.0;
  double p = 0.0;
  double t = 0.0;
};

inline double ho_solution(double amplitude, double phase, double t) {
  return amplitude * std::cos(t + phase);
}

/// int_0^t F(t - tau) sin(tau) dtau by adaptive Gauss-Kronrod quadrature,
/// split at the pulse centre for impulsive forces.
inline double convolution_quadrature(const ForceModel& force, double t) {
  if (t < 0.0) throw Error(ErrorKind::invalid_argument, "convolution needs t >= 0");
  if (t == 0.0) return 0.0;
  auto integrand = [&](double tau) { return force_value(force, t - tau) * std::sin(tau); };

  std::vector<double> breaks{0.0, t};
  if (const auto* g = std::get_if<GaussianImpulse>(&force)) {
    // In tau the pulse sits at t - t_mu.
    for (double k : {-6.0, 0.0, 6.0}) {
      const double b = t - g->center() + k * g->width();
      if (b > 0.0 && b < t) breaks.push_back(b);
    }
    std::sort(breaks.begin(), breaks.end());
  }

  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double error = 0.0;
    total += Rule::integrate(integrand, breaks[i], breaks[i + 1], 20, 1e-13, &error);
  }
  return total;
}

/// Response of the unit oscillator at rest to F(t). Closed forms for the
/// constant and sinusoidal drives, quadrature otherwise.
inline double convolution_response(const ForceModel& force, double t) {
  if (t < 0.0) throw Error(ErrorKind::invalid_argument, "convolution needs t >= 0");
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ZeroForce>) {
          return 0.0;
        } else if constexpr (std::is_same_v<F, ConstantForce>) {
          return f.value * (1.0 - std::cos(t));
        } else if constexpr (std::is_same_v<F, SinusoidalForce>) {
          const double w = f.frequency();
          if (w == 1.0) return 0.5 * f.amplitude() * t * std::sin(t);
          return f.amplitude() * (std::cos(w * t) - std::cos(t)) / (1.0 - w * w);
        } else {
          return convolution_quadrature(force, t);
        }
      },
      force);
}

/// Time derivative of convolution_response: int_0^t F(t - tau) cos(tau) dtau.
inline double convolution_velocity(const ForceModel& force, double t) {
  if (t < 0.0) throw Error(ErrorKind::invalid_argument, "convolution needs t >= 0");
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ZeroForce>) {
          return 0.0;
        } else if constexpr (std::is_same_v<F, ConstantForce>) {
          return f.value * std::sin(t);
        } else if constexpr (std::is_same_v<F, SinusoidalForce>) {
          const double w = f.frequency();
          if (w == 1.0) return 0.5 * f.amplitude() * (std::sin(t) + t * std::cos(t));
          return f.amplitude() * (std::sin(t) - w * std::sin(w * t)) / (1.0 - w * w);
        } else {
          if (t == 0.0) return 0.0;
          auto integrand = [&](double tau) { return force_value(force, t - tau) * std::cos(tau); };
          std::vector<double> breaks{0.0, t};
          for (double k : {-6.0, 0.0, 6.0}) {
            const double b = t - f.center() + k * f.width();
            if (b > 0.0 && b < t) breaks.push_back(b);
          }
          std::sort(breaks.begin(), breaks.end());
          using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
          double total = 0.0;
          for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            double error = 0.0;
            total += Rule::integrate(integrand, breaks[i], breaks[i + 1], 20, 1e-13, &error);
          }
          return total;
        }
      },
      force);
}

/// x0 cos t + p0 sin t + convolution response: the harmonic comparator for
/// Bohmian averages seeded with <x(0)> and <p(0)>.
inline double classical_comparator(const ForceModel& force, double x0, double p0, double t) {
  return x0 * std::cos(t) + p0 * std::sin(t) + convolution_response(force, t);
}

inline ClassicalState classical_comparator_state(const ForceModel& force, double x0, double p0,
                                                 double t) {
  return {classical_comparator(force, x0, p0, t),
          -x0 * std::sin(t) + p0 * std::cos(t) + convolution_velocity(force, t), t};
}

/// RK4 for x' = p, p' = -x - lambda x^3 + F(t), sampled every dt on [0, t_max].
inline std::vector<ClassicalState> duffing_solve(double lambda, const ForceModel& force, double x0,
                                                 double p0, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "duffing_solve needs dt > 0 and t_max > 0");
  }
  const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  std::vector<ClassicalState> out;
  out.reserve(steps + 1);
  out.push_back({x0, p0, 0.0});

  auto accel = [&](double x, double t) { return -x - lambda * x * x * x + force_value(force, t); };
  double x = x0, p = p0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double kx1 = p, kp1 = accel(x, t);
    const double kx2 = p + 0.5 * dt * kp1, kp2 = accel(x + 0.5 * dt * kx1, t + 0.5 * dt);
    const double kx3 = p + 0.5 * dt * kp2, kp3 = accel(x + 0.5 * dt * kx2, t + 0.5 * dt);
    const double kx4 = p + dt * kp3, kp4 = accel(x + dt * kx3, t + dt);
    x += dt * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4) / 6.0;
    p += dt * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4) / 6.0;
    const double t_next = static_cast<double>(k + 1) * dt;
    if (!std::isfinite(x) || !std::isfinite(p)) {
      throw Error(ErrorKind::stability,
                  "classical Duffing solution diverged at t = " + std::to_string(t_next));
    }
    out.push_back({x, p, t_next});
  }
  return out;
}

}  // namespace bohmlab
