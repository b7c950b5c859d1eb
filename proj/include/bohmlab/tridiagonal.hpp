#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bohmlab/error.hpp"

namespace bohmlab::detail {

/// Thomas algorithm for a (possibly non-symmetric) tridiagonal system.
/// `lower[i]` couples row i to unknown i-1 (lower[0] unused), `upper[i]`
/// couples row i to i+1 (upper[n-1] unused). The solution overwrites `rhs`.
/// `scratch` must hold n elements.
template <typename T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper,
                       std::span<T> rhs, std::span<T> scratch) {
  const std::size_t n = diag.size();
  if (n == 0) return;
  constexpr double kPivotFloor = 1e-300;

  T pivot = diag[0];
  if (std::abs(pivot) < kPivotFloor) {
    throw Error(ErrorKind::singular_system, "zero pivot in tridiagonal solve");
  }
  scratch[0] = upper[0] / pivot;
  rhs[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i] * scratch[i - 1];
    if (std::abs(pivot) < kPivotFloor) {
      throw Error(ErrorKind::singular_system, "zero pivot in tridiagonal solve");
    }
    scratch[i] = (i + 1 < n) ? upper[i] / pivot : T{};
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

/// Solves the constant-coefficient symmetric system tridiag(off, diag, off).
inline void solve_toeplitz_tridiagonal(double off, double diag, std::span<double> rhs) {
  const std::size_t n = rhs.size();
  std::vector<double> lower(n, off), main(n, diag), upper(n, off), scratch(n);
  solve_tridiagonal<double>(lower, main, upper, rhs, scratch);
}

}  // namespace bohmlab::detail
