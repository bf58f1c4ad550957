#pragma once

#include <Eigen/Core>
#include <string_view>

namespace kman {

// Snapshots are columns throughout, so everything is column-major (Eigen's default).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws NonFinite if any entry is NaN/Inf, ShapeMismatch if the matrix is empty.
void require_finite(const Matrix& a, std::string_view what);
void require_finite(const Vector& v, std::string_view what);

struct ThinSvd {
  Matrix u;                // N x k, orthonormal columns
  Vector singular_values;  // k, nonincreasing
  Matrix vt;               // k x M, orthonormal rows
};

/// Deterministic thin SVD, k = min(N, M). Each left singular vector is sign-normalized
/// so its largest-magnitude entry is nonnegative (the matching row of vt flips with it).
ThinSvd thin_svd(const Matrix& a);

struct JitterPolicy {
  enum class Mode { fail, jitter };
  Mode mode = Mode::fail;
  double magnitude = 0.0;

  static JitterPolicy fail() { return {Mode::fail, 0.0}; }
  static JitterPolicy jitter(double magnitude) { return {Mode::jitter, magnitude}; }
};

struct SpdSolution {
  Matrix x;
  double jitter = 0.0;  // diagonal shift actually applied, 0 if none was needed
};

/// Solves a X = b for symmetric positive (semi)definite a using a Cholesky factorization.
/// On breakdown with a jitter policy, retries with a + delta I, delta = magnitude * trace(a) / n,
/// escalating delta by 10x at most three times before giving up with SingularSystem.
SpdSolution solve_spd_detailed(const Matrix& a, const Matrix& b, JitterPolicy policy);

inline Matrix solve_spd(const Matrix& a, const Matrix& b, JitterPolicy policy) {
  return solve_spd_detailed(a, b, policy).x;
}

}  // namespace kman
