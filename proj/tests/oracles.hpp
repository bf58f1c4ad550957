#pragma once

// Test-only reference routines. They use plain loops on purpose so they share no code
// path with the Eigen-backed implementation they check.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kman/numerics.hpp"

namespace oracle {

using kman::Matrix;
using kman::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = dist(rng);
  return a;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0,
                            double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi).col(0);
}

inline Eigen::Index random_int(std::mt19937_64& rng, Eigen::Index lo, Eigen::Index hi) {
  return std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

/// One-sided (Hestenes) Jacobi singular values, sorted descending. Works on the columns of
/// `a` directly, so small singular values keep their accuracy (no squaring).
inline std::vector<double> jacobi_singular_values(Matrix a) {
  if (a.rows() < a.cols()) a.transposeInPlace();
  const Eigen::Index n = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (Eigen::Index k = 0; k < a.rows(); ++k) {
          alpha += a(k, p) * a(k, p);
          beta += a(k, q) * a(k, q);
          gamma += a(k, p) * a(k, q);
        }
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < a.rows(); ++k) {
          const double x = a(k, p), y = a(k, q);
          a(k, p) = c * x - s * y;
          a(k, q) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.rows(); ++k) s += a(k, j) * a(k, j);
    sv[static_cast<std::size_t>(j)] = std::sqrt(s);
  }
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

/// Gaussian elimination with partial pivoting.
inline Matrix gauss_solve(Matrix a, Matrix b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw std::runtime_error("singular");
    for (Eigen::Index j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
    for (Eigen::Index j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  Matrix x(n, b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = b(i, c);
      for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j, c);
      x(i, c) = s / a(i, i);
    }
  }
  return x;
}

/// Minimizes sum_j |p_j - Xi phi_j|^2 + lambda |Xi|_F^2 by plain gradient descent with step
/// 1 / L, L the largest eigenvalue of 2 (Phi Phi^T + lambda I).
inline Matrix gradient_descent_ridge(const Matrix& phi, const Matrix& p, double lambda,
                                     double grad_tol = 1e-13, long max_iter = 5'000'000) {
  Matrix h = phi * phi.transpose();
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) += lambda;
  const auto ev = jacobi_eigenvalues(h);
  const double step = 1.0 / (2.0 * ev.front());
  const Matrix target = p * phi.transpose();
  Matrix xi = Matrix::Zero(p.rows(), phi.rows());
  for (long it = 0; it < max_iter; ++it) {
    const Matrix grad = 2.0 * (xi * h - target);
    xi -= step * grad;
    if (grad.norm() < grad_tol) break;
  }
  return xi;
}

/// Squared Frobenius error of the best rank-k approximation, from singular values.
inline double tail_energy(const Vector& sigma, Eigen::Index k) {
  double s = 0.0;
  for (Eigen::Index j = k; j < sigma.size(); ++j) s += sigma(j) * sigma(j);
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* base = std::getenv("KMAN_TEST_TMP");
  std::filesystem::path dir =
      base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "kman_tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
