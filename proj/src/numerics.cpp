#include "kman/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "kman/errors.hpp"

namespace kman {

void require_finite(const Matrix& a, std::string_view what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + " is empty");
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::NonFinite, std::string(what) + " has NaN or Inf entries");
  }
}

void require_finite(const Vector& v, std::string_view what) {
  if (v.size() < 1) throw Error(ErrorKind::ShapeMismatch, std::string(what) + " is empty");
  if (!v.allFinite()) {
    throw Error(ErrorKind::NonFinite, std::string(what) + " has NaN or Inf entries");
  }
}

ThinSvd thin_svd(const Matrix& a) {
  require_finite(a, "svd input");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw Error(ErrorKind::ConvergenceFailure, "SVD iteration did not converge");
  }
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};

  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    Eigen::Index arg = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, j) < 0.0) {
      out.u.col(j) *= -1.0;
      out.vt.row(j) *= -1.0;
    }
  }
  return out;
}

namespace {

std::optional<Matrix> try_cholesky_solve(const Matrix& a, const Matrix& b) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;

  // LLT only fails on nonpositive pivots; a pivot at rounding level means the system is
  // numerically singular and the solve would be garbage.
  const auto n = static_cast<double>(a.rows());
  const double floor = n * std::numeric_limits<double>::epsilon() * a.diagonal().cwiseAbs().maxCoeff();
  const Vector pivots = llt.matrixLLT().diagonal().array().square();
  if (pivots.minCoeff() <= floor) return std::nullopt;

  Matrix x = llt.solve(b);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace

SpdSolution solve_spd_detailed(const Matrix& a, const Matrix& b, JitterPolicy policy) {
  require_finite(a, "spd matrix");
  require_finite(b, "right-hand side");
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "spd matrix is " + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + ", expected square");
  }
  if (b.rows() != a.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "right-hand side has " + std::to_string(b.rows()) +
                                              " rows, matrix has " + std::to_string(a.rows()));
  }
  const double scale = a.norm();
  if ((a - a.transpose()).norm() > 1e-12 * scale) {
    throw Error(ErrorKind::InvalidConfig, "spd matrix is not symmetric");
  }

  if (auto x = try_cholesky_solve(a, b)) return {std::move(*x), 0.0};

  if (policy.mode == JitterPolicy::Mode::jitter) {
    const auto n = a.rows();
    double delta = policy.magnitude * a.trace() / static_cast<double>(n);
    for (int attempt = 0; attempt <= 3; ++attempt, delta *= 10.0) {
      if (!(delta > 0.0)) break;
      Matrix shifted = a;
      shifted.diagonal().array() += delta;
      if (auto x = try_cholesky_solve(shifted, b)) return {std::move(*x), delta};
    }
  }
  throw Error(ErrorKind::SingularSystem, "Cholesky factorization failed on a " +
                                             std::to_string(a.rows()) + "x" +
                                             std::to_string(a.rows()) + " system");
}

}  // namespace kman
