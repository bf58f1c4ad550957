#include "kman/pod.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <mutex>

#include "kman/errors.hpp"

namespace kman {

namespace {

std::mutex& warning_mutex() {
  static std::mutex mutex;
  return mutex;
}

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

void require_length(Eigen::Index got, Eigen::Index expected, std::string_view what) {
  if (got != expected) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + " has length " +
                                              std::to_string(got) + ", expected " +
                                              std::to_string(expected));
  }
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex());
  warning_handler() = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

void SnapshotSet::validate() const {
  if (states.cols() < 2) {
    throw Error(ErrorKind::ShapeMismatch,
                "snapshot set needs at least 2 columns, got " + std::to_string(states.cols()));
  }
  require_finite(states, "snapshot matrix");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != states.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "snapshot labels do not match column count");
  }
}

std::string_view to_string(OffsetChoice::Kind kind) {
  switch (kind) {
    case OffsetChoice::Kind::mean: return "mean";
    case OffsetChoice::Kind::zero: return "zero";
    case OffsetChoice::Kind::custom: return "custom";
  }
  return "mean";
}

ShiftedData shift(const SnapshotSet& snapshots, const OffsetChoice& offset) {
  snapshots.validate();
  const Matrix& q = snapshots.states;
  switch (offset.kind) {
    case OffsetChoice::Kind::zero:
      return {q, Vector::Zero(q.rows())};
    case OffsetChoice::Kind::mean: {
      Vector mean = q.rowwise().mean();
      return {q.colwise() - mean, std::move(mean)};
    }
    case OffsetChoice::Kind::custom:
      require_length(offset.custom.size(), q.rows(), "custom offset");
      require_finite(offset.custom, "custom offset");
      return {q.colwise() - offset.custom, offset.custom};
  }
  throw Error(ErrorKind::InvalidConfig, "unknown offset kind");
}

Eigen::Index PodFactorization::numerical_rank() const {
  const Vector& s = svd.singular_values;
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double dims = static_cast<double>(std::max(svd.u.rows(), svd.vt.cols()));
  const double tol = dims * std::numeric_limits<double>::epsilon() * s(0);
  return (s.array() > tol).count();
}

PodFactorization factorize(const SnapshotSet& snapshots, const OffsetChoice& offset) {
  auto shifted = shift(snapshots, offset);
  return {std::move(shifted.offset), thin_svd(shifted.shifted)};
}

PodBasis build_basis(const PodFactorization& factorization, Eigen::Index r, Eigen::Index m) {
  if (r < 1 || m < 0) {
    throw Error(ErrorKind::InvalidConfig,
                "need r >= 1 and m >= 0, got r=" + std::to_string(r) + " m=" + std::to_string(m));
  }
  const ThinSvd& svd = factorization.svd;
  const Eigen::Index bound = svd.singular_values.size();
  if (r + m > bound) {
    throw Error(ErrorKind::InvalidConfig, "r + m = " + std::to_string(r + m) +
                                              " exceeds min(N, M) = " + std::to_string(bound));
  }
  const Eigen::Index rank = factorization.numerical_rank();
  if (rank == 0) {
    throw Error(ErrorKind::RankDeficient, "shifted snapshot matrix is numerically zero");
  }
  if (r + m > rank) {
    const Eigen::Index r_kept = std::min(r, rank);
    const Eigen::Index m_kept = std::min(m, rank - r_kept);
    warn("requested r=" + std::to_string(r) + " m=" + std::to_string(m) +
         " exceeds numerical rank " + std::to_string(rank) + "; truncating to r=" +
         std::to_string(r_kept) + " m=" + std::to_string(m_kept));
    r = r_kept;
    m = m_kept;
  }
  return PodBasis{factorization.offset, svd.u.leftCols(r), svd.u.middleCols(r, m),
                  svd.singular_values};
}

PodBasis build_basis(const SnapshotSet& snapshots, const OffsetChoice& offset, Eigen::Index r,
                     Eigen::Index m) {
  return build_basis(factorize(snapshots, offset), r, m);
}

Vector encode(const PodBasis& basis, const Vector& q) {
  require_length(q.size(), basis.dim(), "state");
  return basis.v.transpose() * (q - basis.offset);
}

Vector project_high(const PodBasis& basis, const Vector& q) {
  require_length(q.size(), basis.dim(), "state");
  return basis.v_bar.transpose() * (q - basis.offset);
}

Vector decode_affine(const PodBasis& basis, const Vector& q_hat) {
  require_length(q_hat.size(), basis.r(), "latent vector");
  return basis.offset + basis.v * q_hat;
}

Matrix encode_columns(const PodBasis& basis, const Matrix& states) {
  require_length(states.rows(), basis.dim(), "snapshot column");
  return basis.v.transpose() * (states.colwise() - basis.offset);
}

Matrix project_high_columns(const PodBasis& basis, const Matrix& states) {
  require_length(states.rows(), basis.dim(), "snapshot column");
  return basis.v_bar.transpose() * (states.colwise() - basis.offset);
}

Eigen::Index energy_criterion(const Vector& singular_values, double nu) {
  if (nu < 0.0) {
    throw Error(ErrorKind::Unreachable, "energy tolerance must be nonnegative");
  }
  const Eigen::Index n = singular_values.size();
  if (n == 0 || (singular_values.array() < 0.0).any() || singular_values.maxCoeff() <= 0.0) {
    throw Error(ErrorKind::InvalidConfig, "singular values must be nonnegative with one positive");
  }
  for (Eigen::Index j = 1; j < n; ++j) {
    if (singular_values(j) > singular_values(j - 1)) {
      throw Error(ErrorKind::InvalidConfig, "singular values must be nonincreasing");
    }
  }
  const Vector energy = singular_values.array().square();
  const double total = energy.sum();
  double captured = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    captured += energy(k);
    if (1.0 - captured / total <= nu) return k + 1;
  }
  return n;
}

}  // namespace kman
