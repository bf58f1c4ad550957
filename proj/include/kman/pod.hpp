#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kman/numerics.hpp"

namespace kman {

/// Per-column metadata, e.g. {"alpha": 1e-3, "time_index": 12} or {"mu1_deg": -10, "mu2": 0.4}.
using SnapshotLabel = std::map<std::string, double>;

struct SnapshotSet {
  Matrix states;                      // N x M, one snapshot per column
  std::vector<SnapshotLabel> labels;  // empty, or one per column
  std::optional<double> scaling;      // factor applied at ingestion, if any

  Eigen::Index dim() const { return states.rows(); }
  Eigen::Index count() const { return states.cols(); }

  /// M >= 2, finite entries, labels empty or one per column.
  void validate() const;
};

struct OffsetChoice {
  enum class Kind { mean, zero, custom };
  Kind kind = Kind::mean;
  Vector custom;

  static OffsetChoice mean() { return {Kind::mean, {}}; }
  static OffsetChoice zero() { return {Kind::zero, {}}; }
  static OffsetChoice with(Vector v) { return {Kind::custom, std::move(v)}; }
};

std::string_view to_string(OffsetChoice::Kind kind);

struct ShiftedData {
  Matrix shifted;  // Q - offset * 1^T
  Vector offset;
};

ShiftedData shift(const SnapshotSet& snapshots, const OffsetChoice& offset);

/// Offset plus the full thin SVD of the shifted data. Reusable across (r, m) choices.
struct PodFactorization {
  Vector offset;
  ThinSvd svd;

  /// Number of singular values above max(N, M) * eps * sigma_1.
  Eigen::Index numerical_rank() const;
};

PodFactorization factorize(const SnapshotSet& snapshots, const OffsetChoice& offset);

struct PodBasis {
  Vector offset;           // q_bar, length N
  Matrix v;                // N x r leading modes
  Matrix v_bar;            // N x m subsequent modes
  Vector singular_values;  // every singular value of the shifted training data

  Eigen::Index r() const { return v.cols(); }
  Eigen::Index m() const { return v_bar.cols(); }
  Eigen::Index dim() const { return offset.size(); }
};

/// Takes modes [0, r) as the reduced basis and [r, r + m) as the augmenting basis.
/// Requests past the numerical rank are truncated with a warning; RankDeficient is thrown
/// only when not even one mode survives.
PodBasis build_basis(const PodFactorization& factorization, Eigen::Index r, Eigen::Index m);
PodBasis build_basis(const SnapshotSet& snapshots, const OffsetChoice& offset, Eigen::Index r,
                     Eigen::Index m);

Vector encode(const PodBasis& basis, const Vector& q);
Vector project_high(const PodBasis& basis, const Vector& q);
Vector decode_affine(const PodBasis& basis, const Vector& q_hat);

/// Column-wise versions of encode / project_high for whole snapshot matrices.
Matrix encode_columns(const PodBasis& basis, const Matrix& states);
Matrix project_high_columns(const PodBasis& basis, const Matrix& states);

/// Smallest n such that 1 - sum_{j<=n} s_j^2 / sum_j s_j^2 <= nu.
Eigen::Index energy_criterion(const Vector& singular_values, double nu);

/// Receives non-fatal diagnostics (rank truncation, jitter). Defaults to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace kman
