#pragma once

#include <chrono>
#include <string_view>
#include <utility>
#include <vector>

#include "kman/manifold.hpp"

namespace kman {

enum class MetricKind { rel_l2_trajectory, mean_rel_l2, rel_l1_max };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric(std::string_view name);

struct ErrorReport {
  MetricKind kind = MetricKind::rel_l2_trajectory;
  double value = 0.0;
  /// Per-column contributions: |e_j|_2 / sqrt(sum |q|^2), |e_j|_2 / |q_j|_2 or
  /// |e_j|_1 / max |q|_1 depending on the metric.
  std::vector<double> per_snapshot;
};

/// (sum_j |q_j - r_j|^2 / sum_j |q_j|^2)^(1/2).
double rel_l2_trajectory(const Matrix& truth, const Matrix& reconstruction);
/// (1/M) sum_j |q_j - r_j|_2 / |q_j|_2.
double mean_rel_l2(const Matrix& truth, const Matrix& reconstruction);
/// max_j |q_j - r_j|_1 / max_j |q_j|_1.
double rel_l1_max(const Matrix& truth, const Matrix& reconstruction);

ErrorReport evaluate(MetricKind kind, const Matrix& truth, const Matrix& reconstruction);

/// Reconstructs every column of `truth` through the manifold, then applies the metric.
ErrorReport evaluate(MetricKind kind, const SnapshotSet& truth, const TrainedManifold& manifold);

double rel_l2_trajectory(const SnapshotSet& truth, const TrainedManifold& manifold);
double mean_rel_l2(const SnapshotSet& truth, const TrainedManifold& manifold);
double rel_l1_max(const SnapshotSet& truth, const TrainedManifold& manifold);

template <class T>
struct Timed {
  T value;
  double seconds;
};

/// Wall-clock time around a call.
template <class F>
auto timed(F&& fn) -> Timed<decltype(fn())> {
  const auto start = std::chrono::steady_clock::now();
  auto value = std::forward<F>(fn)();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {std::move(value), elapsed.count()};
}

}  // namespace kman
