#include "kman/metrics.hpp"

#include <cmath>
#include <string>

#include "kman/errors.hpp"

namespace kman {

namespace {

void check_pair(const Matrix& truth, const Matrix& reconstruction) {
  if (truth.rows() != reconstruction.rows() || truth.cols() != reconstruction.cols()) {
    throw Error(ErrorKind::ShapeMismatch,
                "truth is " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()) +
                    ", reconstruction is " + std::to_string(reconstruction.rows()) + "x" +
                    std::to_string(reconstruction.cols()));
  }
  require_finite(truth, "truth");
  require_finite(reconstruction, "reconstruction");
}

}  // namespace

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::rel_l2_trajectory: return "rel_l2_trajectory";
    case MetricKind::mean_rel_l2: return "mean_rel_l2";
    case MetricKind::rel_l1_max: return "rel_l1_max";
  }
  return "rel_l2_trajectory";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "rel_l2_trajectory") return MetricKind::rel_l2_trajectory;
  if (name == "mean_rel_l2") return MetricKind::mean_rel_l2;
  if (name == "rel_l1_max") return MetricKind::rel_l1_max;
  throw Error(ErrorKind::InvalidConfig, "unknown metric '" + std::string(name) + "'");
}

ErrorReport evaluate(MetricKind kind, const Matrix& truth, const Matrix& reconstruction) {
  check_pair(truth, reconstruction);
  const Eigen::Index cols = truth.cols();
  ErrorReport report{kind, 0.0, std::vector<double>(static_cast<std::size_t>(cols))};
  const Matrix residual = truth - reconstruction;

  switch (kind) {
    case MetricKind::rel_l2_trajectory: {
      const double denom = truth.squaredNorm();
      if (!(denom > 0.0)) throw Error(ErrorKind::ZeroDenominator, "truth snapshots are all zero");
      const double root = std::sqrt(denom);
      double numer = 0.0;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double e = residual.col(j).squaredNorm();
        numer += e;
        report.per_snapshot[static_cast<std::size_t>(j)] = std::sqrt(e) / root;
      }
      report.value = std::sqrt(numer / denom);
      break;
    }
    case MetricKind::mean_rel_l2: {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double denom = truth.col(j).norm();
        if (!(denom > 0.0)) {
          throw Error(ErrorKind::ZeroDenominator,
                      "truth column " + std::to_string(j) + " is zero");
        }
        const double rel = residual.col(j).norm() / denom;
        report.per_snapshot[static_cast<std::size_t>(j)] = rel;
        sum += rel;
      }
      report.value = sum / static_cast<double>(cols);
      break;
    }
    case MetricKind::rel_l1_max: {
      const double denom = truth.cwiseAbs().colwise().sum().maxCoeff();
      if (!(denom > 0.0)) throw Error(ErrorKind::ZeroDenominator, "truth snapshots are all zero");
      double worst = 0.0;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double e = residual.col(j).lpNorm<1>();
        worst = std::max(worst, e);
        report.per_snapshot[static_cast<std::size_t>(j)] = e / denom;
      }
      report.value = worst / denom;
      break;
    }
  }
  return report;
}

double rel_l2_trajectory(const Matrix& truth, const Matrix& reconstruction) {
  return evaluate(MetricKind::rel_l2_trajectory, truth, reconstruction).value;
}

double mean_rel_l2(const Matrix& truth, const Matrix& reconstruction) {
  return evaluate(MetricKind::mean_rel_l2, truth, reconstruction).value;
}

double rel_l1_max(const Matrix& truth, const Matrix& reconstruction) {
  return evaluate(MetricKind::rel_l1_max, truth, reconstruction).value;
}

ErrorReport evaluate(MetricKind kind, const SnapshotSet& truth, const TrainedManifold& manifold) {
  if (truth.dim() != manifold.basis.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "dataset has N=" + std::to_string(truth.dim()) +
                                              ", manifold has N=" +
                                              std::to_string(manifold.basis.dim()));
  }
  return evaluate(kind, truth.states, reconstruct_columns(manifold, truth.states));
}

double rel_l2_trajectory(const SnapshotSet& truth, const TrainedManifold& manifold) {
  return evaluate(MetricKind::rel_l2_trajectory, truth, manifold).value;
}

double mean_rel_l2(const SnapshotSet& truth, const TrainedManifold& manifold) {
  return evaluate(MetricKind::mean_rel_l2, truth, manifold).value;
}

double rel_l1_max(const SnapshotSet& truth, const TrainedManifold& manifold) {
  return evaluate(MetricKind::rel_l1_max, truth, manifold).value;
}

}  // namespace kman
