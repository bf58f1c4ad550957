#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "kman/kernels.hpp"
#include "kman/numerics.hpp"
#include "kman/pod.hpp"

namespace kman {

enum class Method { pod, feature_map, kernel };

std::string_view to_string(Method method);
/// Accepts the CLI spellings "pod", "fm-qm", "kernel".
Method parse_method(std::string_view name);

struct TrainingConfig {
  Method method = Method::kernel;
  Eigen::Index r = 1;
  Eigen::Index m = 1;
  double lambda = 0.0;
  OffsetChoice offset = OffsetChoice::mean();
  KernelSpec kernel{RbfFamily{}, std::nullopt};  // kernel path
  FeatureMap feature_map;                        // feature-map path
  bool normalize_inputs = false;
  JitterPolicy jitter = JitterPolicy::jitter(1e-14);

  /// r >= 1, m >= 1 (m >= 0 for pod), lambda >= 0, kernel parameters in range.
  void validate() const;
};

struct PodOnly {};

/// n(q_hat) = Omega^T K(train_inputs, nu(q_hat)).
struct KernelCorrection {
  KernelSpec kernel;    // carries the fitted normalizer, if any
  Matrix omega;         // M x m
  Matrix train_inputs;  // r x M, already passed through the normalizer
};

/// n(q_hat) = Xi phi(nu(q_hat)).
struct FeatureMapCorrection {
  FeatureMap feature_map;
  std::optional<Normalizer> normalizer;
  Matrix xi;  // m x n_phi
};

using Correction = std::variant<PodOnly, KernelCorrection, FeatureMapCorrection>;

struct TrainedManifold {
  PodBasis basis;
  Correction correction;
  double lambda = 0.0;
  double jitter = 0.0;  // diagonal shift the solver had to add, if any

  Method method() const;
  Eigen::Index r() const { return basis.r(); }
  Eigen::Index m() const { return basis.m(); }
};

/// Fits the kernel correction for a fixed basis: forms Q_hat, P_hat, optionally fits the
/// normalizer on Q_hat, and solves (K(Q_hat, Q_hat) + lambda I) Omega = P_hat^T.
TrainedManifold fit_kernel_manifold(PodBasis basis, const Matrix& states, const KernelSpec& kernel,
                                    double lambda, bool normalize_inputs,
                                    JitterPolicy jitter = JitterPolicy::jitter(1e-14));

/// Fits Xi from (phi(Q_hat) phi(Q_hat)^T + lambda I) Xi^T = phi(Q_hat) P_hat^T; no jitter.
TrainedManifold fit_feature_map_manifold(PodBasis basis, const Matrix& states,
                                         const FeatureMap& feature_map, double lambda,
                                         bool normalize_inputs = false);

TrainedManifold train_kernel_manifold(const SnapshotSet& train, const TrainingConfig& cfg);
TrainedManifold train_feature_map_manifold(const SnapshotSet& train, const TrainingConfig& cfg);

/// Dispatches on cfg.method.
TrainedManifold train(const SnapshotSet& train, const TrainingConfig& cfg);
/// Same, reusing a factorization of `train` computed with cfg.offset.
TrainedManifold train(const PodFactorization& factorization, const SnapshotSet& train,
                      const TrainingConfig& cfg);

Vector nonlinear_term(const TrainedManifold& manifold, const Vector& q_hat);
Vector decode(const TrainedManifold& manifold, const Vector& q_hat);
Vector encode(const TrainedManifold& manifold, const Vector& q);
Vector reconstruct(const TrainedManifold& manifold, const Vector& q);

/// Batched forms; column j of the result corresponds to column j of the input.
Matrix nonlinear_terms(const TrainedManifold& manifold, const Matrix& q_hats);
Matrix decode_columns(const TrainedManifold& manifold, const Matrix& q_hats);
Matrix reconstruct_columns(const TrainedManifold& manifold, const Matrix& states);

}  // namespace kman
