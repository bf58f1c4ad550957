#include "kman/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "kman/errors.hpp"

namespace kman {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool has_duplicate_columns(const Matrix& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    return std::lexicographical_compare(x.col(a).data(), x.col(a).data() + x.rows(),
                                        x.col(b).data(), x.col(b).data() + x.rows());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (x.col(order[k - 1]) == x.col(order[k])) return true;
  }
  return false;
}

void check_states(const PodBasis& basis, const Matrix& states) {
  if (states.rows() != basis.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "training states have " +
                                              std::to_string(states.rows()) +
                                              " rows, basis has " + std::to_string(basis.dim()));
  }
  require_finite(states, "training states");
}

// A nonlinear correction needs at least one high-order mode left after rank truncation.
void check_correction_modes(const PodBasis& basis) {
  if (basis.m() == 0) {
    throw Error(ErrorKind::RankDeficient,
                "no correction modes remain after truncating to the numerical rank");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidConfig, "regularization must be finite and >= 0");
  }
}

KernelSpec bind_defaults(KernelSpec kernel, Eigen::Index r) {
  if (auto* poly = std::get_if<PolynomialKernel>(&kernel.base); poly && !poly->rho) {
    poly->rho = 1.0 / static_cast<double>(r);
  }
  return kernel;
}

Matrix features_of(const FeatureMap& feature_map, const Matrix& inputs) {
  Matrix phi;
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    Vector f = feature_map(inputs.col(j));
    if (j == 0) phi.resize(f.size(), inputs.cols());
    phi.col(j) = f;
  }
  return phi;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::pod: return "pod";
    case Method::feature_map: return "fm-qm";
    case Method::kernel: return "kernel";
  }
  return "pod";
}

Method parse_method(std::string_view name) {
  if (name == "pod") return Method::pod;
  if (name == "fm-qm" || name == "feature_map") return Method::feature_map;
  if (name == "kernel") return Method::kernel;
  throw Error(ErrorKind::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
  if (r < 1) throw Error(ErrorKind::InvalidConfig, "r must be >= 1");
  if (method == Method::pod ? m < 0 : m < 1) {
    throw Error(ErrorKind::InvalidConfig, "m must be >= 1 for nonlinear manifolds");
  }
  check_lambda(lambda);
  if (method == Method::kernel) kman::validate(kernel);
}

Method TrainedManifold::method() const {
  return std::visit(overloaded{[](const PodOnly&) { return Method::pod; },
                               [](const KernelCorrection&) { return Method::kernel; },
                               [](const FeatureMapCorrection&) { return Method::feature_map; }},
                    correction);
}

TrainedManifold fit_kernel_manifold(PodBasis basis, const Matrix& states, const KernelSpec& kernel,
                                    double lambda, bool normalize_inputs, JitterPolicy jitter) {
  check_states(basis, states);
  check_correction_modes(basis);
  check_lambda(lambda);
  KernelSpec spec = bind_defaults(without_normalizer(kernel), basis.r());
  validate(spec);

  const Matrix q_hat = encode_columns(basis, states);
  const Matrix p_hat = project_high_columns(basis, states);
  if (normalize_inputs) spec.normalizer = fit_normalizer(q_hat);
  Matrix inputs = spec.normalizer ? spec.normalizer->apply_columns(q_hat) : q_hat;

  if (lambda == 0.0 && has_duplicate_columns(inputs)) {
    throw Error(ErrorKind::SingularSystem,
                "duplicate latent training inputs make the unregularized kernel system singular");
  }

  Matrix k = gram(without_normalizer(spec), inputs);
  k.diagonal().array() += lambda;
  auto solution = solve_spd_detailed(k, p_hat.transpose(), jitter);
  if (solution.jitter > 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", solution.jitter);
    warn(std::string("kernel system needed diagonal jitter ") + buf);
  }
  return TrainedManifold{std::move(basis),
                         KernelCorrection{std::move(spec), std::move(solution.x), std::move(inputs)},
                         lambda, solution.jitter};
}

TrainedManifold fit_feature_map_manifold(PodBasis basis, const Matrix& states,
                                         const FeatureMap& feature_map, double lambda,
                                         bool normalize_inputs) {
  check_states(basis, states);
  check_correction_modes(basis);
  check_lambda(lambda);
  const Matrix q_hat = encode_columns(basis, states);
  const Matrix p_hat = project_high_columns(basis, states);
  std::optional<Normalizer> normalizer;
  if (normalize_inputs) normalizer = fit_normalizer(q_hat);

  const Matrix phi = features_of(feature_map, normalizer ? normalizer->apply_columns(q_hat) : q_hat);
  Matrix lhs = phi * phi.transpose();
  lhs.diagonal().array() += lambda;
  // Symmetrize exactly; the product above is symmetric only up to rounding.
  lhs = (0.5 * (lhs + lhs.transpose())).eval();
  Matrix xi_t = solve_spd(lhs, phi * p_hat.transpose(), JitterPolicy::fail());
  return TrainedManifold{std::move(basis),
                         FeatureMapCorrection{feature_map, std::move(normalizer), xi_t.transpose()},
                         lambda, 0.0};
}

TrainedManifold train(const PodFactorization& factorization, const SnapshotSet& train,
                      const TrainingConfig& cfg) {
  cfg.validate();
  train.validate();
  PodBasis basis = build_basis(factorization, cfg.r, cfg.method == Method::pod ? 0 : cfg.m);
  switch (cfg.method) {
    case Method::pod:
      return TrainedManifold{std::move(basis), PodOnly{}, 0.0, 0.0};
    case Method::kernel:
      return fit_kernel_manifold(std::move(basis), train.states, cfg.kernel, cfg.lambda,
                                 cfg.normalize_inputs, cfg.jitter);
    case Method::feature_map:
      return fit_feature_map_manifold(std::move(basis), train.states, cfg.feature_map, cfg.lambda,
                                      cfg.normalize_inputs);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown method");
}

TrainedManifold train(const SnapshotSet& train_set, const TrainingConfig& cfg) {
  cfg.validate();
  return train(factorize(train_set, cfg.offset), train_set, cfg);
}

TrainedManifold train_kernel_manifold(const SnapshotSet& train_set, const TrainingConfig& cfg) {
  TrainingConfig c = cfg;
  c.method = Method::kernel;
  return train(train_set, c);
}

TrainedManifold train_feature_map_manifold(const SnapshotSet& train_set,
                                           const TrainingConfig& cfg) {
  TrainingConfig c = cfg;
  c.method = Method::feature_map;
  return train(train_set, c);
}

Matrix nonlinear_terms(const TrainedManifold& manifold, const Matrix& q_hats) {
  if (q_hats.rows() != manifold.r()) {
    throw Error(ErrorKind::ShapeMismatch, "latent vectors have length " +
                                              std::to_string(q_hats.rows()) + ", expected " +
                                              std::to_string(manifold.r()));
  }
  return std::visit(
      overloaded{
          [&](const PodOnly&) -> Matrix { return Matrix::Zero(manifold.m(), q_hats.cols()); },
          [&](const KernelCorrection& c) -> Matrix {
            const Matrix queries =
                c.kernel.normalizer ? c.kernel.normalizer->apply_columns(q_hats) : q_hats;
            return c.omega.transpose() *
                   cross_gram(without_normalizer(c.kernel), c.train_inputs, queries);
          },
          [&](const FeatureMapCorrection& c) -> Matrix {
            const Matrix inputs = c.normalizer ? c.normalizer->apply_columns(q_hats) : q_hats;
            return c.xi * features_of(c.feature_map, inputs);
          }},
      manifold.correction);
}

Vector nonlinear_term(const TrainedManifold& manifold, const Vector& q_hat) {
  if (q_hat.size() != manifold.r()) {
    throw Error(ErrorKind::ShapeMismatch, "latent vector has length " +
                                              std::to_string(q_hat.size()) + ", expected " +
                                              std::to_string(manifold.r()));
  }
  return std::visit(
      overloaded{[&](const PodOnly&) -> Vector { return Vector::Zero(manifold.m()); },
                 [&](const KernelCorrection& c) -> Vector {
                   const Vector query =
                       c.kernel.normalizer ? c.kernel.normalizer->apply(q_hat) : q_hat;
                   return c.omega.transpose() *
                          kernel_vector(without_normalizer(c.kernel), c.train_inputs, query);
                 },
                 [&](const FeatureMapCorrection& c) -> Vector {
                   const Vector input = c.normalizer ? c.normalizer->apply(q_hat) : q_hat;
                   return c.xi * c.feature_map(input);
                 }},
      manifold.correction);
}

Vector decode(const TrainedManifold& manifold, const Vector& q_hat) {
  Vector out = decode_affine(manifold.basis, q_hat);
  if (manifold.m() > 0) out += manifold.basis.v_bar * nonlinear_term(manifold, q_hat);
  return out;
}

Vector encode(const TrainedManifold& manifold, const Vector& q) { return encode(manifold.basis, q); }

Vector reconstruct(const TrainedManifold& manifold, const Vector& q) {
  return decode(manifold, encode(manifold.basis, q));
}

Matrix decode_columns(const TrainedManifold& manifold, const Matrix& q_hats) {
  Matrix out = (manifold.basis.v * q_hats).colwise() + manifold.basis.offset;
  if (manifold.m() > 0) out += manifold.basis.v_bar * nonlinear_terms(manifold, q_hats);
  return out;
}

Matrix reconstruct_columns(const TrainedManifold& manifold, const Matrix& states) {
  return decode_columns(manifold, encode_columns(manifold.basis, states));
}

}  // namespace kman
