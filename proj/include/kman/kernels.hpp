#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "kman/numerics.hpp"

namespace kman {

enum class RbfKind {
  gaussian,
  matern_basic,
  matern_linear,
  matern_quadratic,
  inverse_quadratic,
  inverse_multiquadric,
  thin_plate_spline,
};

std::string_view to_string(RbfKind kind);
/// Throws UnknownKernel for names outside the RBF family.
RbfKind parse_rbf_kind(std::string_view name);

/// K(x, y) = psi(epsilon * |x - y|).
struct RbfFamily {
  RbfKind kind = RbfKind::gaussian;
  double epsilon = 1.0;
};

/// K(x, y) = (c + rho x^T y)^ell. An unset rho means 1/d for inputs of length d.
struct PolynomialKernel {
  double c = 1.0;
  std::optional<double> rho;
  int ell = 2;
};

struct FeatureMap {
  enum class Kind { quadratic_no_duplicates, custom };
  Kind kind = Kind::quadratic_no_duplicates;
  std::string name = "quadratic_no_duplicates";
  std::function<Vector(const Vector&)> custom;  // used when kind == custom

  Vector operator()(const Vector& x) const;
  /// Output length for inputs of length n.
  Eigen::Index output_dim(Eigen::Index n) const;
};

struct FeatureMapWeight {
  enum class Kind { identity, scaled_identity, custom };
  Kind kind = Kind::identity;
  Matrix custom;  // symmetric positive definite, used when kind == custom

  static FeatureMapWeight identity() { return {Kind::identity, {}}; }
  /// G = (1 / n_phi) I.
  static FeatureMapWeight scaled_identity() { return {Kind::scaled_identity, {}}; }
  static FeatureMapWeight with(Matrix g) { return {Kind::custom, std::move(g)}; }
};

/// K(x, y) = phi(x)^T G phi(y).
struct FeatureMapKernel {
  FeatureMap feature_map;
  FeatureMapWeight weight;
};

/// nu(x) = diag(m)^{-1} (x - x_bar), mapping each training coordinate onto [0, 1].
struct Normalizer {
  Vector m;
  Vector x_bar;

  Vector apply(const Vector& x) const;
  Matrix apply_columns(const Matrix& x) const;
};

struct KernelSpec {
  std::variant<RbfFamily, PolynomialKernel, FeatureMapKernel> base;
  std::optional<Normalizer> normalizer;

  bool is_feature_map() const { return std::holds_alternative<FeatureMapKernel>(base); }
};

/// Checks parameter ranges (epsilon > 0, c >= 0, rho > 0, ell >= 1, G positive definite,
/// normalizer ranges > 0). Throws InvalidConfig.
void validate(const KernelSpec& kernel);

/// Radial profile psi(r); thin_plate_spline uses psi(0) = 0.
double rbf_psi(RbfKind kind, double r);

/// Duplicate-free quadratic monomials [x1^2, x2 x1, x2^2, x3 x1, x3 x2, x3^2, ...].
Vector quadratic_feature_map(const Vector& x);

Normalizer fit_normalizer(const Matrix& inputs);

/// Evaluates the kernel with arguments in a canonical order, so eval(x, y) == eval(y, x) bitwise.
double eval(const KernelSpec& kernel, const Vector& x, const Vector& y);

/// n x n matrix K(X, X); the upper triangle is evaluated and mirrored.
Matrix gram(const KernelSpec& kernel, const Matrix& x);

/// [K(x_1, query), ..., K(x_n, query)].
Vector kernel_vector(const KernelSpec& kernel, const Matrix& x, const Vector& query);

/// n x T matrix with entries K(x_i, y_j); column j equals kernel_vector(kernel, x, y_j).
Matrix cross_gram(const KernelSpec& kernel, const Matrix& x, const Matrix& y);

/// Kernel without its normalizer; inputs are assumed to be normalized already.
KernelSpec without_normalizer(const KernelSpec& kernel);

nlohmann::json to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const nlohmann::json& j);

/// Human-readable name used in reports: the RBF kind, "polynomial", or the feature map name.
std::string kernel_name(const KernelSpec& kernel);

}  // namespace kman
