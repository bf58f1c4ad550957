#include "kman/kernels.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <cmath>

#include "kman/errors.hpp"

namespace kman {

namespace {

constexpr std::array<std::pair<RbfKind, std::string_view>, 7> kRbfNames{{
    {RbfKind::gaussian, "gaussian"},
    {RbfKind::matern_basic, "matern_basic"},
    {RbfKind::matern_linear, "matern_linear"},
    {RbfKind::matern_quadratic, "matern_quadratic"},
    {RbfKind::inverse_quadratic, "inverse_quadratic"},
    {RbfKind::inverse_multiquadric, "inverse_multiquadric"},
    {RbfKind::thin_plate_spline, "thin_plate_spline"},
}};

double weighted_inner(const FeatureMapKernel& k, const Vector& fa, const Vector& fb) {
  switch (k.weight.kind) {
    case FeatureMapWeight::Kind::identity:
      return fa.dot(fb);
    case FeatureMapWeight::Kind::scaled_identity:
      return fa.dot(fb) / static_cast<double>(fa.size());
    case FeatureMapWeight::Kind::custom:
      if (k.weight.custom.rows() != fa.size() || k.weight.custom.cols() != fa.size()) {
        throw Error(ErrorKind::ShapeMismatch, "feature-map weight is " +
                                                  std::to_string(k.weight.custom.rows()) +
                                                  "x" + std::to_string(k.weight.custom.cols()) +
                                                  ", features have length " +
                                                  std::to_string(fa.size()));
      }
      return fa.dot(k.weight.custom * fb);
  }
  return 0.0;
}

// Operates on already-normalized inputs.
double base_eval(const KernelSpec& kernel, const Vector& a, const Vector& b) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RbfFamily>) {
          double sq = 0.0;
          for (Eigen::Index i = 0; i < a.size(); ++i) {
            const double d = a(i) - b(i);
            sq += d * d;
          }
          return rbf_psi(k.kind, k.epsilon * std::sqrt(sq));
        } else if constexpr (std::is_same_v<T, PolynomialKernel>) {
          const double rho = k.rho.value_or(1.0 / static_cast<double>(a.size()));
          double dot = 0.0;
          for (Eigen::Index i = 0; i < a.size(); ++i) dot += a(i) * b(i);
          const double base = k.c + rho * dot;
          double out = 1.0;
          for (int p = 0; p < k.ell; ++p) out *= base;
          return out;
        } else {
          return weighted_inner(k, k.feature_map(a), k.feature_map(b));
        }
      },
      kernel.base);
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

double canonical_eval(const KernelSpec& kernel, const Vector& a, const Vector& b) {
  return lex_less(b, a) ? base_eval(kernel, b, a) : base_eval(kernel, a, b);
}

}  // namespace

std::string_view to_string(RbfKind kind) {
  for (const auto& [k, name] : kRbfNames) {
    if (k == kind) return name;
  }
  return "gaussian";
}

RbfKind parse_rbf_kind(std::string_view name) {
  for (const auto& [k, n] : kRbfNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::UnknownKernel, "unknown RBF kernel '" + std::string(name) + "'");
}

Vector FeatureMap::operator()(const Vector& x) const {
  if (kind == Kind::quadratic_no_duplicates) return quadratic_feature_map(x);
  if (!custom) throw Error(ErrorKind::InvalidConfig, "custom feature map has no callable");
  return custom(x);
}

Eigen::Index FeatureMap::output_dim(Eigen::Index n) const {
  if (kind == Kind::quadratic_no_duplicates) return n * (n + 1) / 2;
  return (*this)(Vector::Zero(n)).size();
}

Vector Normalizer::apply(const Vector& x) const {
  if (x.size() != m.size()) {
    throw Error(ErrorKind::ShapeMismatch, "normalizer fitted on length " +
                                              std::to_string(m.size()) + ", got " +
                                              std::to_string(x.size()));
  }
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = (x(i) - x_bar(i)) / m(i);
  return out;
}

Matrix Normalizer::apply_columns(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = apply(x.col(j));
  return out;
}

void validate(const KernelSpec& kernel) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RbfFamily>) {
          if (!(k.epsilon > 0.0) || !std::isfinite(k.epsilon)) {
            throw Error(ErrorKind::InvalidConfig, "RBF shape parameter must be positive");
          }
        } else if constexpr (std::is_same_v<T, PolynomialKernel>) {
          if (!(k.c >= 0.0)) throw Error(ErrorKind::InvalidConfig, "polynomial c must be >= 0");
          if (k.rho && !(*k.rho > 0.0)) {
            throw Error(ErrorKind::InvalidConfig, "polynomial rho must be > 0");
          }
          if (k.ell < 1) throw Error(ErrorKind::InvalidConfig, "polynomial order must be >= 1");
        } else {
          if (k.weight.kind == FeatureMapWeight::Kind::custom) {
            const Matrix& g = k.weight.custom;
            if (g.rows() != g.cols() || g.rows() == 0 || !g.allFinite() ||
                (g - g.transpose()).norm() > 1e-12 * g.norm()) {
              throw Error(ErrorKind::InvalidConfig, "feature-map weight must be symmetric");
            }
            Eigen::LLT<Matrix> llt(g);
            if (llt.info() != Eigen::Success) {
              throw Error(ErrorKind::InvalidConfig, "feature-map weight must be positive definite");
            }
          }
        }
      },
      kernel.base);
  if (kernel.normalizer) {
    const auto& nu = *kernel.normalizer;
    if (nu.m.size() != nu.x_bar.size() || !(nu.m.array() > 0.0).all() || !nu.x_bar.allFinite()) {
      throw Error(ErrorKind::InvalidConfig, "normalizer ranges must be positive");
    }
  }
}

double rbf_psi(RbfKind kind, double r) {
  switch (kind) {
    case RbfKind::gaussian: return std::exp(-r * r);
    case RbfKind::matern_basic: return std::exp(-r);
    case RbfKind::matern_linear: return (1.0 + r) * std::exp(-r);
    case RbfKind::matern_quadratic: return (3.0 + 3.0 * r + r * r) * std::exp(-r);
    case RbfKind::inverse_quadratic: return 1.0 / (1.0 + r * r);
    case RbfKind::inverse_multiquadric: return 1.0 / std::sqrt(1.0 + r * r);
    case RbfKind::thin_plate_spline: return r == 0.0 ? 0.0 : r * r * std::log(r);
  }
  return 0.0;
}

Vector quadratic_feature_map(const Vector& x) {
  const Eigen::Index n = x.size();
  Vector out(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) out(k++) = x(i) * x(j);
  }
  return out;
}

Normalizer fit_normalizer(const Matrix& inputs) {
  require_finite(inputs, "normalizer inputs");
  Normalizer nu{inputs.rowwise().maxCoeff() - inputs.rowwise().minCoeff(),
                inputs.rowwise().minCoeff()};
  // Constant coordinates would divide by zero; leave them unscaled.
  for (Eigen::Index i = 0; i < nu.m.size(); ++i) {
    if (nu.m(i) == 0.0) nu.m(i) = 1.0;
  }
  return nu;
}

double eval(const KernelSpec& kernel, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::ShapeMismatch, "kernel arguments have lengths " +
                                              std::to_string(x.size()) + " and " +
                                              std::to_string(y.size()));
  }
  if (kernel.normalizer) {
    return canonical_eval(kernel, kernel.normalizer->apply(x), kernel.normalizer->apply(y));
  }
  return canonical_eval(kernel, x, y);
}

Matrix gram(const KernelSpec& kernel, const Matrix& x) {
  const Matrix xn = kernel.normalizer ? kernel.normalizer->apply_columns(x) : x;
  const Eigen::Index n = xn.cols();
  Matrix k(n, n);
  std::vector<Vector> cols(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = xn.col(j);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      k(i, j) = canonical_eval(kernel, cols[static_cast<std::size_t>(i)],
                               cols[static_cast<std::size_t>(j)]);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

Vector kernel_vector(const KernelSpec& kernel, const Matrix& x, const Vector& query) {
  if (query.size() != x.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "query has length " + std::to_string(query.size()) +
                                              ", kernel inputs have length " +
                                              std::to_string(x.rows()));
  }
  const Vector qn = kernel.normalizer ? kernel.normalizer->apply(query) : query;
  Vector out(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector xj = kernel.normalizer ? kernel.normalizer->apply(x.col(j)) : Vector(x.col(j));
    out(j) = canonical_eval(kernel, xj, qn);
  }
  return out;
}

Matrix cross_gram(const KernelSpec& kernel, const Matrix& x, const Matrix& y) {
  if (y.rows() != x.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "queries have length " + std::to_string(y.rows()) +
                                              ", kernel inputs have length " +
                                              std::to_string(x.rows()));
  }
  const Matrix xn = kernel.normalizer ? kernel.normalizer->apply_columns(x) : x;
  const Matrix yn = kernel.normalizer ? kernel.normalizer->apply_columns(y) : y;
  std::vector<Vector> xcols(static_cast<std::size_t>(xn.cols()));
  for (Eigen::Index i = 0; i < xn.cols(); ++i) xcols[static_cast<std::size_t>(i)] = xn.col(i);
  Matrix out(x.cols(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const Vector q = yn.col(j);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      out(i, j) = canonical_eval(kernel, xcols[static_cast<std::size_t>(i)], q);
    }
  }
  return out;
}

KernelSpec without_normalizer(const KernelSpec& kernel) { return {kernel.base, std::nullopt}; }

std::string kernel_name(const KernelSpec& kernel) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RbfFamily>) {
          return std::string(to_string(k.kind));
        } else if constexpr (std::is_same_v<T, PolynomialKernel>) {
          return "polynomial";
        } else {
          return k.feature_map.kind == FeatureMap::Kind::quadratic_no_duplicates
                     ? "quadratic"
                     : k.feature_map.name;
        }
      },
      kernel.base);
}

namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

nlohmann::json to_json(const KernelSpec& kernel) {
  nlohmann::json base = std::visit(
      [](const auto& k) -> nlohmann::json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RbfFamily>) {
          return {{"type", "rbf"}, {"kind", to_string(k.kind)}, {"epsilon", k.epsilon}};
        } else if constexpr (std::is_same_v<T, PolynomialKernel>) {
          nlohmann::json out{{"type", "polynomial"}, {"c", k.c}, {"ell", k.ell}};
          out["rho"] = k.rho ? nlohmann::json(*k.rho) : nlohmann::json(nullptr);
          return out;
        } else {
          if (k.feature_map.kind == FeatureMap::Kind::custom) {
            throw Error(ErrorKind::InvalidConfig,
                        "custom feature map '" + k.feature_map.name + "' cannot be serialized");
          }
          nlohmann::json weight;
          switch (k.weight.kind) {
            case FeatureMapWeight::Kind::identity: weight = {{"kind", "identity"}}; break;
            case FeatureMapWeight::Kind::scaled_identity:
              weight = {{"kind", "scaled_identity"}};
              break;
            case FeatureMapWeight::Kind::custom: {
              nlohmann::json rows = nlohmann::json::array();
              for (Eigen::Index i = 0; i < k.weight.custom.rows(); ++i) {
                rows.push_back(vector_json(k.weight.custom.row(i).transpose()));
              }
              weight = {{"kind", "custom"}, {"matrix", rows}};
              break;
            }
          }
          return {{"type", "feature_map"},
                  {"feature_map", "quadratic_no_duplicates"},
                  {"weight", weight}};
        }
      },
      kernel.base);
  nlohmann::json out{{"base", base}, {"normalizer", nullptr}};
  if (kernel.normalizer) {
    out["normalizer"] = {{"m", vector_json(kernel.normalizer->m)},
                         {"x_bar", vector_json(kernel.normalizer->x_bar)}};
  }
  return out;
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  KernelSpec spec;
  try {
    const auto& base = j.at("base");
    const auto type = base.at("type").get<std::string>();
    if (type == "rbf") {
      spec.base = RbfFamily{parse_rbf_kind(base.at("kind").get<std::string>()),
                            base.at("epsilon").get<double>()};
    } else if (type == "polynomial") {
      PolynomialKernel k;
      k.c = base.at("c").get<double>();
      k.ell = base.at("ell").get<int>();
      if (base.contains("rho") && !base.at("rho").is_null()) k.rho = base.at("rho").get<double>();
      spec.base = k;
    } else if (type == "feature_map") {
      FeatureMapKernel k;
      const auto fmap = base.at("feature_map").get<std::string>();
      if (fmap != "quadratic_no_duplicates") {
        throw Error(ErrorKind::UnknownKernel, "unknown feature map '" + fmap + "'");
      }
      const auto& weight = base.at("weight");
      const auto kind = weight.at("kind").get<std::string>();
      if (kind == "identity") {
        k.weight = FeatureMapWeight::identity();
      } else if (kind == "scaled_identity") {
        k.weight = FeatureMapWeight::scaled_identity();
      } else if (kind == "custom") {
        const auto rows = weight.at("matrix").get<std::vector<std::vector<double>>>();
        Matrix g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows.size()) {
            throw Error(ErrorKind::SchemaError, "feature-map weight must be square");
          }
          for (std::size_t c = 0; c < rows.size(); ++c) {
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
          }
        }
        k.weight = FeatureMapWeight::with(std::move(g));
      } else {
        throw Error(ErrorKind::SchemaError, "unknown feature-map weight '" + kind + "'");
      }
      spec.base = std::move(k);
    } else {
      throw Error(ErrorKind::UnknownKernel, "unknown kernel type '" + type + "'");
    }
    if (j.contains("normalizer") && !j.at("normalizer").is_null()) {
      spec.normalizer = Normalizer{vector_from_json(j.at("normalizer").at("m")),
                                   vector_from_json(j.at("normalizer").at("x_bar"))};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("kernel spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

}  // namespace kman
