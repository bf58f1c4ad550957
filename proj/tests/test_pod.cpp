#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "kman/errors.hpp"
#include "kman/pod.hpp"
#include "oracles.hpp"

using namespace kman;

namespace {

SnapshotSet random_set(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  return SnapshotSet{oracle::random_matrix(rng, n, m), {}, std::nullopt};
}

double spectral_norm(const Matrix& a) { return thin_svd(a).singular_values(0); }

void check_orthonormality(const PodBasis& b) {
  const auto r = b.r(), m = b.m();
  CHECK(spectral_norm(b.v.transpose() * b.v - Matrix::Identity(r, r)) < 1e-10);
  if (m > 0) {
    CHECK(spectral_norm(b.v_bar.transpose() * b.v_bar - Matrix::Identity(m, m)) < 1e-10);
    CHECK(spectral_norm(b.v.transpose() * b.v_bar) < 1e-10);
  }
}

}  // namespace

TEST_CASE("shift with the snapshot mean") {
  SnapshotSet s{Matrix(2, 2), {}, std::nullopt};
  s.states << 1, 3, 2, 4;
  const auto out = shift(s, OffsetChoice::mean());
  CHECK(out.offset(0) == 2.0);
  CHECK(out.offset(1) == 3.0);
  Matrix expected(2, 2);
  expected << -1, 1, -1, 1;
  CHECK(out.shifted == expected);
}

TEST_CASE("shift with zero and custom offsets") {
  std::mt19937_64 rng(1);
  const auto s = random_set(rng, 6, 4);
  const auto z = shift(s, OffsetChoice::zero());
  CHECK(z.shifted == s.states);
  CHECK(z.offset.isZero(0.0));

  const Vector c = oracle::random_vector(rng, 6);
  const auto cs = shift(s, OffsetChoice::with(c));
  CHECK((cs.shifted.col(2) - (s.states.col(2) - c)).norm() == 0.0);
  CHECK_THROWS_WITH_AS(shift(s, OffsetChoice::with(Vector::Ones(5))),
                       doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("mean shift leaves zero row sums") {
  std::mt19937_64 rng(2);
  const auto s = random_set(rng, 10, 7);
  const auto out = shift(s, OffsetChoice::mean());
  CHECK(out.shifted.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("snapshot sets need two finite columns") {
  SnapshotSet one{Matrix::Ones(3, 1), {}, std::nullopt};
  CHECK_THROWS_AS(one.validate(), Error);
  SnapshotSet bad{Matrix::Ones(3, 2), {}, std::nullopt};
  bad.states(0, 0) = INFINITY;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("build_basis on diag(3, 1)") {
  SnapshotSet s{Matrix::Zero(2, 2), {}, std::nullopt};
  s.states(0, 0) = 3;
  s.states(1, 1) = 1;
  const auto b = build_basis(s, OffsetChoice::zero(), 1, 1);
  CHECK(std::abs(b.v(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(b.v(1, 0)) < 1e-15);
  CHECK(std::abs(b.v_bar(1, 0)) == doctest::Approx(1.0));
  CHECK(b.singular_values.size() == 2);
}

TEST_CASE("rank-one data is reconstructed exactly with one mode") {
  std::mt19937_64 rng(3);
  const Vector u = oracle::random_vector(rng, 7);
  const Vector w = oracle::random_vector(rng, 5);
  SnapshotSet s{u * w.transpose(), {}, std::nullopt};
  const auto b = build_basis(s, OffsetChoice::zero(), 1, 0);
  CHECK((b.v * b.v.transpose() * s.states - s.states).norm() < 1e-10);
}

TEST_CASE("POD basis reconstruction error equals tail energy") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_set(rng, 8, 6);
    const auto b = build_basis(s, OffsetChoice::zero(), 2, 2);
    check_orthonormality(b);
    const Matrix& q = s.states;
    const double err = (q - b.v * b.v.transpose() * q).squaredNorm();
    // independent route: eigenvalues of q q^T are the squared singular values
    const auto ev = oracle::jacobi_eigenvalues(q * q.transpose());
    double tail = 0.0;
    for (std::size_t j = 2; j < ev.size(); ++j) tail += std::max(ev[j], 0.0);
    CHECK(std::abs(err - tail) < 1e-8);
  }
}

TEST_CASE("orthonormality and sign convention hold for random bases") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = oracle::random_int(rng, 3, 25);
    const auto m = oracle::random_int(rng, 3, 25);
    const auto s = random_set(rng, n, m);
    const auto bound = std::min(n, m) - 1;  // mean shift removes one rank
    const auto r = oracle::random_int(rng, 1, bound);
    const auto mm = oracle::random_int(rng, 0, bound - r);
    const auto b = build_basis(s, OffsetChoice::mean(), r, mm);
    CHECK(b.r() == r);
    CHECK(b.m() == mm);
    check_orthonormality(b);
    for (Eigen::Index j = 0; j < b.r(); ++j) {
      Eigen::Index arg = 0;
      b.v.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(b.v(arg, j) >= 0.0);
    }
  }
}

TEST_CASE("rank-deficient requests are truncated with a warning") {
  std::vector<std::string> warnings;
  set_warning_handler([&](std::string_view w) { warnings.emplace_back(w); });
  std::mt19937_64 rng(6);
  SnapshotSet s{oracle::random_matrix(rng, 10, 2) * oracle::random_matrix(rng, 2, 6), {},
                std::nullopt};
  const auto b = build_basis(s, OffsetChoice::zero(), 2, 3);
  CHECK(b.r() == 2);
  CHECK(b.m() == 0);
  CHECK(warnings.size() == 1);
  SnapshotSet zero{Matrix::Zero(4, 3), {}, std::nullopt};
  CHECK_THROWS_WITH_AS(build_basis(zero, OffsetChoice::zero(), 1, 0),
                       doctest::Contains("RankDeficient"), Error);
  CHECK_THROWS_AS(build_basis(s, OffsetChoice::zero(), 4, 3), Error);
  set_warning_handler(nullptr);
}

TEST_CASE("affine encoder and decoder") {
  std::mt19937_64 rng(7);
  const auto s = random_set(rng, 12, 9);
  const auto b = build_basis(s, OffsetChoice::mean(), 3, 2);

  CHECK(encode(b, b.offset).isZero(0.0));
  Vector e1 = 2.0 * b.v.col(0) + b.offset;
  const Vector code = encode(b, e1);
  CHECK(code(0) == doctest::Approx(2.0));
  CHECK(code.tail(2).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(project_high(b, b.offset).isZero(0.0));
  const Vector high = project_high(b, b.offset + 3.0 * b.v_bar.col(1));
  CHECK(std::abs(high(0)) < 1e-12);
  CHECK(high(1) == doctest::Approx(3.0));

  CHECK(decode_affine(b, Vector::Zero(3)) == b.offset);
  CHECK((decode_affine(b, Vector::Unit(3, 0)) - (b.offset + b.v.col(0))).norm() < 1e-15);

  CHECK_THROWS_WITH_AS(encode(b, Vector::Ones(11)), doctest::Contains("ShapeMismatch"), Error);
  CHECK_THROWS_WITH_AS(decode_affine(b, Vector::Ones(2)), doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("projection properties on random states") {
  std::mt19937_64 rng(8);
  const auto s = random_set(rng, 15, 10);
  const auto b = build_basis(s, OffsetChoice::mean(), 3, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector q = oracle::random_vector(rng, 15, -3, 3);
    const Vector code = encode(b, q);
    CHECK((encode(b, decode_affine(b, code)) - code).norm() < 1e-10);
    CHECK((b.v.transpose() * (b.v_bar * project_high(b, q))).norm() < 1e-10);
    CHECK((q - decode_affine(b, code)).norm() <= (q - b.offset).norm() + 1e-12);
    const Vector z = oracle::random_vector(rng, 3);
    CHECK((encode(b, decode_affine(b, z)) - z).norm() < 1e-10);
  }
}

TEST_CASE("energy criterion") {
  Vector s(3);
  s << 3, 1, 0.1;
  CHECK(energy_criterion(s, 0.01) == 2);
  Vector one(3);
  one << 1, 0, 0;
  CHECK(energy_criterion(one, 1e-9) == 1);
  CHECK(energy_criterion(one, 0.5) == 1);
  CHECK_THROWS_WITH_AS(energy_criterion(s, -0.1), doctest::Contains("Unreachable"), Error);
  Vector increasing(2);
  increasing << 1, 2;
  CHECK_THROWS_AS(energy_criterion(increasing, 0.1), Error);
}

TEST_CASE("energy criterion returns the minimal count (linear scan oracle)") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> nu_dist(1e-4, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    Vector s = oracle::random_vector(rng, oracle::random_int(rng, 1, 20), 0.0, 1.0);
    std::sort(s.data(), s.data() + s.size(), std::greater<>());
    if (s(0) <= 0.0) continue;
    const double nu = nu_dist(rng);
    const auto n = energy_criterion(s, nu);
    auto violates = [&](Eigen::Index k) {
      double num = 0, den = 0;
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        den += s(j) * s(j);
        if (j < k) num += s(j) * s(j);
      }
      return 1.0 - num / den > nu;
    };
    CHECK_FALSE(violates(n));
    if (n > 1) CHECK(violates(n - 1));
  }
}
