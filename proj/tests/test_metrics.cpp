#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "doctest.h"
#include "kman/errors.hpp"
#include "kman/metrics.hpp"
#include "oracles.hpp"

using namespace kman;

namespace {

SnapshotSet snapshots(Matrix states) { return SnapshotSet{std::move(states), {}, std::nullopt}; }

TrainingConfig pod_config(Eigen::Index r, OffsetChoice offset = OffsetChoice::mean()) {
  TrainingConfig cfg;
  cfg.method = Method::pod;
  cfg.r = r;
  cfg.m = 0;
  cfg.offset = std::move(offset);
  return cfg;
}

Matrix permute_columns(const Matrix& x, const std::vector<Eigen::Index>& perm) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t j = 0; j < perm.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(perm[j]);
  return out;
}

}  // namespace

TEST_CASE("metric names") {
  for (auto kind : {MetricKind::rel_l2_trajectory, MetricKind::mean_rel_l2, MetricKind::rel_l1_max}) {
    CHECK(parse_metric(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_metric("linf"), Error);
}

TEST_CASE("metric examples") {
  std::mt19937_64 rng(1);
  const Matrix q = oracle::random_matrix(rng, 6, 5);
  CHECK(rel_l2_trajectory(q, q) == 0.0);
  CHECK(mean_rel_l2(q, q) == 0.0);
  CHECK(rel_l1_max(q, q) == 0.0);
  CHECK(rel_l2_trajectory(q, Matrix::Zero(6, 5)) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix one(3, 1);
  one << 1, -2, 2;
  CHECK(mean_rel_l2(one, 0.9 * one) == doctest::Approx(0.1).epsilon(1e-14));

  Matrix truth(4, 2);
  truth << 1, 4, 1, 0, 1, 0, 1, 0;  // max column l1 norm = 4
  Matrix rec = truth;
  rec(0, 1) -= 1.0;
  rec(1, 1) += 1.0;  // error column [1, -1, 0, 0]
  CHECK(rel_l1_max(truth, rec) == 0.5);
}

TEST_CASE("zero denominators") {
  Matrix q(3, 3);
  q << 1, 0, 2, 1, 0, 2, 1, 0, 2;
  CHECK_THROWS_WITH_AS(mean_rel_l2(q, q), doctest::Contains("column 1"), Error);
  CHECK_THROWS_WITH_AS(mean_rel_l2(q, q), doctest::Contains("ZeroDenominator"), Error);
  CHECK_NOTHROW(rel_l2_trajectory(q, q));
  CHECK_THROWS_WITH_AS(rel_l2_trajectory(Matrix::Zero(3, 2), Matrix::Zero(3, 2)),
                       doctest::Contains("ZeroDenominator"), Error);
  CHECK_THROWS_WITH_AS(rel_l1_max(Matrix::Zero(3, 2), Matrix::Zero(3, 2)),
                       doctest::Contains("ZeroDenominator"), Error);
  CHECK_THROWS_WITH_AS(rel_l1_max(q, Matrix::Zero(3, 2)), doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("pod relative error matches the Eckart-Young tail (Jacobi oracle)") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = oracle::random_int(rng, 4, 12);
    const Eigen::Index count = oracle::random_int(rng, 3, 10);
    const auto data = snapshots(oracle::random_matrix(rng, n, count));
    const Eigen::Index r = oracle::random_int(rng, 1, std::min(n, count) - 1);
    const auto pod = train(data, pod_config(r, OffsetChoice::zero()));
    const auto eig = oracle::jacobi_eigenvalues(data.states.transpose() * data.states);
    const double total = std::accumulate(eig.begin(), eig.end(), 0.0);
    const double tail = std::accumulate(eig.begin() + r, eig.end(), 0.0);
    CHECK(rel_l2_trajectory(data, pod) ==
          doctest::Approx(std::sqrt(std::max(tail, 0.0) / total)).epsilon(1e-10));
  }
}

TEST_CASE("per-snapshot lists are consistent with the reported value") {
  std::mt19937_64 rng(3);
  const Matrix q = oracle::random_matrix(rng, 9, 12);
  const Matrix rec = q + 0.1 * oracle::random_matrix(rng, 9, 12);
  const auto mean = evaluate(MetricKind::mean_rel_l2, q, rec);
  REQUIRE(mean.per_snapshot.size() == 12);
  const double avg = std::accumulate(mean.per_snapshot.begin(), mean.per_snapshot.end(), 0.0) / 12.0;
  CHECK(std::abs(mean.value - avg) <= 1e-14);
  CHECK(mean.value == mean_rel_l2(q, rec));

  const auto traj = evaluate(MetricKind::rel_l2_trajectory, q, rec);
  double sq = 0.0;
  for (double e : traj.per_snapshot) sq += e * e;
  CHECK(std::sqrt(sq) == doctest::Approx(traj.value).epsilon(1e-14));

  const auto l1 = evaluate(MetricKind::rel_l1_max, q, rec);
  CHECK(*std::max_element(l1.per_snapshot.begin(), l1.per_snapshot.end()) == l1.value);
}

TEST_CASE("metrics: nonnegativity, zero iff exact, lockstep permutation invariance") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = oracle::random_int(rng, 1, 10), count = oracle::random_int(rng, 1, 10);
    const Matrix q = oracle::random_matrix(rng, n, count, 0.1, 2.0);
    Matrix rec = q;
    const Eigen::Index bad = oracle::random_int(rng, 0, count - 1);
    rec(oracle::random_int(rng, 0, n - 1), bad) += 0.5;

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(count));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Matrix qp = permute_columns(q, perm), rp = permute_columns(rec, perm);

    for (auto kind : {MetricKind::rel_l2_trajectory, MetricKind::mean_rel_l2, MetricKind::rel_l1_max}) {
      const double v = evaluate(kind, q, rec).value;
      CHECK(v > 0.0);
      CHECK(std::isfinite(v));
      CHECK(evaluate(kind, q, q).value == 0.0);
      CHECK(evaluate(kind, qp, rp).value == doctest::Approx(v).epsilon(1e-14));
    }
  }
}

TEST_CASE("pod training error is nonincreasing in r") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = snapshots(oracle::random_matrix(rng, 15, 12));
    double prev = INFINITY;
    for (Eigen::Index r = 1; r <= 10; ++r) {
      const double e = rel_l2_trajectory(data, train(data, pod_config(r)));
      CHECK(e <= prev * (1 + 1e-12));
      prev = e;
    }
  }
}

TEST_CASE("manifold metric overloads check dimensions") {
  std::mt19937_64 rng(6);
  const auto data = snapshots(oracle::random_matrix(rng, 8, 6));
  const auto pod = train(data, pod_config(2));
  const auto other = snapshots(oracle::random_matrix(rng, 7, 6));
  CHECK_THROWS_WITH_AS(mean_rel_l2(other, pod), doctest::Contains("N=7"), Error);
  const auto report = evaluate(MetricKind::mean_rel_l2, data, pod);
  CHECK(report.value == mean_rel_l2(data, pod));
  CHECK(report.per_snapshot.size() == 6);
}

TEST_CASE("timed wrapper") {
  const auto t = timed([] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return 7;
  });
  CHECK(t.value == 7);
  CHECK(t.seconds >= 0.019);
  CHECK(t.seconds < 5.0);
}
