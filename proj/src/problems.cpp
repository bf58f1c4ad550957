#include "kman/problems.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kman/errors.hpp"
#include "kman/parallel.hpp"

namespace kman {

double sigmoid_sharp(double x) {
  const double exponent = std::clamp(-100.0 * x, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(exponent));
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "logspace bounds must be positive");
  }
  auto exps = linspace(std::log10(lo), std::log10(hi), n);
  for (auto& e : exps) e = std::pow(10.0, e);
  return exps;
}

void SurfaceHeatingConfig::validate() const {
  constexpr double ten_deg = 10.0 * std::numbers::pi / 180.0;
  if (nz < 2 || ntheta < 2) throw Error(ErrorKind::InvalidConfig, "surface grids need >= 2 points");
  if (std::abs(mu1) > ten_deg * (1.0 + 1e-12)) {
    throw Error(ErrorKind::InvalidConfig, "mu1 must lie in [-10, 10] degrees");
  }
  if (mu2 < 0.4 - 1e-12 || mu2 > 0.8 + 1e-12) {
    throw Error(ErrorKind::InvalidConfig, "mu2 must lie in [0.4, 0.8]");
  }
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "delta must be positive");
}

Vector surface_heating_field(const SurfaceHeatingConfig& cfg) {
  cfg.validate();
  const auto z = linspace(0.0, 2.0, static_cast<std::size_t>(cfg.nz));
  const auto theta = linspace(0.0, 2.0 * std::numbers::pi, static_cast<std::size_t>(cfg.ntheta));
  const double sin_mu1 = std::sin(cfg.mu1);

  Vector s(cfg.nz * cfg.ntheta);
  for (Eigen::Index it = 0; it < cfg.ntheta; ++it) {
    const double sin_theta = std::sin(theta[static_cast<std::size_t>(it)]);
    const double modulation = 1.0 - 5.0 * sin_mu1 * sin_theta;
    const double front = cfg.mu2 * (1.0 + 2.0 * sin_mu1 * sin_theta);
    for (Eigen::Index iz = 0; iz < cfg.nz; ++iz) {
      const double zz = z[static_cast<std::size_t>(iz)];
      const double decay = 1.0 + 20.0 * zz;
      s(iz + cfg.nz * it) = 100.0 * modulation / (decay * decay) +
                            50.0 * sigmoid_sharp(zz - front) - 50.0 * sigmoid_sharp(zz - 1.2) +
                            75.0 * sigmoid_sharp(zz - 1.6) * modulation / (cfg.delta + zz) + 50.0;
    }
  }
  return s;
}

void SurfaceHeatingGrid::validate() const {
  if (nz < 2 || ntheta < 2) throw Error(ErrorKind::InvalidConfig, "surface grids need >= 2 points");
  if (n_mu1 < 1 || n_mu2 < 1 || n_mu1 * n_mu2 < 4) {
    throw Error(ErrorKind::InvalidConfig, "parameter grid needs at least 4 points");
  }
  if (mu1_range_deg[0] < -10.0 || mu1_range_deg[1] > 10.0 || mu1_range_deg[0] > mu1_range_deg[1]) {
    throw Error(ErrorKind::InvalidConfig, "mu1 range must lie within [-10, 10] degrees");
  }
  if (mu2_range[0] < 0.4 || mu2_range[1] > 0.8 || mu2_range[0] > mu2_range[1]) {
    throw Error(ErrorKind::InvalidConfig, "mu2 range must lie within [0.4, 0.8]");
  }
}

SurfaceHeatingData surface_heating_dataset(const SurfaceHeatingGrid& grid) {
  grid.validate();
  const auto mu1_deg = linspace(grid.mu1_range_deg[0], grid.mu1_range_deg[1],
                                static_cast<std::size_t>(grid.n_mu1));
  const auto mu2 = linspace(grid.mu2_range[0], grid.mu2_range[1], static_cast<std::size_t>(grid.n_mu2));
  const Eigen::Index total = grid.n_mu1 * grid.n_mu2;

  Matrix q0(grid.nz * grid.ntheta, total);
  std::vector<SnapshotLabel> labels(static_cast<std::size_t>(total));
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t col) {
    const std::size_t i1 = col / static_cast<std::size_t>(grid.n_mu2);
    const std::size_t i2 = col % static_cast<std::size_t>(grid.n_mu2);
    SurfaceHeatingConfig cfg{grid.nz, grid.ntheta, mu1_deg[i1] * std::numbers::pi / 180.0,
                             mu2[i2], grid.delta};
    q0.col(static_cast<Eigen::Index>(col)) = surface_heating_field(cfg);
    labels[col] = {{"mu1_deg", mu1_deg[i1]}, {"mu2", mu2[i2]}, {"column", static_cast<double>(col)}};
  });

  const double range = q0.maxCoeff() - q0.minCoeff();
  if (!(range > 0.0)) throw Error(ErrorKind::ZeroDenominator, "surface field is constant");
  const double scale = 1.0 / range;
  q0 *= scale;

  SurfaceHeatingData out;
  out.scale = scale;
  const Eigen::Index n_train = (total + 1) / 2;
  out.train.states.resize(q0.rows(), n_train);
  out.test.states.resize(q0.rows(), total - n_train);
  for (Eigen::Index col = 0; col < total; ++col) {
    auto& target = (col % 2 == 0) ? out.train : out.test;
    target.states.col(col / 2) = q0.col(col);
    target.labels.push_back(labels[static_cast<std::size_t>(col)]);
  }
  out.train.scaling = scale;
  out.test.scaling = scale;
  return out;
}

void AdvDiffConfig::validate() const {
  if (n_per_axis < 1) throw Error(ErrorKind::InvalidConfig, "need at least one interior point");
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidConfig, "alpha must be positive");
  if (beta[0] < 0.0 || beta[1] < 0.0) {
    throw Error(ErrorKind::InvalidConfig, "beta must be componentwise nonnegative (upwind scheme)");
  }
  if (gamma < 0.0) throw Error(ErrorKind::InvalidConfig, "gamma must be nonnegative");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidConfig, "dt must be positive");
  if (t_final < dt) throw Error(ErrorKind::InvalidConfig, "t_final must be >= dt");
}

Eigen::Index AdvDiffConfig::steps() const {
  return static_cast<Eigen::Index>(std::llround(t_final / dt));
}

AdvDiffSystem assemble_advdiff(const AdvDiffConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.n_per_axis;
  const double h = 1.0 / static_cast<double>(n + 1);
  const double diff = cfg.alpha / (h * h);
  const double adv_x = cfg.beta[0] / h;
  const double adv_y = cfg.beta[1] / h;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(5 * n * n));
  for (Eigen::Index iy = 0; iy < n; ++iy) {
    for (Eigen::Index ix = 0; ix < n; ++ix) {
      const Eigen::Index k = ix + n * iy;
      entries.emplace_back(k, k, -4.0 * diff - adv_x - adv_y - cfg.gamma);
      if (ix > 0) entries.emplace_back(k, k - 1, diff + adv_x);
      if (ix < n - 1) entries.emplace_back(k, k + 1, diff);
      if (iy > 0) entries.emplace_back(k, k - n, diff + adv_y);
      if (iy < n - 1) entries.emplace_back(k, k + n, diff);
    }
  }
  AdvDiffSystem sys;
  sys.a.resize(n * n, n * n);
  sys.a.setFromTriplets(entries.begin(), entries.end());
  sys.f = Vector::Constant(n * n, cfg.forcing);
  return sys;
}

SnapshotSet advdiff_simulate(const AdvDiffConfig& cfg) {
  const AdvDiffSystem sys = assemble_advdiff(cfg);
  const Eigen::Index dim = sys.f.size();
  const Eigen::Index steps = cfg.steps();

  Eigen::SparseMatrix<double> lhs(dim, dim);
  lhs.setIdentity();
  lhs -= cfg.dt * sys.a;
  lhs.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "implicit Euler matrix factorization failed");
  }

  SnapshotSet out;
  out.states.resize(dim, steps + 1);
  out.states.col(0).setZero();
  const Vector load = cfg.dt * sys.f;
  Vector q = Vector::Zero(dim);
  for (Eigen::Index s = 1; s <= steps; ++s) {
    // materialize the right-hand side: solving in place into q would alias it
    const Vector rhs = q + load;
    q = lu.solve(rhs);
    if (!q.allFinite() || q.norm() > 1e12) {
      throw Error(ErrorKind::SolverDiverged, "state norm exceeded 1e12 at step " + std::to_string(s));
    }
    out.states.col(s) = q;
  }
  for (Eigen::Index s = 0; s <= steps; ++s) {
    out.labels.push_back({{"alpha", cfg.alpha},
                          {"time_index", static_cast<double>(s)},
                          {"time", static_cast<double>(s) * cfg.dt}});
  }
  return out;
}

SnapshotSet advdiff_dataset(const std::vector<double>& alphas, const AdvDiffConfig& base) {
  if (alphas.empty()) throw Error(ErrorKind::InvalidConfig, "need at least one alpha");
  std::vector<SnapshotSet> runs(alphas.size());
  parallel_for(alphas.size(), [&](std::size_t k) {
    AdvDiffConfig cfg = base;
    cfg.alpha = alphas[k];
    runs[k] = advdiff_simulate(cfg);
  });

  SnapshotSet out;
  const Eigen::Index per = runs.front().count();
  out.states.resize(runs.front().dim(), per * static_cast<Eigen::Index>(runs.size()));
  for (std::size_t k = 0; k < runs.size(); ++k) {
    out.states.middleCols(static_cast<Eigen::Index>(k) * per, per) = runs[k].states;
    out.labels.insert(out.labels.end(), runs[k].labels.begin(), runs[k].labels.end());
  }
  return out;
}

}  // namespace kman
