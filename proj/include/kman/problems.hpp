#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <numbers>
#include <vector>

#include "kman/numerics.hpp"
#include "kman/pod.hpp"

namespace kman {

/// 1 / (1 + exp(-100 x)), with the exponent clamped so it never overflows.
double sigmoid_sharp(double x);

// --- analytic surface-heating field -------------------------------------------------------

struct SurfaceHeatingConfig {
  Eigen::Index nz = 100;
  Eigen::Index ntheta = 100;
  double mu1 = 0.0;  // angle of attack, radians, within [-10 deg, 10 deg]
  double mu2 = 0.4;  // transition location, within [0.4, 0.8]
  double delta = 1e-6;

  void validate() const;
};

/// s(z, theta; mu) on the endpoint-inclusive grid z in [0, 2], theta in [0, 2 pi].
/// Entry (iz, itheta) lives at index iz + nz * itheta (z fastest). The fourth term's
/// coordinate is the axial z.
Vector surface_heating_field(const SurfaceHeatingConfig& cfg);

struct SurfaceHeatingGrid {
  Eigen::Index nz = 100;
  Eigen::Index ntheta = 100;
  Eigen::Index n_mu1 = 50;
  Eigen::Index n_mu2 = 50;
  std::array<double, 2> mu1_range_deg{-10.0, 10.0};
  std::array<double, 2> mu2_range{0.4, 0.8};
  double delta = 1e-6;

  void validate() const;
};

struct SurfaceHeatingData {
  SnapshotSet train;  // even columns (0-based) of the scaled matrix
  SnapshotSet test;   // odd columns
  double scale = 1.0; // 1 / (max - min) over the unscaled matrix
};

/// Columns ordered with mu2 fastest, mu1 slower; scaled by the global range, then split.
SurfaceHeatingData surface_heating_dataset(const SurfaceHeatingGrid& grid);

// --- 2D advection-diffusion-reaction ------------------------------------------------------

struct AdvDiffConfig {
  Eigen::Index n_per_axis = 64;
  double alpha = 1e-3;
  std::array<double, 2> beta{0.5 * 0.5, 0.5 * 0.8660254037844386};
  double gamma = 1.0;
  double forcing = 1.0;
  double t_final = 5.0;
  double dt = 0.05;

  void validate() const;
  /// Number of implicit steps, round(t_final / dt).
  Eigen::Index steps() const;
};

struct AdvDiffSystem {
  Eigen::SparseMatrix<double> a;  // dq/dt = A q + F
  Vector f;
};

/// Interior unknowns on the unit square with spacing h = 1 / (n + 1), unknown (ix, iy) at
/// index ix + n * iy. Second derivatives use centered differences; first derivatives use
/// backward (upwind for beta >= 0) differences. Homogeneous Dirichlet boundary.
AdvDiffSystem assemble_advdiff(const AdvDiffConfig& cfg);

/// Implicit Euler from q(0) = 0; one snapshot per step including t = 0.
/// Throws SolverDiverged if a state norm exceeds 1e12.
SnapshotSet advdiff_simulate(const AdvDiffConfig& cfg);

/// Concatenates simulations for each alpha in order; labels carry alpha and time index.
SnapshotSet advdiff_dataset(const std::vector<double>& alphas, const AdvDiffConfig& base);

/// n logarithmically spaced values from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, std::size_t n);
/// n equispaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace kman
