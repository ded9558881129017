#pragma once

#include <string>
#include <vector>

#include "mfsel/model.hpp"

namespace mfsel {

struct ShootingOptions {
  double steps_per_unit = 1000.0;
  double tolerance = 1e-9;
  int max_iterations = 60;
  double fd_step = 1e-6;
  double dedup_tolerance = 1e-5;
  double tie_tolerance = 1e-7;
  /// Lattice points per axis of the default start grid.
  std::size_t lattice_points = 21;
};

enum class Classification { kMinimizer, kStationaryOnly };

std::string_view to_string(Classification c);

/// Solution of the Pontryagin system m' = b m - eta,
/// eta' = -(b^T eta + grad running cost), eta_T = m_T + grad g(m_T).
struct OCSolution {
  TimeGrid grid;
  std::vector<Vec> m;
  std::vector<Vec> eta;
  std::vector<Vec> beta;  ///< control, equal to -eta
  Vec eta0;
  double cost = 0.0;
  Classification classification = Classification::kStationaryOnly;
  double terminal_residual = 0.0;
};

struct StationarySet {
  std::vector<OCSolution> solutions;  ///< sorted by cost
  double min_cost = 0.0;
  std::size_t minimizer_count = 0;
};

/// Newton shooting on eta(t0). Throws kNoConvergence when the damped
/// iteration stagnates.
OCSolution shoot(const ModelSpec& spec, double t0, const Vec& nu0,
                 const Vec& eta0_guess, const ShootingOptions& opts = {});

/// Cost of a control path along the solution's grid (Simpson when the
/// number of steps is even, trapezoid otherwise).
double oc_cost(const ModelSpec& spec, const TimeGrid& grid,
               const std::vector<Vec>& m, const std::vector<Vec>& beta);

/// A-priori size of optimal controls, used for start grids and scans.
double control_scale(const ModelSpec& spec, const Vec& nu0);

/// lattice_points^d guesses covering [-W, W]^d, W = control_scale.
std::vector<Vec> default_start_grid(const ModelSpec& spec, const Vec& nu0,
                                    std::size_t lattice_points = 21);

StationarySet enumerate_stationary(const ModelSpec& spec, double t0,
                                   const Vec& nu0,
                                   const std::vector<Vec>& starts,
                                   const ShootingOptions& opts = {});
StationarySet enumerate_stationary(const ModelSpec& spec, double t0,
                                   const Vec& nu0,
                                   const ShootingOptions& opts = {});

/// Minimum of a discretised control problem found by projected gradient
/// descent from random starts; independent of the shooting pipeline.
struct DescentResult {
  double value = 0.0;
  std::vector<Vec> control;  ///< piecewise constant on `steps` cells
  std::vector<double> start_values;
  double gradient_norm = 0.0;
};

struct DescentOptions {
  std::size_t steps = 200;
  std::size_t starts = 5;
  std::uint64_t seed = 0x5eedf00dULL;
  int max_iterations = 4000;
  double gradient_tolerance = 1e-9;
};

DescentResult descend_control(const ModelSpec& spec, double t0, const Vec& nu0,
                              const DescentOptions& opts = {});

/// Cost of a piecewise-constant control on a uniform grid of [t0, T]
/// (exact propagation, trapezoid running cost) and its L2 gradient.
double discrete_control_cost(const ModelSpec& spec, double t0, const Vec& nu0,
                             const std::vector<Vec>& control,
                             std::vector<Vec>* l2_gradient = nullptr);

struct ValueResult {
  double value = 0.0;
  double descent_value = 0.0;
  bool cross_checked = false;
  bool consistent = true;
  std::string warning;
};

/// v(t0, nu0): minimum cost over the stationary set, optionally
/// cross-checked by descend_control (relative agreement 1e-4).
ValueResult value_function(const ModelSpec& spec, double t0, const Vec& nu0,
                           bool cross_check = true,
                           const ShootingOptions& opts = {});

struct AxisQuotients {
  double left = 0.0;
  double right = 0.0;
  double gap = 0.0;
  double threshold = 0.0;
};

struct DifferentiabilityProbe {
  std::vector<AxisQuotients> axes;
  bool differentiable = true;
  /// The gap threshold is a heuristic (10 h scaled by a local curvature
  /// estimate), not a certified semiconcavity bound.
  std::string note;
};

DifferentiabilityProbe differentiability_probe(const ModelSpec& spec, double t0,
                                               const Vec& nu0, double h = 1e-3,
                                               const ShootingOptions& opts = {});

/// Central finite-difference gradient of v(t0, .) at nu0.
Vec value_gradient_fd(const ModelSpec& spec, double t0, const Vec& nu0,
                      double h = 1e-4, const ShootingOptions& opts = {});

/// U(t0, nu0, a) = (T - t0)/2 |a|^2 + G(nu0 + (T - t0) a), G = 1/2|y|^2 + g.
/// Only for b = 0 control-only models; throws kInvalidReduction otherwise.
double static_U(const ModelSpec& spec, double t0, const Vec& nu0, const Vec& a);

struct StaticMinimum {
  std::vector<Vec> minimizers;
  double value = 0.0;
  /// For radial g and nu0 = 0 every rotation of a minimizer is a
  /// minimizer; `sphere_radius` is then |a|.
  bool on_sphere = false;
  double sphere_radius = 0.0;
};

StaticMinimum minimize_static_U(const ModelSpec& spec, double t0, const Vec& nu0,
                                double tie_tolerance = 1e-7);

}  // namespace mfsel
