#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mfsel/grid.hpp"

namespace mfsel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Direction { kForward, kBackward };

using VectorField = std::function<Vec(double, const Vec&)>;

/// Classical RK4 on a uniform grid. `x0` is the state at grid.t0() for
/// forward integration and at grid.T() for backward integration; the
/// returned vector is indexed by grid node either way.
std::vector<Vec> integrate_ode(const VectorField& rhs, const Vec& x0,
                               const TimeGrid& grid, Direction direction);

/// Symmetric solution of phi' = phi^2 - phi b - b^T phi - q_run with
/// phi(T) = q_term, integrated backward on `grid` (indexed by node).
std::vector<Mat> riccati_backward(const Mat& b, const Mat& q_run,
                                  const Mat& q_term, const TimeGrid& grid);

/// Scalar ingredients of the piecewise-linear terminal coupling example:
/// eta' = eta^2 - 2 b eta - 1 with eta(T) = 1, the weight
/// w_t = exp(int_t^T (eta_s - b) ds), and r_delta = int_delta^T w^{-2}.
struct DelarueCurves {
  TimeGrid grid;
  std::vector<double> eta;
  std::vector<double> w;
  /// int_{t0}^{t_k} w_s^{-2} ds at each node.
  std::vector<double> inv_w2_integral;
  double r_delta = 0.0;

  /// m^+_t = w_t int_{t0}^t w_s^{-2} ds at node k.
  double upper_trajectory(std::size_t k) const {
    return w[k] * inv_w2_integral[k];
  }
};

DelarueCurves delarue_riccati(double b, const TimeGrid& grid, double delta);

}  // namespace mfsel
