#include "mfsel/ode.hpp"

#include <cmath>
#include <string>

#include "mfsel/error.hpp"

namespace mfsel {

namespace {

bool all_finite(const Vec& x) { return x.allFinite(); }

}  // namespace

std::vector<Vec> integrate_ode(const VectorField& rhs, const Vec& x0,
                               const TimeGrid& grid, Direction direction) {
  const std::size_t n = grid.size();
  std::vector<Vec> out(n);
  const bool forward = direction == Direction::kForward;
  const double h = forward ? grid.dt() : -grid.dt();
  std::size_t k = forward ? 0 : n - 1;
  out[k] = x0;
  if (!all_finite(x0)) {
    throw Error(ErrorKind::kIntegrationDiverged,
                "non-finite initial state at t=" + std::to_string(grid.at(k)));
  }
  for (std::size_t step = 0; step + 1 < n; ++step) {
    const std::size_t next = forward ? k + 1 : k - 1;
    const double t = grid.at(k);
    const Vec& x = out[k];
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, x + h * k3);
    out[next] = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!all_finite(out[next])) {
      throw Error(ErrorKind::kIntegrationDiverged,
                  "state blew up at t=" + std::to_string(grid.at(next)));
    }
    k = next;
  }
  return out;
}

std::vector<Mat> riccati_backward(const Mat& b, const Mat& q_run,
                                  const Mat& q_term, const TimeGrid& grid) {
  const Eigen::Index d = b.rows();
  if (b.cols() != d || q_run.rows() != d || q_run.cols() != d ||
      q_term.rows() != d || q_term.cols() != d) {
    throw Error(ErrorKind::kInvalidInput, "riccati data must be square of equal size");
  }
  if ((q_run - q_run.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (q_term - q_term.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::kInvalidInput, "riccati weights must be symmetric");
  }
  auto rhs = [&](const Mat& phi) -> Mat {
    return phi * phi - phi * b - b.transpose() * phi - q_run;
  };
  const std::size_t n = grid.size();
  std::vector<Mat> out(n);
  out[n - 1] = q_term;
  const double h = -grid.dt();
  constexpr double kEscape = 1e12;
  for (std::size_t k = n - 1; k > 0; --k) {
    const Mat& p = out[k];
    const Mat k1 = rhs(p);
    const Mat k2 = rhs(p + 0.5 * h * k1);
    const Mat k3 = rhs(p + 0.5 * h * k2);
    const Mat k4 = rhs(p + h * k3);
    Mat next = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kEscape) {
      throw Error(ErrorKind::kRiccatiEscape,
                  "riccati solution escaped at t=" + std::to_string(grid.at(k - 1)));
    }
    out[k - 1] = std::move(next);
  }
  return out;
}

DelarueCurves delarue_riccati(double b, const TimeGrid& grid, double delta) {
  if (!(delta > grid.t0() && delta < grid.T())) {
    throw Error(ErrorKind::kInvalidParameter,
                "delta must lie in (t0, T), got " + std::to_string(delta));
  }
  const Mat bm = Mat::Constant(1, 1, b);
  const auto phi = riccati_backward(bm, Mat::Identity(1, 1), Mat::Identity(1, 1), grid);
  const std::size_t n = grid.size();
  const double h = grid.dt();

  DelarueCurves c{grid, {}, {}, {}, 0.0};
  c.eta.resize(n);
  for (std::size_t k = 0; k < n; ++k) c.eta[k] = phi[k](0, 0);

  // log w_t = int_t^T (eta - b), trapezoid from the terminal node down.
  c.w.assign(n, 1.0);
  double log_w = 0.0;
  for (std::size_t k = n - 1; k > 0; --k) {
    log_w += 0.5 * h * ((c.eta[k] - b) + (c.eta[k - 1] - b));
    c.w[k - 1] = std::exp(log_w);
  }

  c.inv_w2_integral.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double a = 1.0 / (c.w[k - 1] * c.w[k - 1]);
    const double z = 1.0 / (c.w[k] * c.w[k]);
    c.inv_w2_integral[k] = c.inv_w2_integral[k - 1] + 0.5 * h * (a + z);
  }

  // r_delta = I(T) - I(delta); I(delta) by linear interpolation in its cell,
  // consistent with the trapezoid rule on the grid.
  const double pos = (delta - grid.t0()) / h;
  const auto cell = std::min(static_cast<std::size_t>(pos), n - 2);
  const double frac = pos - static_cast<double>(cell);
  const double a = 1.0 / (c.w[cell] * c.w[cell]);
  const double z = 1.0 / (c.w[cell + 1] * c.w[cell + 1]);
  const double at_delta = a + frac * (z - a);
  const double partial = 0.5 * frac * h * (a + at_delta);
  c.r_delta = c.inv_w2_integral[n - 1] - (c.inv_w2_integral[cell] + partial);
  return c;
}

}  // namespace mfsel
