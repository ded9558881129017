#include "mfsel/grid.hpp"

#include <cmath>
#include <string>

#include "mfsel/error.hpp"

namespace mfsel {

TimeGrid::TimeGrid(double t0, double T, std::size_t steps)
    : t0_(t0), T_(T), steps_(steps) {
  if (!(t0 < T) || !std::isfinite(t0) || !std::isfinite(T)) {
    throw Error(ErrorKind::kInvalidParameter,
                "time grid needs t0 < T (got t0=" + std::to_string(t0) +
                    ", T=" + std::to_string(T) + ")");
  }
  if (steps < 1) {
    throw Error(ErrorKind::kInvalidParameter, "time grid needs steps >= 1");
  }
}

TimeGrid TimeGrid::with_density(double t0, double T, double steps_per_unit) {
  if (!(steps_per_unit > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "steps per unit time must be > 0");
  }
  const double raw = std::ceil((T - t0) * steps_per_unit - 1e-9);
  return TimeGrid(t0, T, static_cast<std::size_t>(std::max(1.0, raw)));
}

double TimeGrid::at(std::size_t k) const {
  if (k == steps_) return T_;
  return t0_ + (T_ - t0_) * (static_cast<double>(k) / static_cast<double>(steps_));
}

SpaceGrid::SpaceGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) {
    throw Error(ErrorKind::kInvalidParameter,
                "space grids support dimension 1 or 2 (got " +
                    std::to_string(axes_.size()) + ")");
  }
  coords_.resize(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const Axis& a = axes_[k];
    if (!(a.lower < a.upper) || a.nodes < 3) {
      throw Error(ErrorKind::kInvalidParameter,
                  "axis " + std::to_string(k) +
                      " needs lower < upper and at least 3 nodes");
    }
    auto& c = coords_[k];
    c.resize(a.nodes);
    const double n1 = static_cast<double>(a.nodes - 1);
    for (std::size_t i = 0; i < a.nodes; ++i) {
      const double s = static_cast<double>(i) / n1;
      c[i] = a.lower * (1.0 - s) + a.upper * s;
    }
    // Mirror nodes exactly on symmetric axes and pin the centre to zero.
    if (a.lower == -a.upper && a.nodes % 2 == 1) {
      const std::size_t mid = a.nodes / 2;
      c[mid] = 0.0;
      for (std::size_t i = 0; i < mid; ++i) c[i] = -c[a.nodes - 1 - i];
    }
  }
}

SpaceGrid SpaceGrid::symmetric(std::size_t dim, double half_width,
                               std::size_t nodes) {
  if (!(half_width > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "half width must be positive");
  }
  if (nodes % 2 == 0) {
    throw Error(ErrorKind::kInvalidParameter,
                "symmetric grids need an odd node count so that 0 is a node");
  }
  return SpaceGrid(std::vector<Axis>(dim, Axis{-half_width, half_width, nodes}));
}

std::size_t SpaceGrid::node_count() const {
  std::size_t n = 1;
  for (const auto& a : axes_) n *= a.nodes;
  return n;
}

bool SpaceGrid::is_symmetric() const {
  for (const auto& a : axes_) {
    if (a.lower != -a.upper || a.nodes % 2 == 0) return false;
  }
  return true;
}

bool SpaceGrid::is_square() const {
  return dim() == 2 && is_symmetric() && axes_[0].nodes == axes_[1].nodes &&
         axes_[0].upper == axes_[1].upper;
}

}  // namespace mfsel
