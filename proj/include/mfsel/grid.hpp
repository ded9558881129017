#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace mfsel {

/// Uniform time grid t0 = t_0 < t_1 < ... < t_steps = T.
class TimeGrid {
 public:
  TimeGrid(double t0, double T, std::size_t steps);

  /// Grid on [t0, T] with ceil((T - t0) * per_unit) steps (at least one).
  static TimeGrid with_density(double t0, double T, double steps_per_unit);

  double t0() const { return t0_; }
  double T() const { return T_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double dt() const { return (T_ - t0_) / static_cast<double>(steps_); }
  double at(std::size_t k) const;

 private:
  double t0_;
  double T_;
  std::size_t steps_;
};

struct Axis {
  double lower = -1.0;
  double upper = 1.0;
  std::size_t nodes = 3;

  double spacing() const {
    return (upper - lower) / static_cast<double>(nodes - 1);
  }
};

/// Tensor-product grid in one or two dimensions. Node coordinates of a
/// symmetric axis (lower == -upper, odd node count) are exact mirrors of
/// each other, so odd data stays odd to the last bit.
class SpaceGrid {
 public:
  explicit SpaceGrid(std::vector<Axis> axes);

  /// [-L, L]^dim with `nodes` nodes per axis.
  static SpaceGrid symmetric(std::size_t dim, double half_width,
                             std::size_t nodes);

  std::size_t dim() const { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_[k]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t node_count() const;
  double coord(std::size_t axis, std::size_t i) const {
    return coords_[axis][i];
  }
  const std::vector<double>& coords(std::size_t axis) const {
    return coords_[axis];
  }
  /// Every axis is [-L, L] with an odd node count.
  bool is_symmetric() const;
  /// Two identical symmetric axes: 90-degree rotations map nodes to nodes.
  bool is_square() const;

  /// Flat index of a multi-index; axis 0 varies slowest.
  std::size_t flat(std::size_t i0, std::size_t i1 = 0) const {
    return dim() == 1 ? i0 : i0 * axes_[1].nodes + i1;
  }

 private:
  std::vector<Axis> axes_;
  std::vector<std::vector<double>> coords_;
};

}  // namespace mfsel
