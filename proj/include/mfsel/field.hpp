#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfsel/grid.hpp"
#include "mfsel/model.hpp"

namespace mfsel {

enum class FieldKind : std::uint8_t {
  /// u^N for the empirical mean of N players (1/N reminder terms).
  kNPlayer = 0,
  /// u^eps for the common-noise problem (no reminder terms).
  kCommonNoise = 1,
};

/// Decoupling field u(t, m) sampled on space x time nodes. Values are
/// stored time-major, node-major, component fastest.
class DecouplingField {
 public:
  DecouplingField(SpaceGrid space, TimeGrid time, FieldKind kind,
                  double parameter, std::string model_name);

  const SpaceGrid& space() const { return space_; }
  const TimeGrid& time() const { return time_; }
  FieldKind kind() const { return kind_; }
  /// N for kNPlayer, eps for kCommonNoise.
  double parameter() const { return parameter_; }
  const std::string& model_name() const { return model_name_; }
  std::size_t dim() const { return space_.dim(); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* level(std::size_t k) { return values_.data() + k * level_size(); }
  const double* level(std::size_t k) const {
    return values_.data() + k * level_size();
  }
  std::size_t level_size() const { return space_.node_count() * dim(); }

  /// Value at time level k and node multi-index (i0, i1), component c.
  double node_value(std::size_t k, std::size_t i0, std::size_t i1,
                    std::size_t c) const {
    return level(k)[space_.flat(i0, i1) * dim() + c];
  }

  /// Multilinear in space (points outside the box are clamped to it),
  /// linear in time. `m` and `out` hold dim() entries.
  void interpolate(double t, const double* m, double* out) const;
  Vec operator()(double t, const Vec& m) const;

 private:
  SpaceGrid space_;
  TimeGrid time_;
  FieldKind kind_;
  double parameter_;
  std::string model_name_;
  std::vector<double> values_;
};

enum class Transport {
  /// Centered transport plus numerical viscosity |v| dx / 2 on every axis,
  /// |v| the Euclidean speed: per-axis upwinding in 1D, free of axis bias
  /// in 2D.
  kIsotropic,
  /// First-order upwinding by the sign of each component of v.
  kAxisUpwind,
};

struct FieldSolverOptions {
  /// Explicit substeps per stored time step; 0 picks the smallest count
  /// satisfying the stability bounds (with `safety` margin).
  std::size_t substeps = 0;
  double safety = 0.8;
  /// Drop the 1/N reminder terms while keeping the 1/N diffusion.
  bool zero_reminders = false;
  std::size_t threads = 1;
  Transport transport = Transport::kIsotropic;
};

struct FieldDiagnostics {
  std::size_t substeps = 0;
  double diffusion_ratio = 0.0;  ///< max over axes of D dt / dx^2
  double transport_ratio = 0.0;  ///< max over axes of |bm - u| dt / dx
};

/// Backward explicit finite differences for
///   -d_t u - D Lap u - grad u (b m - u) - b^T u = S(m),  u(T) = Psi(m)
/// with D = sigma^2 / (2N), S = grad F_N, Psi = grad G_N. N = +inf gives
/// the noiseless limit field (D = 0, no reminders). Centered second
/// differences, upwind-type transport in v = b m - u (see Transport),
/// linear extrapolation at the boundary, SSP-RK2 in time.
DecouplingField solve_field_N(const ModelSpec& spec, double n_players,
                              const SpaceGrid& grid, const TimeGrid& tgrid,
                              const FieldSolverOptions& opts = {},
                              FieldDiagnostics* diag = nullptr);

/// Same scheme with D = eps^2 / 2, S = m + grad f (or 0), Psi = m + grad g.
DecouplingField solve_field_eps(const ModelSpec& spec, double eps,
                                const SpaceGrid& grid, const TimeGrid& tgrid,
                                const FieldSolverOptions& opts = {},
                                FieldDiagnostics* diag = nullptr);

/// Stability limits of the explicit scheme on `grid` for diffusion D and
/// transport speed bound `speed`, per stored step of length dt.
std::size_t required_substeps(const SpaceGrid& grid, double diffusion,
                              double speed, double dt, double safety);

/// [-L, L]^d with L = 2 (|nu0| + T (sup|grad g| + sup|grad f| + 1)) e^{|b| T}.
/// Throws kConfig when a gradient is unbounded (quadratic data); pass an
/// explicit half width then.
double default_half_width(const ModelSpec& spec);

/// Closed-form field u(t, m) = P_t m + r_t for quadratic f and g.
struct RiccatiFieldOracle {
  TimeGrid grid;
  std::vector<Mat> P;
  std::vector<Vec> r;

  Vec at_node(std::size_t k, const Vec& m) const { return P[k] * m + r[k]; }
  Vec operator()(double t, const Vec& m) const;
};

/// n_players = +inf (or kind kCommonNoise) drops the reminder terms.
RiccatiFieldOracle riccati_field_oracle(const ModelSpec& spec, double n_players,
                                        const TimeGrid& grid);

// Binary layout (little endian):
//   char[8] "MFSELFLD", u32 version = 1, u32 dim,
//   per axis: f64 lower, f64 upper, u64 nodes,
//   f64 t0, f64 T, u64 steps, u8 kind, f64 parameter,
//   u32 name length, name bytes,
//   payload: (steps + 1) * nodes * dim f64, time-major, node-major.
void write_field_binary(const DecouplingField& field, std::ostream& os);
DecouplingField read_field_binary(std::istream& is);
void save_field(const DecouplingField& field, const std::string& path);
DecouplingField load_field(const std::string& path);

/// CSV slice "t,m,u" (1D) or "t,m1,m2,u1,u2" along the line m2 = 0 (2D)
/// at every `time_stride`-th stored level.
void write_field_slice_csv(const DecouplingField& field, std::ostream& os,
                           std::size_t time_stride = 1);

}  // namespace mfsel
