#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfsel/field.hpp"

namespace mfsel {

struct EnsembleOptions {
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  /// Path p draws from stream (seed, stream_base + p).
  std::uint64_t stream_base = 0;
  std::size_t threads = 1;
  /// Euler steps per stored field step.
  std::size_t substeps = 1;
  /// Turn the Brownian forcing off (deterministic transport of m0).
  bool noise = true;
  /// Start every path at nu0 instead of the empirical mean of N draws.
  /// Always on for common-noise fields.
  bool deterministic_initial = false;
  /// Rotate every standard normal draw (initial and increments) by R.
  std::optional<Mat> input_rotation;
  /// Simulate with eta = 0 (the uncontrolled reference).
  bool zero_control = false;
  /// Keep whole trajectories (otherwise only t0 and T are stored).
  bool keep_paths = false;
  /// Fraction of exited paths above which a warning is attached.
  double exit_warning = 0.01;
};

/// M independent copies of the reduced state
///   dm = (b m - eta) dt + s dB,  eta = u(t, m),
/// with s = sigma / sqrt(N) for an N-player field and s = eps for a
/// common-noise field.
struct PathEnsemble {
  TimeGrid grid;
  std::size_t dim = 1;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  std::vector<double> initial;   ///< paths x dim
  std::vector<double> terminal;  ///< paths x dim
  std::vector<double> eta0;      ///< paths x dim
  /// Only with keep_paths: paths x (steps + 1) x dim, on the Euler grid.
  std::vector<double> m;
  std::vector<double> eta;
  /// Realised cost of each path: Riemann sum of 1/2|eta|^2 + F_N plus G_N.
  std::vector<double> cost;
  std::size_t exits = 0;
  double exit_fraction = 0.0;
  std::string warning;

  /// Component c of the terminal state of every path.
  std::vector<double> terminal_component(std::size_t c = 0) const;
};

PathEnsemble simulate_ensemble(const ModelSpec& spec, const DecouplingField& field,
                               const EnsembleOptions& opts = {});

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::vector<double> per_path;
};

/// Monte Carlo estimate of the N-player cost of the feedback in `field`.
CostEstimate eval_cost_OCN(const ModelSpec& spec, const DecouplingField& field,
                           const EnsembleOptions& opts = {});
CostEstimate summarize_cost(const PathEnsemble& ensemble);

/// "path,t,m[,m2],eta[,eta2]" for kept trajectories, or
/// "path,m0[..],mT[..],eta0[..],cost" when only end points were stored.
void write_ensemble_csv(const PathEnsemble& ensemble, std::ostream& os,
                        std::size_t time_stride = 1);

}  // namespace mfsel
