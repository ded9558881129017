#pragma once

#include <cstddef>
#include <string>

#include "mfsel/potential.hpp"

namespace mfsel {

/// Which running cost the players pay besides 1/2 |control|^2.
enum class RunningCost {
  /// 1/2 |m|^2 + f(m): the general linear-quadratic game.
  kFull,
  /// Nothing else (f must vanish): the constant-control family in which
  /// optimal controls do not depend on time.
  kControlOnly,
};

/// N(nu0, stddev^2 I) truncated at `truncation` standard deviations.
struct InitialLaw {
  double stddev = 1.0;
  double truncation = 6.0;
};

struct ModelSpec {
  std::string name;
  std::size_t dim = 1;
  Mat b;
  double sigma = 1.0;
  double T = 1.0;
  RunningCost running = RunningCost::kFull;
  PotentialPtr f;
  PotentialPtr g;
  Vec nu0;
  InitialLaw xi;

  /// Throws kInvalidParameter when members disagree on dimension, sigma
  /// is negative, T is not positive, or a control-only model carries f.
  void validate() const;
  /// validate() plus sigma > 0, needed by every stochastic solve.
  void validate_stochastic() const;

  bool has_drift() const { return b.cwiseAbs().maxCoeff() != 0.0; }
  bool is_even() const { return f->is_even() && g->is_even(); }
};

/// Builds a model with b = drift * I, zero f and nu0 = 0 unless overridden.
ModelSpec make_model(std::string name, PotentialPtr g, RunningCost running,
                     double sigma = 1.0, double T = 1.0, double drift = 0.0);

/// Running cost of the limit problem: [1/2 |m|^2] + f(m).
double running_cost(const ModelSpec& spec, const Vec& m);
Vec running_gradient(const ModelSpec& spec, const Vec& m);
/// Terminal cost 1/2 |m|^2 + g(m) and its gradient.
double terminal_cost(const ModelSpec& spec, const Vec& m);
Vec terminal_gradient(const ModelSpec& spec, const Vec& m);

/// F_N(m) = running cost + R_f(m) / N (zero for control-only models).
double cost_FN(const ModelSpec& spec, double n_players, const Vec& m);
/// (I + hess f / N)(m + grad f) in the full model, 0 otherwise.
Vec grad_FN(const ModelSpec& spec, double n_players, const Vec& m);
/// G_N(m) = 1/2 |m|^2 + g(m) + R_g(m) / N.
double cost_GN(const ModelSpec& spec, double n_players, const Vec& m);
/// (I + hess g / N)(m + grad g).
Vec grad_GN(const ModelSpec& spec, double n_players, const Vec& m);

}  // namespace mfsel
