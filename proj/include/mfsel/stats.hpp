#pragma once

#include <span>
#include <vector>

namespace mfsel {

/// Finitely supported law on the real line.
struct DiscreteLaw {
  std::vector<double> atoms;
  std::vector<double> weights;

  static DiscreteLaw empirical(std::span<const double> sample);
  /// 1/2 delta_{-x} + 1/2 delta_{x}.
  static DiscreteLaw symmetric_pair(double x);
};

/// Wasserstein-1 distance: integral of |F_a - F_b| over the line, which
/// equals the L1 distance between the quantile functions.
double wasserstein1_1d(std::span<const double> sample_a,
                       std::span<const double> sample_b);
double wasserstein1_1d(std::span<const double> sample, const DiscreteLaw& law);
double wasserstein1_1d(const DiscreteLaw& a, const DiscreteLaw& b);

struct KuiperResult {
  double statistic = 0.0;  ///< V = D+ + D-
  double p_value = 1.0;
};

/// Kuiper's test of angles in [0, 2pi) against the uniform law on the
/// circle. Needs at least 30 angles.
KuiperResult circular_uniformity(std::span<const double> angles);

/// Asymptotic tail probability of Kuiper's statistic, Q(lambda).
double kuiper_tail(double lambda);

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
};
MeanVar mean_variance(std::span<const double> x);

double median(std::vector<double> x);

}  // namespace mfsel
