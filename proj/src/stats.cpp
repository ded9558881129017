#include "mfsel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mfsel/error.hpp"

namespace mfsel {

DiscreteLaw DiscreteLaw::empirical(std::span<const double> sample) {
  if (sample.empty()) {
    throw Error(ErrorKind::kInvalidInput, "empirical law of an empty sample");
  }
  DiscreteLaw law;
  law.atoms.assign(sample.begin(), sample.end());
  std::sort(law.atoms.begin(), law.atoms.end());
  law.weights.assign(law.atoms.size(), 1.0 / static_cast<double>(law.atoms.size()));
  return law;
}

DiscreteLaw DiscreteLaw::symmetric_pair(double x) {
  const double a = std::abs(x);
  return DiscreteLaw{{-a, a}, {0.5, 0.5}};
}

double wasserstein1_1d(const DiscreteLaw& a, const DiscreteLaw& b) {
  if (a.atoms.empty() || b.atoms.empty()) {
    throw Error(ErrorKind::kInvalidInput, "wasserstein distance of an empty law");
  }
  if (a.atoms.size() != a.weights.size() || b.atoms.size() != b.weights.size()) {
    throw Error(ErrorKind::kInvalidInput, "atoms and weights differ in length");
  }
  // Sweep the merged support; between consecutive support points both CDFs
  // are constant.
  std::size_t i = 0;
  std::size_t j = 0;
  double fa = 0.0;
  double fb = 0.0;
  double prev = std::min(a.atoms.front(), b.atoms.front());
  double total = 0.0;
  while (i < a.atoms.size() || j < b.atoms.size()) {
    const double xa = i < a.atoms.size() ? a.atoms[i] : INFINITY;
    const double xb = j < b.atoms.size() ? b.atoms[j] : INFINITY;
    const double x = std::min(xa, xb);
    total += std::abs(fa - fb) * (x - prev);
    while (i < a.atoms.size() && a.atoms[i] == x) fa += a.weights[i++];
    while (j < b.atoms.size() && b.atoms[j] == x) fb += b.weights[j++];
    prev = x;
  }
  return total;
}

double wasserstein1_1d(std::span<const double> sample_a,
                       std::span<const double> sample_b) {
  return wasserstein1_1d(DiscreteLaw::empirical(sample_a),
                         DiscreteLaw::empirical(sample_b));
}

double wasserstein1_1d(std::span<const double> sample, const DiscreteLaw& law) {
  return wasserstein1_1d(DiscreteLaw::empirical(sample), law);
}

double kuiper_tail(double lambda) {
  if (lambda < 0.4) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double jl = static_cast<double>(j) * lambda;
    const double term = (4.0 * jl * jl - 1.0) * std::exp(-2.0 * jl * jl);
    sum += term;
    if (std::abs(term) < 1e-16 * std::max(1e-300, std::abs(sum))) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KuiperResult circular_uniformity(std::span<const double> angles) {
  constexpr std::size_t kMinSample = 30;
  if (angles.size() < kMinSample) {
    throw Error(ErrorKind::kInvalidInput,
                "kuiper test needs at least 30 angles, got " +
                    std::to_string(angles.size()));
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> u(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    double a = std::fmod(angles[i], two_pi);
    if (a < 0.0) a += two_pi;
    u[i] = a / two_pi;
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d_plus = 0.0;
  double d_minus = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double k = static_cast<double>(i);
    d_plus = std::max(d_plus, (k + 1.0) / n - u[i]);
    d_minus = std::max(d_minus, u[i] - k / n);
  }
  KuiperResult r;
  r.statistic = d_plus + d_minus;
  const double sn = std::sqrt(n);
  r.p_value = kuiper_tail((sn + 0.155 + 0.24 / sn) * r.statistic);
  return r;
}

MeanVar mean_variance(std::span<const double> x) {
  MeanVar mv;
  if (x.empty()) return mv;
  mv.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - mv.mean) * (v - mv.mean);
    mv.variance = ss / static_cast<double>(x.size() - 1);
  }
  return mv;
}

double median(std::vector<double> x) {
  if (x.empty()) throw Error(ErrorKind::kInvalidInput, "median of an empty sample");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double hi = x[mid];
  if (x.size() % 2 == 1) return hi;
  const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace mfsel
