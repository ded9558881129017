#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mfsel {

/// Address of an independent random stream. Two equal addresses always
/// produce the same sequence, whatever thread or order they are used in.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/// Gaussian source bound to one RngStream.
class GaussianSource {
 public:
  explicit GaussianSource(RngStream stream);

  double next() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// `steps` x `dim` i.i.d. N(0, dt) increments, row-major by step.
std::vector<double> gaussian_paths(RngStream stream, std::size_t dim,
                                   std::size_t steps, double dt);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace mfsel
