#include "mfsel/rng.hpp"

#include <cmath>

namespace mfsel {

namespace {

std::seed_seq make_seed_seq(RngStream s) {
  return std::seed_seq{static_cast<std::uint32_t>(s.seed),
                       static_cast<std::uint32_t>(s.seed >> 32),
                       static_cast<std::uint32_t>(s.index),
                       static_cast<std::uint32_t>(s.index >> 32),
                       0x6d66u};
}

std::mt19937_64 make_engine(RngStream s) {
  auto seq = make_seed_seq(s);
  return std::mt19937_64(seq);
}

}  // namespace

GaussianSource::GaussianSource(RngStream stream) : engine_(make_engine(stream)) {}

std::vector<double> gaussian_paths(RngStream stream, std::size_t dim,
                                   std::size_t steps, double dt) {
  GaussianSource src(stream);
  const double scale = std::sqrt(dt);
  std::vector<double> out(dim * steps);
  for (auto& x : out) x = scale * src.next();
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mfsel
