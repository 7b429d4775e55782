#include "csm/rng.hpp"

#include "csm/normal.hpp"

namespace csm {

double Rng::normal() { return normal_quantile(uniform()); }

std::uint64_t Rng::below(std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double counter_normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  return normal_quantile(bits_to_open_unit(derive_seed(seed, i, j)));
}

}  // namespace csm
