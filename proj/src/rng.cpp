#include "pde_embed/rng.hpp"

#include <cmath>

namespace pde_embed {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
} // namespace

uint64_t Rng::derive(uint64_t seed, std::string_view tag) {
  uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return splitmix64(seed ^ h);
}

} // namespace pde_embed
