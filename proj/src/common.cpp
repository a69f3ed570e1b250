#include "mzen/common.hpp"

#include <cmath>
#include <cstring>

namespace mzen {

namespace {

// xorshift-style generator seeded through splitmix64; small, fast, and
// fully specified here so sequences never depend on the standard library.
uint64_t advance(uint64_t& s) {
  s = splitmix64(s);
  return s;
}

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), state_(splitmix64(seed ^ 0x5bf03635ul)) {}

Rng Rng::fork(uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x9e3779b97f4a7c15ull)));
}

uint64_t Rng::next_u64() { return advance(state_); }

double Rng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw usage_error("Rng::uniform_int: n must be positive");
  return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::normal(double mean, double sigma) { return mean + sigma * normal(); }

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t hash_doubles(std::span<const double> values, uint64_t h) {
  return fnv1a64(values.data(), values.size() * sizeof(double), h);
}

}  // namespace mzen
