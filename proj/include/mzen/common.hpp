#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mzen {

// Error taxonomy shared by the library and the CLI. The CLI maps kinds to
// exit codes: usage -> 2, data -> 3, numeric -> 4.
enum class ErrorKind { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::kUsage: return 2;
      case ErrorKind::kData: return 3;
      case ErrorKind::kNumeric: return 4;
    }
    return 1;
  }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& msg) { return Error(ErrorKind::kUsage, msg); }
inline Error data_error(const std::string& msg) { return Error(ErrorKind::kData, msg); }
inline Error numeric_error(const std::string& msg) { return Error(ErrorKind::kNumeric, msg); }

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 has a standardized sequence and the
// distributions below are implemented by hand, so streams are reproducible
// across platforms and library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Child stream that depends only on (seed, stream), not on how much of
  // this stream has been consumed.
  Rng fork(uint64_t stream) const;

  uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  int uniform_int(int n);                  // [0, n)
  double normal();                         // standard normal, Box-Muller
  double normal(double mean, double sigma);

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over raw bytes; used for freeze checks and artifact fingerprints.
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
uint64_t hash_doubles(std::span<const double> values, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace mzen
