#ifndef HIERG_COMMON_HPP_
#define HIERG_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hierg {

inline constexpr const char* kCodeVersion = "0.4.1";

// Errors. Each failure kind named by the operation contracts gets its own type
// so callers (CLI exit codes, HTTP status mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HIERG_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

HIERG_DEFINE_ERROR(GenerationFailed);
HIERG_DEFINE_ERROR(InvalidState);
HIERG_DEFINE_ERROR(InvalidSubgoal);
HIERG_DEFINE_ERROR(NoPath);
HIERG_DEFINE_ERROR(EmptyDataset);
HIERG_DEFINE_ERROR(EmptyVersionSpace);
HIERG_DEFINE_ERROR(RealizabilityViolated);
HIERG_DEFINE_ERROR(BufferEmpty);
HIERG_DEFINE_ERROR(DivisionByZero);
HIERG_DEFINE_ERROR(BoundViolated);
HIERG_DEFINE_ERROR(IncompatibleRuns);
HIERG_DEFINE_ERROR(ConfigError);
HIERG_DEFINE_ERROR(ParseError);

#undef HIERG_DEFINE_ERROR

// Seeded generator with platform-independent draws. The standard
// distributions are implementation-defined, which would break byte-identical
// outputs across toolchains, so only the raw engine output is consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int index(std::size_t n) { return static_cast<int>(below(n)); }

  // Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; derives independent stream seeds from (seed, tag).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a, used for config and table fingerprints.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

// Shortest text that round-trips integers exactly; other values use %.10g.
std::string fmt_num(double v);

}  // namespace hierg

#endif  // HIERG_COMMON_HPP_
