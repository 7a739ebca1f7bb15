#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ddc {

// Thrown when an expression cannot be assigned a type. `where` holds the
// rendering of the offending subterm.
struct TypeError : std::runtime_error {
  std::string where;
  TypeError(const std::string& msg, std::string where_ = "")
      : std::runtime_error(where_.empty() ? msg : msg + " at " + where_),
        where(std::move(where_)) {}
};

// Thrown by the evaluator. StepLimit and DomainError both mean "this program
// does not solve the task"; callers that only need that fact catch the base.
struct EvalError : std::runtime_error {
  enum class Kind { DomainError, StepLimit };
  Kind kind;
  EvalError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Raised by install_chunk when the new definition is alpha-equivalent (after
// inlining) to a chunk already in the library.
struct DuplicateChunkError : std::runtime_error {
  std::string existing_name;
  explicit DuplicateChunkError(const std::string& existing)
      : std::runtime_error("duplicate chunk definition, already installed as " + existing),
        existing_name(existing) {}
};

// Raised by caching_benefit on a probability-1 program with n > 0 uses.
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64; used to derive independent seeds for the per-cycle RNG streams
// so that adding a stream never perturbs the others.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ (0x9e3779b97f4a7c15ull + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Uniform double in [0,1) built from the top 53 bits of the generator output.
// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ddc
