#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scn {

inline constexpr const char* kVersion = "0.1.0";

/// Reserved pseudo-tokens. <unk> absorbs out-of-vocabulary words; <end> is
/// the end-of-scenario pseudo-candidate used by dynamic termination.
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kEndToken = "<end>";

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration: invalid flags, missing paths, incompatible dims.
/// The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Bad or insufficient data: parse failures, generation shortfalls,
/// supervision holes. The CLI maps this to exit code 3.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

/// A mathematically undefined result (zero-norm cosine, constant-vector
/// correlation). A flavour of data error.
class UndefinedValueError : public DataError {
 public:
  explicit UndefinedValueError(const std::string& msg) : DataError(msg) {}
};

// -- Deterministic hashing -------------------------------------------------

/// FNV-1a over bytes. Used instead of std::hash so that seeds and file
/// fingerprints are stable across platforms and standard libraries.
uint64_t fnv1a64(std::string_view bytes);

/// splitmix64 finalizer; decorrelates nearby integer seeds.
uint64_t splitmix64(uint64_t x);

/// Derive an independent stream seed from (base seed, stream index).
/// Each generated mixture gets its own seed so generation order and
/// parallelism cannot change the output.
uint64_t mix_seed(uint64_t base, uint64_t index);

/// FNV-1a over a whole file, as a 16-hex-digit string. Throws ConfigError
/// if the file cannot be opened.
std::string hash_file_hex(const std::string& path);

// -- Deterministic random numbers -------------------------------------------

/// mt19937_64 with hand-rolled distributions. The engine is fully specified
/// by the standard; the distributions in <random> are not, so uniform and
/// gaussian draws are implemented here to keep byte-identical reruns.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

  /// Uniform double in [0, 1).
  double real01();

  /// Standard normal via Box-Muller.
  double gaussian();

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices sampled without replacement from [0, n).
  std::vector<size_t> sample_indices(size_t n, size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// -- Small parallel helper ---------------------------------------------------

/// Run fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to pre-sized per-index slots; the loop imposes no ordering.
/// jobs <= 1 runs inline.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace scn
