#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace finbench::rng {

// Recorded in every MixPlan so a reader can tell which permutation routine
// produced the stream.
inline constexpr std::string_view kShuffleAlgorithmId =
    "fisher-yates/mt19937_64/rejection-bounded";

// FNV-1a over the bytes; stable across platforms and runs.
uint64_t stable_hash(std::string_view bytes);

uint64_t splitmix64(uint64_t x);

// Folds labelled components into a seed. Order of parts matters.
uint64_t derive_seed(uint64_t seed, std::string_view part);

template <class... Parts>
uint64_t derive_seed(uint64_t seed, std::string_view first, Parts&&... rest) {
  return derive_seed(derive_seed(seed, first), std::forward<Parts>(rest)...);
}

// mt19937_64 with a bounded draw that does not depend on the standard
// library's distribution implementations, so streams are identical across
// toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be > 0.
  uint64_t below(uint64_t bound);

  template <class T>
  void shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace finbench::rng
