#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace entsep {

// Decodes UTF-8 into Unicode scalar values. Throws DataError on invalid input.
std::u32string DecodeUtf8(std::string_view s);

// Number of Unicode scalar values in a UTF-8 string.
std::size_t CodepointLength(std::string_view s);

// Byte offset of the given code point index (index == length gives size()).
std::size_t CodepointToByte(std::string_view s, std::size_t index);

// 64-bit FNV-1a.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset);

std::string HexDigest(std::uint64_t h);

// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t Mix64(std::uint64_t x);

// Seed for a named pipeline stage. Stages hash independently, so adding one
// never shifts another's stream.
std::uint64_t StageSeed(std::uint64_t global_seed, std::string_view stage);

// Deterministic sampler over std::mt19937_64. The standard distributions are
// implementation-defined, so the transforms to uniform/normal live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t Next();
  // Uniform in [0, 1).
  double Uniform();
  // Uniform integer in [0, bound).
  std::uint64_t Below(std::uint64_t bound);
  // Standard normal (Marsaglia polar method).
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace entsep
