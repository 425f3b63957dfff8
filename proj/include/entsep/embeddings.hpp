#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "entsep/corpus.hpp"

namespace entsep {

enum class Pooling { kLastToken, kMeanSubword, kNone };

std::string ToString(Pooling p);
Pooling ParsePooling(const std::string& s);

// Present when a matrix was produced by a linear reduction.
struct ReductionInfo {
  std::string method;  // "lda"
  std::size_t input_dim = 0;
  double shrinkage = 0.0;
};

struct EmbeddingManifest {
  std::string producer;
  std::optional<int> layer;
  Pooling pooling = Pooling::kNone;
  std::size_t dim = 0;
  std::string corpus_hash;
  std::optional<std::uint64_t> seed;
  std::optional<ReductionInfo> reduction;
};

// Row-major N x dim matrix of 32-bit floats, row i aligned to corpus instance i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws NumericError on a non-finite value, DataError on a size mismatch.
  EmbeddingMatrix(EmbeddingManifest manifest, std::size_t rows, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return manifest_.dim; }
  const EmbeddingManifest& manifest() const { return manifest_; }
  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim(), dim()};
  }
  std::span<const float> values() const { return values_; }

  // Rows at the given positions, re-bound to the sub-corpus they align with.
  EmbeddingMatrix SelectRows(std::span<const std::size_t> positions, const Corpus& subset) const;

 private:
  EmbeddingManifest manifest_;
  std::size_t rows_ = 0;
  std::vector<float> values_;
};

// File layout: "EMB1", u32 little-endian manifest length, manifest JSON
// (producer, layer, pooling, dim, corpus_hash, seed, row_count), then
// row_count * dim little-endian float32 values.
void Save(const EmbeddingMatrix& m, const std::string& path);
// Rejects a corpus hash or row count mismatch, truncation and non-finite values.
EmbeddingMatrix Load(const std::string& path, const Corpus& c);
// As Load, without corpus checks.
EmbeddingMatrix LoadUnchecked(const std::string& path);

// i.i.d. standard normal rows; row i depends only on (seed, i, dim).
EmbeddingMatrix GenRandom(const Corpus& c, std::size_t dim, std::uint64_t seed);

// One standard-normal vector per distinct surface string.
EmbeddingMatrix GenUniqueMention(const Corpus& c, std::size_t dim, std::uint64_t seed);

struct StaticTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> vectors;
};

// Text format: "word v1 ... vdim" per line. A leading "count dim" header line,
// as in fastText .vec files, is skipped.
StaticTable LoadStaticTable(const std::string& path);

struct StaticLookupResult {
  EmbeddingMatrix matrix;
  // Positions where no mention token was in the table.
  std::vector<std::size_t> all_oov;
};

// Mean of the table vectors of the mention's whitespace-separated tokens.
// Missing tokens are skipped; an all-missing mention gets a normal vector
// seeded by the mention string.
StaticLookupResult GenStaticLookup(const Corpus& c, const StaticTable& table,
                                   const std::string& producer = "static");

}  // namespace entsep
