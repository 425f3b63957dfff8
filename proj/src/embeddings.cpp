#include "entsep/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "entsep/error.hpp"
#include "entsep/util.hpp"

namespace entsep {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t ToLittle(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

nlohmann::ordered_json ManifestToJson(const EmbeddingManifest& m, std::size_t rows) {
  nlohmann::ordered_json j;
  j["producer"] = m.producer;
  j["layer"] = m.layer ? nlohmann::ordered_json(*m.layer) : nlohmann::ordered_json();
  j["pooling"] = ToString(m.pooling);
  j["dim"] = m.dim;
  j["corpus_hash"] = m.corpus_hash;
  j["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json();
  j["row_count"] = rows;
  if (m.reduction) {
    j["reduction"] = {{"method", m.reduction->method},
                      {"input_dim", m.reduction->input_dim},
                      {"shrinkage", m.reduction->shrinkage}};
  }
  return j;
}

EmbeddingManifest ManifestFromJson(const nlohmann::json& j, std::size_t& rows) {
  try {
    EmbeddingManifest m;
    m.producer = j.at("producer").get<std::string>();
    if (!j.at("layer").is_null()) m.layer = j.at("layer").get<int>();
    m.pooling = ParsePooling(j.at("pooling").get<std::string>());
    m.dim = j.at("dim").get<std::size_t>();
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    rows = j.at("row_count").get<std::size_t>();
    if (j.contains("reduction")) {
      const auto& r = j["reduction"];
      m.reduction = ReductionInfo{r.at("method").get<std::string>(),
                                  r.at("input_dim").get<std::size_t>(),
                                  r.at("shrinkage").get<double>()};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("bad embedding manifest: {}", e.what()));
  }
}

void FillNormal(Rng& rng, std::span<float> out) {
  for (float& v : out) v = static_cast<float>(rng.Normal());
}

}  // namespace

std::string ToString(Pooling p) {
  switch (p) {
    case Pooling::kLastToken: return "last_token";
    case Pooling::kMeanSubword: return "mean_subword";
    case Pooling::kNone: return "none";
  }
  return "none";
}

Pooling ParsePooling(const std::string& s) {
  if (s == "last_token") return Pooling::kLastToken;
  if (s == "mean_subword") return Pooling::kMeanSubword;
  if (s == "none") return Pooling::kNone;
  throw DataError(fmt::format("unknown pooling '{}'", s));
}

EmbeddingMatrix::EmbeddingMatrix(EmbeddingManifest manifest, std::size_t rows,
                                 std::vector<float> values)
    : manifest_(std::move(manifest)), rows_(rows), values_(std::move(values)) {
  if (manifest_.dim == 0) throw DataError("embedding dim must be positive");
  if (values_.size() != rows_ * manifest_.dim)
    throw DataError(fmt::format("embedding payload has {} values, expected {} x {}",
                                values_.size(), rows_, manifest_.dim));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw NumericError(fmt::format("non-finite embedding value at row {}, column {}",
                                     i / manifest_.dim, i % manifest_.dim));
}

EmbeddingMatrix EmbeddingMatrix::SelectRows(std::span<const std::size_t> positions,
                                            const Corpus& subset) const {
  if (positions.size() != subset.size())
    throw DataError("row selection does not match the sub-corpus size");
  std::vector<float> out;
  out.reserve(positions.size() * dim());
  for (std::size_t p : positions) {
    if (p >= rows_) throw DataError("row selection out of range");
    auto r = row(p);
    out.insert(out.end(), r.begin(), r.end());
  }
  EmbeddingManifest m = manifest_;
  m.corpus_hash = subset.hash();
  return EmbeddingMatrix(std::move(m), positions.size(), std::move(out));
}

void Save(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  std::string header = ManifestToJson(m.manifest(), m.rows()).dump();
  std::uint32_t len = ToLittle(static_cast<std::uint32_t>(header.size()));
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  auto values = m.values();
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) {
      std::uint32_t bits = ToLittle(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!out) throw DataError(fmt::format("write failed for '{}'", path));
}

EmbeddingMatrix LoadUnchecked(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open embedding file '{}'", path));
  char magic[4];
  std::uint32_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(fmt::format("'{}' is not an EMB1 file", path));
  if (!in.read(reinterpret_cast<char*>(&len), 4))
    throw DataError(fmt::format("'{}': truncated header", path));
  len = ToLittle(len);
  std::string header(len, '\0');
  if (!in.read(header.data(), len)) throw DataError(fmt::format("'{}': truncated header", path));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("'{}': bad manifest JSON: {}", path, e.what()));
  }
  std::size_t rows = 0;
  EmbeddingManifest m = ManifestFromJson(j, rows);
  std::size_t count = rows * m.dim;
  std::vector<float> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(float))))
    throw DataError(fmt::format("'{}': truncated payload (expected {} floats)", path, count));
  if (in.peek() != std::ifstream::traits_type::eof())
    throw DataError(fmt::format("'{}': trailing bytes after payload", path));
  if constexpr (std::endian::native == std::endian::big) {
    for (float& v : values) v = std::bit_cast<float>(ToLittle(std::bit_cast<std::uint32_t>(v)));
  }
  return EmbeddingMatrix(std::move(m), rows, std::move(values));
}

EmbeddingMatrix Load(const std::string& path, const Corpus& c) {
  EmbeddingMatrix m = LoadUnchecked(path);
  if (m.manifest().corpus_hash != c.hash())
    throw DataError(fmt::format("'{}': corpus hash mismatch (file {}, corpus {})", path,
                                m.manifest().corpus_hash, c.hash()));
  if (m.rows() != c.size())
    throw DataError(fmt::format("'{}': {} rows for a corpus of {} instances", path, m.rows(),
                                c.size()));
  return m;
}

EmbeddingMatrix GenRandom(const Corpus& c, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw UsageError("dim must be >= 1");
  std::vector<float> values(c.size() * dim);
  for (std::size_t i = 0; i < c.size(); ++i) {
    Rng rng(seed ^ Mix64(i));
    FillNormal(rng, {values.data() + i * dim, dim});
  }
  EmbeddingManifest m{"random", std::nullopt, Pooling::kNone, dim, c.hash(), seed, std::nullopt};
  return EmbeddingMatrix(std::move(m), c.size(), std::move(values));
}

EmbeddingMatrix GenUniqueMention(const Corpus& c, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw UsageError("dim must be >= 1");
  std::vector<float> values(c.size() * dim);
  std::vector<float> vec(dim);
  std::uint64_t k = 0;
  // Distinct mention k (in sorted order) gets its own stream.
  for (const auto& [mention, rows] : c.by_mention()) {
    Rng rng(seed ^ Mix64(k++));
    FillNormal(rng, vec);
    for (std::size_t r : rows) std::copy(vec.begin(), vec.end(), values.begin() + r * dim);
  }
  EmbeddingManifest m{"unique-mention", std::nullopt, Pooling::kNone, dim, c.hash(), seed,
                      std::nullopt};
  return EmbeddingMatrix(std::move(m), c.size(), std::move(values));
}

StaticTable LoadStaticTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open vector table '{}'", path));
  StaticTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<float> vec;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        float v = std::stof(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        vec.push_back(v);
      } catch (const std::exception&) {
        throw DataError(fmt::format("{}:{}: bad number '{}'", path, line_no, tok));
      }
    }
    if (line_no == 1 && vec.size() == 1 && t.vectors.empty() &&
        word.find_first_not_of("0123456789") == std::string::npos)
      continue;  // "count dim" header
    if (t.dim == 0) t.dim = vec.size();
    if (vec.empty() || vec.size() != t.dim)
      throw DataError(fmt::format("{}:{}: expected {} values, got {}", path, line_no, t.dim,
                                  vec.size()));
    for (float v : vec)
      if (!std::isfinite(v))
        throw NumericError(fmt::format("{}:{}: non-finite value", path, line_no));
    t.vectors.emplace(std::move(word), std::move(vec));
  }
  if (t.vectors.empty()) throw DataError(fmt::format("'{}': empty vector table", path));
  return t;
}

StaticLookupResult GenStaticLookup(const Corpus& c, const StaticTable& table,
                                   const std::string& producer) {
  const std::size_t dim = table.dim;
  if (dim == 0) throw DataError("static table has no vectors");
  for (const auto& [w, v] : table.vectors)
    if (v.size() != dim) throw DataError(fmt::format("table vector '{}' has wrong dimension", w));

  StaticLookupResult result;
  std::vector<float> values(c.size() * dim);
  std::vector<double> acc(dim);
  for (const auto& [mention, rows] : c.by_mention()) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t found = 0;
    std::istringstream ss(mention);
    std::string tok;
    while (ss >> tok) {
      auto it = table.vectors.find(tok);
      if (it == table.vectors.end()) continue;
      for (std::size_t d = 0; d < dim; ++d) acc[d] += it->second[d];
      ++found;
    }
    std::vector<float> vec(dim);
    if (found > 0) {
      for (std::size_t d = 0; d < dim; ++d)
        vec[d] = static_cast<float>(acc[d] / static_cast<double>(found));
    } else {
      Rng rng(Fnv1a(mention));
      FillNormal(rng, vec);
      result.all_oov.insert(result.all_oov.end(), rows.begin(), rows.end());
    }
    for (std::size_t r : rows) std::copy(vec.begin(), vec.end(), values.begin() + r * dim);
  }
  std::sort(result.all_oov.begin(), result.all_oov.end());
  EmbeddingManifest m{producer, std::nullopt, Pooling::kNone, dim, c.hash(), std::nullopt,
                      std::nullopt};
  result.matrix = EmbeddingMatrix(std::move(m), c.size(), std::move(values));
  return result;
}

}  // namespace entsep
