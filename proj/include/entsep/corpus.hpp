#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace entsep {

// Canonical entity name, e.g. a knowledge-base title.
using EntityId = std::string;

// Character offsets (Unicode scalar values), half-open.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Instance {
  std::int64_t instance_id = 0;
  std::string text;
  std::string mention;
  Span span;
  EntityId entity;
  std::int64_t token_count = 0;
};

using IndexMap = std::map<std::string, std::vector<std::size_t>>;

// Immutable, indexed collection of mention instances. Index buckets list
// positions in instance order; map keys are ordered bytewise, which for valid
// UTF-8 is code point order.
class Corpus {
 public:
  Corpus() = default;

  // Validates every instance and builds the indexes.
  static Corpus FromInstances(std::vector<Instance> instances, bool explicit_ids = false);

  const std::vector<Instance>& instances() const { return instances_; }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }

  const IndexMap& by_entity() const { return by_entity_; }
  const IndexMap& by_mention() const { return by_mention_; }

  // Sorted distinct entity ids.
  std::vector<EntityId> entities() const;

  // Per-row digest of (text, span, entity).
  std::uint64_t row_hash(std::size_t i) const { return row_hashes_[i]; }
  // Order-sensitive digest over all rows, as a hex string.
  const std::string& hash() const { return hash_; }

  // Whether records carried their own instance_id field.
  bool explicit_ids() const { return explicit_ids_; }

  // Sub-corpus of the given positions, in the given order.
  Corpus Select(std::span<const std::size_t> positions) const;

 private:
  std::vector<Instance> instances_;
  IndexMap by_entity_;
  IndexMap by_mention_;
  std::vector<std::uint64_t> row_hashes_;
  std::string hash_;
  bool explicit_ids_ = false;
};

enum class CorpusFormat { kJsonl };

CorpusFormat ParseCorpusFormat(const std::string& tag);

// Reads one JSON object per line. Errors carry the 1-based line number.
Corpus ReadJsonl(std::istream& in, const std::string& source = "<stream>");
Corpus Ingest(const std::string& path, CorpusFormat format = CorpusFormat::kJsonl);

// Canonical serialization; ReadJsonl(WriteJsonl(c)) reproduces c.
void WriteJsonl(const Corpus& c, std::ostream& out);
void WriteJsonl(const Corpus& c, const std::string& path);

struct FilterOptions {
  std::int64_t min_count = 5;
  std::int64_t max_tokens = 500;
  // Instances dropped up front (e.g. listed by an extractor's skip file).
  std::set<std::int64_t> skip_ids;
};

// Drops over-long (and skipped) instances first, then entities left with fewer
// than min_count instances. Throws DataError if nothing remains.
Corpus Filter(const Corpus& c, const FilterOptions& options);

// Reads instance ids from a skip file: either bare integers or JSON objects
// with an "instance_id" key, one per line.
std::set<std::int64_t> ReadSkipFile(const std::string& path);

// Positions of instances whose mention group refers to 2+ distinct entities
// (ambiguity entropy > 0).
std::vector<std::size_t> AmbiguousPositions(const Corpus& c);
Corpus AmbiguousSubset(const Corpus& c);

}  // namespace entsep
