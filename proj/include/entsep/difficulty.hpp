#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entsep/corpus.hpp"

namespace entsep {

// Edit distance (insert/delete/substitute, unit costs) over Unicode scalar
// values. Two-row dynamic program.
std::size_t Levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t Levenshtein(std::string_view a, std::string_view b);

// Shannon entropy in nats of a frequency table. Zero counts are ignored.
double Entropy(const std::vector<std::size_t>& frequencies);

struct AmbiguityScore {
  std::string mention;
  std::map<EntityId, std::size_t> candidates;
  std::size_t total = 0;
  double entropy = 0.0;
};

// Entropy of the gold-entity distribution of one mention string. Throws
// DataError for a mention absent from the corpus.
AmbiguityScore MentionAmbiguity(const Corpus& c, const std::string& mention);

struct VariabilityScore {
  EntityId entity;
  std::vector<std::string> mentions;  // distinct, sorted
  double dissimilarity = 0.0;
};

// Mean normalized edit distance over all pairs of distinct strings.
// Returns nullopt for fewer than two distinct strings.
std::optional<double> SurfaceDissimilarity(const std::vector<std::string>& distinct_mentions);

// Dissimilarity over the entity's distinct mention strings; nullopt when the
// entity has a single distinct surface form. Throws DataError for an unknown
// entity.
std::optional<VariabilityScore> MentionVariability(const Corpus& c, const EntityId& entity);

// One row per mention (ambiguity) or entity (variability).
struct DifficultyRow {
  std::string key;
  double score = 0.0;
  std::size_t support = 0;  // instance count
};

std::vector<DifficultyRow> AllMentionAmbiguities(const Corpus& c);
// Entities with a single distinct surface form are omitted.
std::vector<DifficultyRow> AllMentionVariabilities(const Corpus& c);

}  // namespace entsep
