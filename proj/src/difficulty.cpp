#include "entsep/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "entsep/error.hpp"
#include "entsep/util.hpp"

namespace entsep {

std::size_t Levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t Levenshtein(std::string_view a, std::string_view b) {
  return Levenshtein(DecodeUtf8(a), DecodeUtf8(b));
}

double Entropy(const std::vector<std::size_t>& frequencies) {
  double total = 0.0;
  for (std::size_t f : frequencies) total += static_cast<double>(f);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t f : frequencies) {
    if (f == 0) continue;
    double p = static_cast<double>(f) / total;
    h -= p * std::log(p);
  }
  // A single candidate gives exactly zero, not -0.
  return h <= 0.0 ? 0.0 : h;
}

AmbiguityScore MentionAmbiguity(const Corpus& c, const std::string& mention) {
  auto it = c.by_mention().find(mention);
  if (it == c.by_mention().end())
    throw DataError(fmt::format("unknown mention \"{}\"", mention));
  AmbiguityScore s;
  s.mention = mention;
  for (std::size_t r : it->second) ++s.candidates[c[r].entity];
  std::vector<std::size_t> freq;
  for (const auto& [_, f] : s.candidates) freq.push_back(f);
  s.total = it->second.size();
  s.entropy = freq.size() < 2 ? 0.0 : Entropy(freq);
  return s;
}

std::optional<double> SurfaceDissimilarity(const std::vector<std::string>& distinct_mentions) {
  std::size_t m = distinct_mentions.size();
  if (m < 2) return std::nullopt;
  std::vector<std::u32string> decoded;
  decoded.reserve(m);
  for (const auto& s : distinct_mentions) decoded.push_back(DecodeUtf8(s));
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      std::size_t longest = std::max(decoded[i].size(), decoded[j].size());
      if (longest == 0) continue;
      sum += static_cast<double>(Levenshtein(decoded[i], decoded[j])) /
             static_cast<double>(longest);
    }
  }
  return 2.0 * sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

std::optional<VariabilityScore> MentionVariability(const Corpus& c, const EntityId& entity) {
  auto it = c.by_entity().find(entity);
  if (it == c.by_entity().end())
    throw DataError(fmt::format("unknown entity \"{}\"", entity));
  std::set<std::string> distinct;
  for (std::size_t r : it->second) distinct.insert(c[r].mention);
  VariabilityScore s;
  s.entity = entity;
  s.mentions.assign(distinct.begin(), distinct.end());
  auto d = SurfaceDissimilarity(s.mentions);
  if (!d) return std::nullopt;
  s.dissimilarity = *d;
  return s;
}

std::vector<DifficultyRow> AllMentionAmbiguities(const Corpus& c) {
  std::vector<DifficultyRow> rows;
  rows.reserve(c.by_mention().size());
  for (const auto& [mention, idx] : c.by_mention()) {
    auto s = MentionAmbiguity(c, mention);
    rows.push_back({mention, s.entropy, idx.size()});
  }
  return rows;
}

std::vector<DifficultyRow> AllMentionVariabilities(const Corpus& c) {
  std::vector<DifficultyRow> rows;
  for (const auto& [entity, idx] : c.by_entity()) {
    if (auto s = MentionVariability(c, entity))
      rows.push_back({entity, s->dissimilarity, idx.size()});
  }
  return rows;
}

}  // namespace entsep
