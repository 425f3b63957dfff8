// Shared fixtures and brute-force reference implementations for the tests.
// Oracles here deliberately avoid the library's own code paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"

namespace testing {

using entsep::Corpus;
using entsep::EmbeddingManifest;
using entsep::EmbeddingMatrix;
using entsep::Instance;

// One instance per label; the mention defaults to the label itself.
inline Corpus MakeCorpus(const std::vector<std::string>& labels,
                         std::vector<std::string> mentions = {}) {
  if (mentions.empty()) mentions = labels;
  std::vector<Instance> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Instance inst;
    inst.instance_id = static_cast<std::int64_t>(i);
    inst.text = "x " + mentions[i] + " y";
    inst.mention = mentions[i];
    std::size_t len = 0;
    for (unsigned char ch : mentions[i]) len += (ch & 0xC0) != 0x80;
    inst.span = {2, 2 + len};
    inst.entity = labels[i];
    inst.token_count = 3;
    rows.push_back(std::move(inst));
  }
  return Corpus::FromInstances(std::move(rows));
}

inline EmbeddingMatrix MakeMatrix(const Corpus& c, const std::vector<std::vector<double>>& rows) {
  EmbeddingManifest m;
  m.producer = "test";
  m.dim = rows.empty() ? 1 : rows[0].size();
  m.corpus_hash = c.hash();
  std::vector<float> values;
  for (const auto& r : rows)
    for (double v : r) values.push_back(static_cast<float>(v));
  return EmbeddingMatrix(m, rows.size(), std::move(values));
}

inline EmbeddingMatrix MakeMatrix(const Corpus& c, std::size_t dim, std::vector<float> values) {
  EmbeddingManifest m;
  m.producer = "test";
  m.dim = dim;
  m.corpus_hash = c.hash();
  const std::size_t rows = values.size() / dim;
  return EmbeddingMatrix(m, rows, std::move(values));
}

inline std::vector<std::string> EntityNames(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("E" + std::to_string(1000 + i));
  return names;
}

// k Gaussian clusters with the given per-class size, centers drawn on a
// scaled integer lattice.
struct Blobs {
  Corpus corpus;
  EmbeddingMatrix x;
};

inline Blobs MakeBlobs(std::size_t k, std::size_t per_class, std::size_t dim, double spacing,
                       double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto names = EntityNames(k);
  std::vector<std::string> labels;
  std::vector<float> values;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> center(dim, 0.0);
    std::size_t code = c;
    for (std::size_t d = 0; d < dim; ++d) {
      center[d] = spacing * static_cast<double>(code % 4);
      code /= 4;
    }
    for (std::size_t i = 0; i < per_class; ++i) {
      labels.push_back(names[c]);
      for (std::size_t d = 0; d < dim; ++d)
        values.push_back(static_cast<float>(center[d] + sigma * normal(gen)));
    }
  }
  Corpus corpus = MakeCorpus(labels);
  EmbeddingMatrix x = MakeMatrix(corpus, dim, std::move(values));
  return {std::move(corpus), std::move(x)};
}

namespace oracle {

struct Partition {
  std::vector<std::size_t> cluster;  // per row
  std::vector<std::size_t> klass;    // per row
  std::size_t k = 0;                 // number of entities
};

// Direct nearest-centroid labelling: centroids as plain sums, distances as
// explicit squared differences, first minimum wins.
inline Partition NearestCentroid(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::size_t>& klass, std::size_t k) {
  const std::size_t dim = rows.empty() ? 0 : rows[0].size();
  std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) sum[klass[i]][d] += rows[i][d];
    count[klass[i]] += 1.0;
  }
  for (std::size_t e = 0; e < k; ++e)
    for (double& v : sum[e]) v /= count[e];
  Partition p;
  p.k = k;
  p.klass = klass;
  for (const auto& r : rows) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t e = 0; e < k; ++e) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) d2 += (r[d] - sum[e][d]) * (r[d] - sum[e][d]);
      if (d2 < best_d) {
        best_d = d2;
        best = e;
      }
    }
    p.cluster.push_back(best);
  }
  return p;
}

struct Scores {
  double purity = 0, ip = 0, f1 = 0;
  std::vector<double> local_purity, local_ip, local_f1;
};

// Set-based evaluation of local purity / IP and their weighted averages.
inline Scores PurityIp(const Partition& p) {
  const std::size_t n = p.cluster.size();
  Scores s;
  s.local_purity.assign(p.k, 0.0);
  s.local_ip.assign(p.k, 0.0);
  s.local_f1.assign(p.k, 0.0);
  double purity_sum = 0, ip_sum = 0;
  for (std::size_t e = 0; e < p.k; ++e) {
    std::set<std::size_t> cluster, klass;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.cluster[i] == e) cluster.insert(i);
      if (p.klass[i] == e) klass.insert(i);
    }
    if (!cluster.empty()) {
      std::size_t best = 0;
      for (std::size_t other = 0; other < p.k; ++other) {
        std::size_t hits = 0;
        for (std::size_t i : cluster) hits += p.klass[i] == other;
        best = std::max(best, hits);
      }
      s.local_purity[e] = static_cast<double>(best) / static_cast<double>(cluster.size());
      purity_sum += s.local_purity[e] * static_cast<double>(cluster.size());
    }
    std::size_t inside = 0;
    for (std::size_t i : klass) inside += cluster.count(i);
    s.local_ip[e] = static_cast<double>(inside) / static_cast<double>(klass.size());
    ip_sum += s.local_ip[e] * static_cast<double>(klass.size());
    const double a = s.local_purity[e], b = s.local_ip[e];
    s.local_f1[e] = a + b > 0 ? 2 * a * b / (a + b) : 0.0;
  }
  s.purity = purity_sum / static_cast<double>(n);
  s.ip = ip_sum / static_cast<double>(n);
  s.f1 = s.purity + s.ip > 0 ? 2 * s.purity * s.ip / (s.purity + s.ip) : 0.0;
  return s;
}

// ARI by enumerating every unordered pair of rows. Returns 1 for the
// degenerate case where the expected and maximum index coincide.
inline double PairAri(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t n = a.size();
  double both = 0, same_a = 0, same_b = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      same_a += sa;
      same_b += sb;
      pairs += 1;
    }
  }
  if (pairs == 0) return 1.0;
  const double expected = same_a * same_b / pairs;
  const double max_index = 0.5 * (same_a + same_b);
  if (max_index == expected) return 1.0;
  return (both - expected) / (max_index - expected);
}

// Edit distance by the plain recursion over suffixes, memoized.
inline std::size_t RecursiveLevenshtein(const std::u32string& a, const std::u32string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  auto go = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t r;
    if (a[i] == b[j]) {
      r = self(self, i + 1, j + 1);
    } else {
      r = 1 + std::min({self(self, i + 1, j), self(self, i, j + 1), self(self, i + 1, j + 1)});
    }
    memo[key] = r;
    return r;
  };
  return go(go, 0, 0);
}

}  // namespace oracle
}  // namespace testing
