#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"

namespace entsep {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One centroid per entity, rows ordered like `entities` (sorted ids).
struct CentroidSet {
  std::vector<EntityId> entities;
  RowMatrix centroids;
};

// Mean of each entity's rows, accumulated in double.
CentroidSet ComputeCentroids(const EmbeddingMatrix& x, const Corpus& c);

// Labels are indices into `entities`.
struct Assignment {
  std::vector<EntityId> entities;
  std::vector<std::uint32_t> cluster_of;  // nearest centroid
  std::vector<std::uint32_t> class_of;    // gold entity
  std::size_t size() const { return cluster_of.size(); }
};

struct AssignOptions {
  unsigned workers = 1;
  std::size_t block_rows = 256;
};

// Nearest-centroid (Euclidean) labelling. Ties go to the lexicographically
// smallest entity id. Gold labels come from the corpus.
Assignment Assign(const EmbeddingMatrix& x, const CentroidSet& b, const Corpus& c,
                  const AssignOptions& options = {});

namespace detail {
// Squared distances between rows[begin, end) and every centroid, via
// |x|^2 - 2 x.b + |b|^2 after translating everything by `origin`.
RowMatrix SquaredDistances(const EmbeddingMatrix& x, std::size_t begin, std::size_t end,
                           const RowMatrix& centroids, const Eigen::RowVectorXd& origin);
}  // namespace detail

struct LocalScore {
  EntityId entity;
  double local_purity = 0.0;
  double local_ip = 0.0;
  double local_f1 = 0.0;
  std::size_t class_size = 0;
  std::size_t cluster_size = 0;
  // Most frequent gold class inside the cluster; empty for an empty cluster.
  EntityId majority_class;
};

struct PurityScores {
  double purity = 0.0;
  double ip = 0.0;
  double f1 = 0.0;
  std::vector<LocalScore> locals;  // ordered like Assignment::entities
  std::size_t empty_clusters = 0;
};

// Purity, inverse purity and their harmonic mean, with per-entity locals.
// Empty clusters get local_purity 0 and zero weight.
PurityScores PurityIpF1(const Assignment& a);

struct AriResult {
  double value = 0.0;
  // Maximum index equals its expectation; value is reported as 1.
  bool degenerate = false;
};

// Adjusted Rand index from the contingency table.
AriResult AdjustedRandIndex(std::span<const std::uint32_t> labels_a,
                            std::span<const std::uint32_t> labels_b);
AriResult AdjustedRandIndex(const Assignment& a);

struct PartitionScores {
  double purity = 0.0;
  double ip = 0.0;
  double f1 = 0.0;
  double ari = 0.0;
  bool ari_degenerate = false;
  std::size_t empty_clusters = 0;
  std::vector<LocalScore> locals;
};

// Centroids, assignment, Purity/IP/F1 and ARI in one pass.
PartitionScores Score(const EmbeddingMatrix& x, const Corpus& c, const AssignOptions& options = {});
PartitionScores Score(const Assignment& a);

}  // namespace entsep
