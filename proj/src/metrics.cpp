#include "entsep/metrics.hpp"

#include <algorithm>
#include <string_view>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "entsep/error.hpp"

namespace entsep {

CentroidSet ComputeCentroids(const EmbeddingMatrix& x, const Corpus& c) {
  if (x.rows() != c.size())
    throw DataError(fmt::format("{} embedding rows for {} instances", x.rows(), c.size()));
  CentroidSet b;
  b.entities = c.entities();
  b.centroids = RowMatrix::Zero(static_cast<Eigen::Index>(b.entities.size()),
                                static_cast<Eigen::Index>(x.dim()));
  Eigen::Index k = 0;
  for (const auto& [entity, rows] : c.by_entity()) {
    if (rows.empty()) throw DataError(fmt::format("entity \"{}\" has no instances", entity));
    auto out = b.centroids.row(k++);
    for (std::size_t r : rows) {
      auto v = x.row(r);
      for (std::size_t d = 0; d < v.size(); ++d) out[static_cast<Eigen::Index>(d)] += v[d];
    }
    out /= static_cast<double>(rows.size());
  }
  return b;
}

namespace detail {

RowMatrix SquaredDistances(const EmbeddingMatrix& x, std::size_t begin, std::size_t end,
                           const RowMatrix& centroids, const Eigen::RowVectorXd& origin) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  const auto dim = static_cast<Eigen::Index>(x.dim());
  RowMatrix block(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto v = x.row(begin + static_cast<std::size_t>(i));
    for (Eigen::Index d = 0; d < dim; ++d)
      block(i, d) = static_cast<double>(v[static_cast<std::size_t>(d)]) - origin[d];
  }
  RowMatrix shifted = centroids.rowwise() - origin;
  Eigen::VectorXd row_norms = block.rowwise().squaredNorm();
  Eigen::RowVectorXd centroid_norms = shifted.rowwise().squaredNorm().transpose();
  RowMatrix dist = -2.0 * (block * shifted.transpose());
  dist.colwise() += row_norms;
  dist.rowwise() += centroid_norms;
  return dist;
}

}  // namespace detail

Assignment Assign(const EmbeddingMatrix& x, const CentroidSet& b, const Corpus& c,
                  const AssignOptions& options) {
  if (static_cast<std::size_t>(b.centroids.cols()) != x.dim())
    throw DataError(fmt::format("centroid dim {} does not match embedding dim {}",
                                b.centroids.cols(), x.dim()));
  if (x.rows() != c.size())
    throw DataError(fmt::format("{} embedding rows for {} instances", x.rows(), c.size()));
  if (b.entities.empty()) throw DataError("no centroids");

  Assignment a;
  a.entities = b.entities;
  a.cluster_of.resize(x.rows());
  a.class_of.resize(x.rows());
  std::unordered_map<std::string_view, std::uint32_t> index;
  for (std::size_t k = 0; k < b.entities.size(); ++k)
    index.emplace(b.entities[k], static_cast<std::uint32_t>(k));
  for (const auto& [entity, rows] : c.by_entity()) {
    auto it = index.find(entity);
    if (it == index.end())
      throw DataError(fmt::format("entity \"{}\" has no centroid", entity));
    for (std::size_t r : rows) a.class_of[r] = it->second;
  }

  // Translating to the centroid mean keeps the expansion well conditioned.
  Eigen::RowVectorXd origin = b.centroids.colwise().mean();
  const std::size_t block = std::max<std::size_t>(1, options.block_rows);
  const std::size_t n_blocks = (x.rows() + block - 1) / block;

  auto run_blocks = [&](std::size_t first, std::size_t step) {
    for (std::size_t blk = first; blk < n_blocks; blk += step) {
      std::size_t begin = blk * block;
      std::size_t end = std::min(x.rows(), begin + block);
      RowMatrix dist = detail::SquaredDistances(x, begin, end, b.centroids, origin);
      for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        Eigen::Index best = 0;
        double best_d = dist(i, 0);
        for (Eigen::Index k = 1; k < dist.cols(); ++k) {
          if (dist(i, k) < best_d) {
            best_d = dist(i, k);
            best = k;
          }
        }
        a.cluster_of[begin + static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
      }
    }
  };

  unsigned workers = std::max(1u, options.workers);
  if (workers == 1 || n_blocks == 1) {
    run_blocks(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_blocks, w, workers);
  }
  return a;
}

namespace {

// Sorted (cluster, class) -> count runs.
struct Cell {
  std::uint32_t cluster;
  std::uint32_t cls;
  std::size_t count;
};

std::vector<Cell> Contingency(std::span<const std::uint32_t> clusters,
                              std::span<const std::uint32_t> classes) {
  std::vector<std::uint64_t> keys(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i)
    keys[i] = (static_cast<std::uint64_t>(clusters[i]) << 32) | classes[i];
  std::sort(keys.begin(), keys.end());
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    cells.push_back({static_cast<std::uint32_t>(keys[i] >> 32),
                     static_cast<std::uint32_t>(keys[i] & 0xffffffffu), j - i});
    i = j;
  }
  return cells;
}

double Harmonic(double p, double q) {
  if (p == q) return p;
  return p + q > 0.0 ? 2.0 * p * q / (p + q) : 0.0;
}

}  // namespace

PurityScores PurityIpF1(const Assignment& a) {
  if (a.cluster_of.size() != a.class_of.size())
    throw DataError("assignment cluster and class label counts differ");
  const std::size_t n = a.size();
  const std::size_t k = a.entities.size();
  if (n == 0) throw DataError("empty assignment");

  std::vector<std::size_t> cluster_size(k, 0), class_size(k, 0), hit(k, 0), majority(k, 0);
  std::vector<std::uint32_t> majority_class(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++cluster_size[a.cluster_of[i]];
    ++class_size[a.class_of[i]];
    if (a.cluster_of[i] == a.class_of[i]) ++hit[a.cluster_of[i]];
  }
  // Cells arrive sorted by class within a cluster, so a strict comparison
  // keeps the smallest id among tied majorities.
  for (const Cell& cell : Contingency(a.cluster_of, a.class_of)) {
    if (cell.count > majority[cell.cluster]) {
      majority[cell.cluster] = cell.count;
      majority_class[cell.cluster] = cell.cls;
    }
  }

  PurityScores s;
  s.locals.resize(k);
  double purity_sum = 0.0, ip_sum = 0.0;
  for (std::size_t e = 0; e < k; ++e) {
    LocalScore& l = s.locals[e];
    l.entity = a.entities[e];
    l.cluster_size = cluster_size[e];
    l.class_size = class_size[e];
    if (cluster_size[e] > 0) {
      l.local_purity = static_cast<double>(majority[e]) / static_cast<double>(cluster_size[e]);
      l.majority_class = a.entities[majority_class[e]];
      purity_sum += static_cast<double>(majority[e]);
    } else {
      ++s.empty_clusters;
    }
    if (class_size[e] > 0) {
      l.local_ip = static_cast<double>(hit[e]) / static_cast<double>(class_size[e]);
      ip_sum += static_cast<double>(hit[e]);
    }
    l.local_f1 = Harmonic(l.local_purity, l.local_ip);
  }
  s.purity = purity_sum / static_cast<double>(n);
  s.ip = ip_sum / static_cast<double>(n);
  s.f1 = Harmonic(s.purity, s.ip);
  return s;
}

AriResult AdjustedRandIndex(std::span<const std::uint32_t> labels_a,
                            std::span<const std::uint32_t> labels_b) {
  if (labels_a.size() != labels_b.size()) throw DataError("ARI label vectors differ in length");
  const std::size_t n = labels_a.size();
  if (n < 2) throw DataError("ARI needs at least 2 instances");

  auto pairs = [](std::size_t m) -> long double {
    return static_cast<long double>(m) * static_cast<long double>(m - (m > 0 ? 1 : 0)) / 2.0L;
  };
  long double index = 0.0L, sum_a = 0.0L, sum_b = 0.0L;
  for (const Cell& cell : Contingency(labels_a, labels_b)) index += pairs(cell.count);
  auto marginal = [&](std::span<const std::uint32_t> labels) {
    std::vector<std::uint32_t> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());
    long double total = 0.0L;
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      total += pairs(j - i);
      i = j;
    }
    return total;
  };
  sum_a = marginal(labels_a);
  sum_b = marginal(labels_b);
  long double expected = sum_a * sum_b / pairs(n);
  long double max_index = 0.5L * (sum_a + sum_b);
  if (max_index == expected) return {1.0, true};
  return {static_cast<double>((index - expected) / (max_index - expected)), false};
}

AriResult AdjustedRandIndex(const Assignment& a) {
  return AdjustedRandIndex(a.class_of, a.cluster_of);
}

PartitionScores Score(const Assignment& a) {
  PurityScores p = PurityIpF1(a);
  AriResult ari = a.size() < 2 ? AriResult{1.0, true} : AdjustedRandIndex(a);
  PartitionScores s;
  s.purity = p.purity;
  s.ip = p.ip;
  s.f1 = p.f1;
  s.ari = ari.value;
  s.ari_degenerate = ari.degenerate;
  s.empty_clusters = p.empty_clusters;
  s.locals = std::move(p.locals);
  return s;
}

PartitionScores Score(const EmbeddingMatrix& x, const Corpus& c, const AssignOptions& options) {
  CentroidSet b = ComputeCentroids(x, c);
  return Score(Assign(x, b, c, options));
}

}  // namespace entsep
