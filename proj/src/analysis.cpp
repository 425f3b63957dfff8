#include "entsep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "entsep/difficulty.hpp"
#include "entsep/error.hpp"
#include "entsep/reduction.hpp"
#include "entsep/util.hpp"

namespace entsep {

std::string ToString(Axis axis) {
  return axis == Axis::kAmbiguity ? "ambiguity" : "variability";
}

Axis ParseAxis(const std::string& s) {
  if (s == "ambiguity") return Axis::kAmbiguity;
  if (s == "variability") return Axis::kVariability;
  throw UsageError(fmt::format("unknown axis '{}' (ambiguity|variability)", s));
}

double RestrictedF1(const Assignment& a, std::span<const std::size_t> positions) {
  if (positions.empty()) throw DataError("empty group");
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> cells;
  std::size_t hits = 0;
  for (std::size_t p : positions) {
    ++cells[{a.cluster_of.at(p), a.class_of.at(p)}];
    if (a.cluster_of[p] == a.class_of[p]) ++hits;
  }
  std::map<std::uint32_t, std::size_t> majority;
  for (const auto& [key, count] : cells)
    majority[key.first] = std::max(majority[key.first], count);
  std::size_t majority_total = 0;
  for (const auto& [_, m] : majority) majority_total += m;
  const auto n = static_cast<double>(positions.size());
  double purity = static_cast<double>(majority_total) / n;
  double ip = static_cast<double>(hits) / n;
  return purity + ip > 0.0 ? 2.0 * purity * ip / (purity + ip) : 0.0;
}

std::vector<GroupScore> GroupF1(const Corpus& c, const Assignment& a,
                                std::span<const LocalScore> locals, Axis axis) {
  if (a.size() != c.size()) throw DataError("assignment does not cover the corpus");
  std::vector<GroupScore> out;
  if (axis == Axis::kAmbiguity) {
    for (const auto& [mention, rows] : c.by_mention()) {
      AmbiguityScore s = MentionAmbiguity(c, mention);
      if (s.entropy <= 0.0) continue;
      out.push_back({mention, s.entropy, RestrictedF1(a, rows), rows.size()});
    }
  } else {
    std::map<std::string_view, const LocalScore*> by_entity;
    for (const LocalScore& l : locals) by_entity[l.entity] = &l;
    for (const auto& [entity, rows] : c.by_entity()) {
      auto v = MentionVariability(c, entity);
      if (!v) continue;
      auto it = by_entity.find(entity);
      if (it == by_entity.end())
        throw DataError(fmt::format("no local scores for entity \"{}\"", entity));
      out.push_back({entity, v->dissimilarity, it->second->local_f1, rows.size()});
    }
  }
  return out;
}

CurveReport BinAndCurve(std::span<const std::pair<double, double>> pairs, std::size_t n_bins,
                        Axis axis, std::optional<DifficultyRange> range) {
  if (pairs.empty()) throw DataError("no (difficulty, score) pairs to bin");
  if (n_bins == 0) throw UsageError("n_bins must be >= 1");
  CurveReport r;
  r.axis = axis;
  r.n_bins = n_bins;
  if (range) {
    r.range_min = range->first;
    r.range_max = range->second;
  } else {
    auto [lo, hi] = std::minmax_element(pairs.begin(), pairs.end(),
                                        [](auto& p, auto& q) { return p.first < q.first; });
    r.range_min = lo->first;
    r.range_max = hi->first;
  }
  const double width = r.range_max - r.range_min;
  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (const auto& [x, y] : pairs) {
    double t = width > 0.0 ? (x - r.range_min) / width : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    auto bin = std::min(n_bins - 1, static_cast<std::size_t>(t * static_cast<double>(n_bins)));
    sums[bin] += y;
    ++counts[bin];
  }
  const auto nb = static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (counts[i] == 0) continue;
    auto fi = static_cast<double>(i);
    r.bins.push_back({fi / nb, (fi + 1.0) / nb, (fi + 0.5) / nb,
                      sums[i] / static_cast<double>(counts[i]), counts[i]});
  }
  r.auc = Auc(r);
  return r;
}

CurveReport BinAndCurve(std::span<const GroupScore> scores, std::size_t n_bins, Axis axis,
                        std::optional<DifficultyRange> range) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(scores.size());
  for (const GroupScore& g : scores) pairs.emplace_back(g.difficulty, g.f1);
  return BinAndCurve(pairs, n_bins, axis, range);
}

double Auc(const CurveReport& curve) {
  const auto& bins = curve.bins;
  if (bins.empty()) throw DataError("AUC of an empty curve");
  if (bins.size() == 1) return bins.front().mean_f1;
  double area = bins.front().x_center * bins.front().mean_f1;
  for (std::size_t i = 1; i < bins.size(); ++i)
    area += 0.5 * (bins[i].x_center - bins[i - 1].x_center) *
            (bins[i].mean_f1 + bins[i - 1].mean_f1);
  area += (1.0 - bins.back().x_center) * bins.back().mean_f1;
  return area;
}

namespace {

void CheckDims(const SweepConfig& cfg) {
  if (cfg.dims.empty()) throw UsageError("sweep needs at least one dim");
  if (cfg.dims.front() == 0) throw UsageError("sweep dims must be positive");
  for (std::size_t i = 1; i < cfg.dims.size(); ++i)
    if (cfg.dims[i] <= cfg.dims[i - 1]) throw UsageError("sweep dims must be strictly ascending");
  if (!(cfg.epsilon > 0.0)) throw UsageError("sweep epsilon must be positive");
}

}  // namespace

SweepResult SelectDimension(std::vector<SweepPoint> table, double epsilon) {
  if (table.empty()) throw UsageError("empty sweep table");
  SweepResult r;
  r.table = std::move(table);
  const auto& t = r.table;
  // Walk back from the end while slopes stay below epsilon.
  std::size_t k = t.size() - 1;
  while (k > 0) {
    double slope = (t[k].f1 - t[k - 1].f1) /
                   (static_cast<double>(t[k].dim) - static_cast<double>(t[k - 1].dim));
    if (!(std::abs(slope) < epsilon)) break;
    --k;
  }
  r.converged = t.size() == 1 || k < t.size() - 1;
  r.chosen_dim = t[k].dim;
  return r;
}

SweepResult LdaDimensionSweep(const EmbeddingMatrix& x, const Corpus& c, const SweepConfig& cfg,
                              const AssignOptions& options) {
  CheckDims(cfg);
  const std::size_t classes = c.by_entity().size();
  if (cfg.dims.back() > classes - 1 || cfg.dims.back() > x.dim())
    throw DataError(fmt::format("sweep dim {} exceeds LDA rank limit min(C-1={}, dim={})",
                                cfg.dims.back(), classes - 1, x.dim()));
  Projection full = FitLda(x, c, cfg.dims.back());
  std::vector<SweepPoint> table;
  for (std::size_t d : cfg.dims) {
    Projection p = full;
    p.matrix = full.matrix.leftCols(static_cast<Eigen::Index>(d));
    p.eigenvalues = full.eigenvalues.head(static_cast<Eigen::Index>(d));
    table.push_back({d, Score(Transform(p, x), c, options).f1});
  }
  return SelectDimension(std::move(table), cfg.epsilon);
}

SweepResult RandomDimensionSweep(const Corpus& c, const SweepConfig& cfg, std::uint64_t seed,
                                 const AssignOptions& options) {
  CheckDims(cfg);
  std::vector<SweepPoint> table;
  for (std::size_t d : cfg.dims) table.push_back({d, Score(GenRandom(c, d, seed), c, options).f1});
  return SelectDimension(std::move(table), cfg.epsilon);
}

std::vector<std::size_t> SampleIndices(std::size_t total, std::size_t count, std::uint64_t seed,
                                       bool* clamped) {
  if (clamped) *clamped = count > total;
  count = std::min(count, total);
  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + static_cast<std::size_t>(rng.Below(total - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

RSMatrix BuildRsm(const Eigen::MatrixXd& rows, std::vector<std::size_t> indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  for (std::size_t i : indices)
    if (i >= static_cast<std::size_t>(rows.rows())) throw DataError("RSM index out of range");
  RSMatrix r;
  r.sim = RowMatrix::Zero(n, n);
  double max_dist = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto xi = rows.row(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      auto xj = rows.row(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
      double d = (xi - xj).norm();
      r.sim(i, j) = d;
      max_dist = std::max(max_dist, d);
    }
  }
  if (!(max_dist > 0.0)) throw DataError("degenerate RSM: all sampled points coincide");
  for (Eigen::Index i = 0; i < n; ++i) {
    r.sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      r.sim(i, j) = 1.0 - r.sim(i, j) / max_dist;
      r.sim(j, i) = r.sim(i, j);
    }
  }
  r.indices = std::move(indices);
  return r;
}

RSMatrix BuildRsm(const EmbeddingMatrix& x, std::span<const std::size_t> indices) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(indices.size()),
                       static_cast<Eigen::Index>(x.dim()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.rows()) throw DataError("RSM index out of range");
    auto v = x.row(indices[k]);
    for (std::size_t d = 0; d < v.size(); ++d)
      rows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = v[d];
  }
  std::vector<std::size_t> local(indices.size());
  std::iota(local.begin(), local.end(), std::size_t{0});
  RSMatrix r = BuildRsm(rows, std::move(local));
  r.indices.assign(indices.begin(), indices.end());
  return r;
}

RSMatrix BuildRsm(const EmbeddingMatrix& x, std::size_t sample, std::uint64_t seed,
                  bool* clamped) {
  auto indices = SampleIndices(x.rows(), sample, seed, clamped);
  return BuildRsm(x, indices);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double Spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("Spearman inputs differ in length");
  if (a.size() < 2) throw DataError("Spearman needs at least 2 values");
  auto ra = AverageRanks(a);
  auto rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericError("Spearman correlation of a constant vector");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double Rsa(const RSMatrix& a, const RSMatrix& b) {
  if (a.indices != b.indices)
    throw DataError("RSA requires both RSMs to be built on the same sampled instances");
  const auto n = static_cast<Eigen::Index>(a.n());
  std::vector<double> va, vb;
  va.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  vb.reserve(va.capacity());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      va.push_back(a.sim(i, j));
      vb.push_back(b.sim(i, j));
    }
  return Spearman(va, vb);
}

std::optional<DifficultyRange> AxisRange(const Corpus& c, Axis axis) {
  const auto rows = axis == Axis::kAmbiguity ? AllMentionAmbiguities(c) : AllMentionVariabilities(c);
  std::optional<DifficultyRange> r;
  for (const DifficultyRow& row : rows) {
    if (axis == Axis::kAmbiguity && !(row.score > 0.0)) continue;
    if (!r) r = DifficultyRange{row.score, row.score};
    r->first = std::min(r->first, row.score);
    r->second = std::max(r->second, row.score);
  }
  return r;
}

CurveReport DifficultyCurve(const EmbeddingMatrix& x, const Corpus& c, Axis axis,
                            std::size_t n_bins, const AssignOptions& options) {
  const auto range = AxisRange(c, axis);
  if (!range) throw DataError(fmt::format("no groups qualify for the {} axis", ToString(axis)));
  if (axis == Axis::kVariability) {
    Assignment a = Assign(x, ComputeCentroids(x, c), c, options);
    PurityScores s = PurityIpF1(a);
    return BinAndCurve(GroupF1(c, a, s.locals, axis), n_bins, axis, range);
  }
  const auto positions = AmbiguousPositions(c);
  const Corpus sub = c.Select(positions);
  const EmbeddingMatrix xs = x.SelectRows(positions, sub);
  Assignment a = Assign(xs, ComputeCentroids(xs, sub), sub, options);
  PurityScores s = PurityIpF1(a);
  return BinAndCurve(GroupF1(sub, a, s.locals, axis), n_bins, axis, range);
}

}  // namespace entsep
