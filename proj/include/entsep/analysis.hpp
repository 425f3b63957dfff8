#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"
#include "entsep/metrics.hpp"

namespace entsep {

enum class Axis { kAmbiguity, kVariability };

std::string ToString(Axis axis);
Axis ParseAxis(const std::string& s);

// Score of one difficulty group: a mention string (ambiguity) or an entity
// (variability).
struct GroupScore {
  std::string key;
  double difficulty = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Purity/IP F1 over a subset of instances, using the assignment's labels
// restricted to those instances.
double RestrictedF1(const Assignment& a, std::span<const std::size_t> positions);

// Ambiguity: one row per mention group with entropy > 0, scored by
// RestrictedF1 over the group. Variability: one row per entity with 2+
// distinct surface forms, scored by its local F1.
std::vector<GroupScore> GroupF1(const Corpus& c, const Assignment& a,
                                std::span<const LocalScore> locals, Axis axis);

struct CurveBin {
  double x_low = 0.0;  // bounds and center on the normalized [0, 1] axis
  double x_high = 0.0;
  double x_center = 0.0;
  double mean_f1 = 0.0;
  std::size_t support = 0;
};

struct CurveReport {
  Axis axis = Axis::kAmbiguity;
  double range_min = 0.0;  // raw difficulty mapped to 0
  double range_max = 0.0;  // raw difficulty mapped to 1
  std::size_t n_bins = 0;
  std::vector<CurveBin> bins;  // non-empty bins only, ascending
  double auc = 0.0;
};

using DifficultyRange = std::pair<double, double>;

// Equal-width bins over the normalized difficulty range. The range defaults to
// the observed min/max; values outside an explicit range are clamped.
CurveReport BinAndCurve(std::span<const std::pair<double, double>> pairs, std::size_t n_bins,
                        Axis axis = Axis::kAmbiguity,
                        std::optional<DifficultyRange> range = std::nullopt);
CurveReport BinAndCurve(std::span<const GroupScore> scores, std::size_t n_bins, Axis axis,
                        std::optional<DifficultyRange> range = std::nullopt);

// Observed difficulty range over the whole corpus: entropies of ambiguous
// mentions, or dissimilarities of entities with 2+ surface forms. Empty when
// no group qualifies.
std::optional<DifficultyRange> AxisRange(const Corpus& c, Axis axis);

// Assigns, groups and bins one axis against the corpus-wide range. Ambiguity
// is assigned within the ambiguous subset. Throws DataError when the axis has
// no qualifying groups.
CurveReport DifficultyCurve(const EmbeddingMatrix& x, const Corpus& c, Axis axis,
                            std::size_t n_bins, const AssignOptions& options = {});

// Trapezoids over (x_center, mean_f1), holding the first and last values flat
// out to 0 and 1.
double Auc(const CurveReport& curve);

struct SweepConfig {
  std::vector<std::size_t> dims;
  double epsilon = 0.005;
};

struct SweepPoint {
  std::size_t dim = 0;
  double f1 = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> table;
  std::size_t chosen_dim = 0;
  bool converged = false;
};

// Smallest dim after which every successive |dF1/dd| is below epsilon. When
// the last slope still exceeds epsilon, returns the largest dim unconverged.
SweepResult SelectDimension(std::vector<SweepPoint> table, double epsilon);

// LDA-reduce to each dim (leading discriminant directions of one fit) and score.
SweepResult LdaDimensionSweep(const EmbeddingMatrix& x, const Corpus& c, const SweepConfig& cfg,
                              const AssignOptions& options = {});

// Random normal embeddings generated directly at each dim.
SweepResult RandomDimensionSweep(const Corpus& c, const SweepConfig& cfg, std::uint64_t seed,
                                 const AssignOptions& options = {});

// Similarity matrix 1 - |e_i - e_j| / max |e_k - e_l| over sampled rows.
struct RSMatrix {
  std::vector<std::size_t> indices;
  RowMatrix sim;
  std::size_t n() const { return indices.size(); }
};

// Sorted sample of `count` distinct positions from [0, total). A count above
// total is clamped; `clamped` reports it.
std::vector<std::size_t> SampleIndices(std::size_t total, std::size_t count, std::uint64_t seed,
                                       bool* clamped = nullptr);

RSMatrix BuildRsm(const Eigen::MatrixXd& rows, std::vector<std::size_t> indices);
RSMatrix BuildRsm(const EmbeddingMatrix& x, std::span<const std::size_t> indices);
RSMatrix BuildRsm(const EmbeddingMatrix& x, std::size_t sample, std::uint64_t seed,
                  bool* clamped = nullptr);

// Spearman correlation (average ranks for ties) of the strict upper triangles.
double Rsa(const RSMatrix& a, const RSMatrix& b);

// Fractional ranks, ties sharing their average rank (1-based).
std::vector<double> AverageRanks(std::span<const double> values);
double Spearman(std::span<const double> a, std::span<const double> b);

}  // namespace entsep
