#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entsep/analysis.hpp"
#include "entsep/difficulty.hpp"
#include "entsep/metrics.hpp"
#include "entsep/probe.hpp"

namespace entsep {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "entsep 0.1.0";
inline constexpr int kReportSchemaVersion = 1;

Json ToJson(const PartitionScores& s, bool per_entity = true);
Json ToJson(const CurveReport& c);
Json ToJson(const SweepResult& s);
Json ToJson(const ProbeResult& r);
Json ToJson(const std::vector<DifficultyRow>& rows);

// Shortest decimal that round-trips.
std::string FormatNumber(double v);

// Header: x_low,x_high,x_center,mean_f1,support
std::string CurveCsv(const CurveReport& c);
// Square matrix with a leading name column.
std::string MatrixCsv(const std::vector<std::string>& names, const RowMatrix& m);
std::string DifficultyCsv(const std::vector<DifficultyRow>& rows);

// Writes the whole string or throws DataError.
void WriteText(const std::string& path, const std::string& content);

// Scores, curves and optional probe result for one embedding source: a model
// layer or a baseline.
struct SourceResult {
  std::string name;
  std::string kind;  // "model", "random", "unique-mention", "static"
  std::string model;
  std::optional<int> layer;
  std::size_t dim = 0;
  PartitionScores scores;
  std::optional<PartitionScores> ambiguous_scores;  // on the ambiguous subset
  std::map<Axis, CurveReport> curves;
  std::optional<ProbeResult> probe;
};

struct ReportBundle {
  Json manifest;
  std::vector<DifficultyRow> ambiguity;
  std::vector<DifficultyRow> variability;
  std::vector<SourceResult> sources;
  std::vector<std::pair<std::string, SweepResult>> sweeps;
  std::vector<std::string> rsa_names;
  RowMatrix rsa;
};

// Layer x model AUC table for one axis (baselines excluded). Missing cells
// are left empty.
std::string AucTableCsv(const std::vector<SourceResult>& sources, Axis axis);

// Writes manifest.json, scores.json, curves.json, per-curve CSVs, AUC tables,
// difficulty tables, and sweep/probe/RSA outputs when present. Output is a
// pure function of the bundle.
void EmitReport(const ReportBundle& bundle, const std::string& dir);

}  // namespace entsep
