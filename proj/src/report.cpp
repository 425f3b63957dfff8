#include "entsep/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "entsep/error.hpp"

namespace entsep {
namespace fs = std::filesystem;

std::string FormatNumber(double v) { return fmt::format("{}", v); }

Json ToJson(const PartitionScores& s, bool per_entity) {
  Json j;
  j["purity"] = s.purity;
  j["ip"] = s.ip;
  j["f1"] = s.f1;
  j["ari"] = s.ari;
  j["ari_degenerate"] = s.ari_degenerate;
  j["empty_clusters"] = s.empty_clusters;
  if (per_entity) {
    Json rows = Json::array();
    for (const LocalScore& l : s.locals) {
      rows.push_back({{"entity", l.entity},
                      {"local_purity", l.local_purity},
                      {"local_ip", l.local_ip},
                      {"local_f1", l.local_f1},
                      {"class_size", l.class_size},
                      {"cluster_size", l.cluster_size}});
    }
    j["per_entity"] = std::move(rows);
  }
  return j;
}

Json ToJson(const CurveReport& c) {
  Json j;
  j["axis"] = ToString(c.axis);
  j["range"] = {c.range_min, c.range_max};
  j["n_bins"] = c.n_bins;
  Json bins = Json::array();
  for (const CurveBin& b : c.bins)
    bins.push_back({{"x_low", b.x_low},
                    {"x_high", b.x_high},
                    {"x_center", b.x_center},
                    {"mean_f1", b.mean_f1},
                    {"support", b.support}});
  j["bins"] = std::move(bins);
  j["auc"] = c.auc;
  return j;
}

Json ToJson(const SweepResult& s) {
  Json j;
  Json table = Json::array();
  for (const SweepPoint& p : s.table) table.push_back({{"dim", p.dim}, {"f1", p.f1}});
  j["table"] = std::move(table);
  j["chosen_dim"] = s.chosen_dim;
  j["converged"] = s.converged;
  return j;
}

Json ToJson(const ProbeResult& r) {
  Json j;
  j["test_f1"] = r.test_f1;
  j["test_macro_f1"] = r.test_macro_f1;
  j["fold_f1s"] = r.fold_f1s;
  j["fold_macro_f1s"] = r.fold_macro_f1s;
  j["train_f1"] = r.train_f1;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  j["epochs_run"] = r.stats.epochs_run;
  j["early_stopped"] = r.stats.early_stopped;
  j["final_loss"] = r.stats.epoch_loss.empty() ? 0.0 : r.stats.epoch_loss.back();
  return j;
}

Json ToJson(const std::vector<DifficultyRow>& rows) {
  Json out = Json::array();
  for (const DifficultyRow& r : rows)
    out.push_back({{"key", r.key}, {"score", r.score}, {"support", r.support}});
  return out;
}

std::string CurveCsv(const CurveReport& c) {
  std::string out = "x_low,x_high,x_center,mean_f1,support\n";
  for (const CurveBin& b : c.bins)
    out += fmt::format("{},{},{},{},{}\n", FormatNumber(b.x_low), FormatNumber(b.x_high),
                       FormatNumber(b.x_center), FormatNumber(b.mean_f1), b.support);
  return out;
}

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

std::string FileSafe(const std::string& s) {
  std::string out;
  for (char ch : s) {
    bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
              ch == '-' || ch == '.';
    out += ok ? ch : '_';
  }
  return out;
}

}  // namespace

std::string MatrixCsv(const std::vector<std::string>& names, const RowMatrix& m) {
  std::string out = "source";
  for (const auto& n : names) out += "," + CsvField(n);
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += CsvField(names[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + FormatNumber(m(i, j));
    out += '\n';
  }
  return out;
}

std::string DifficultyCsv(const std::vector<DifficultyRow>& rows) {
  std::string out = "key,score,support\n";
  for (const DifficultyRow& r : rows)
    out += fmt::format("{},{},{}\n", CsvField(r.key), FormatNumber(r.score), r.support);
  return out;
}

void WriteText(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw DataError(fmt::format("write failed for '{}'", path));
}

std::string AucTableCsv(const std::vector<SourceResult>& sources, Axis axis) {
  std::vector<std::string> models;
  std::set<int> layers;
  std::map<std::pair<std::string, int>, double> cell;
  for (const SourceResult& s : sources) {
    if (s.kind != "model" || !s.layer) continue;
    if (std::find(models.begin(), models.end(), s.model) == models.end()) models.push_back(s.model);
    layers.insert(*s.layer);
    if (auto it = s.curves.find(axis); it != s.curves.end())
      cell[{s.model, *s.layer}] = it->second.auc;
  }
  std::string out = "layer";
  for (const auto& m : models) out += "," + CsvField(m);
  out += '\n';
  for (int layer : layers) {
    out += std::to_string(layer);
    for (const auto& m : models) {
      out += ',';
      if (auto it = cell.find({m, layer}); it != cell.end()) out += FormatNumber(it->second);
    }
    out += '\n';
  }
  return out;
}

void EmitReport(const ReportBundle& bundle, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory '{}': {}", dir, ec.message()));
  auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  WriteText(path("manifest.json"), bundle.manifest.dump(2) + "\n");
  WriteText(path("difficulty_ambiguity.csv"), DifficultyCsv(bundle.ambiguity));
  WriteText(path("difficulty_variability.csv"), DifficultyCsv(bundle.variability));

  Json scores;
  scores["schema_version"] = kReportSchemaVersion;
  Json curves;
  curves["schema_version"] = kReportSchemaVersion;
  Json score_rows = Json::array(), curve_rows = Json::array();
  std::string baseline_auc = "source,kind,ambiguity_auc,variability_auc\n";
  for (const SourceResult& s : bundle.sources) {
    Json row;
    row["source"] = s.name;
    row["kind"] = s.kind;
    row["model"] = s.model;
    row["layer"] = s.layer ? Json(*s.layer) : Json();
    row["dim"] = s.dim;
    row["scores"] = ToJson(s.scores);
    if (s.ambiguous_scores) row["ambiguous_subset_scores"] = ToJson(*s.ambiguous_scores, false);
    if (s.probe) row["probe"] = ToJson(*s.probe);
    score_rows.push_back(std::move(row));

    Json crow;
    crow["source"] = s.name;
    for (const auto& [axis, curve] : s.curves) {
      crow[ToString(axis)] = ToJson(curve);
      WriteText(path(fmt::format("curve_{}_{}.csv", FileSafe(s.name), ToString(axis))),
                CurveCsv(curve));
    }
    curve_rows.push_back(std::move(crow));

    if (s.kind != "model") {
      auto auc = [&](Axis a) {
        auto it = s.curves.find(a);
        return it == s.curves.end() ? std::string() : FormatNumber(it->second.auc);
      };
      baseline_auc += fmt::format("{},{},{},{}\n", CsvField(s.name), s.kind,
                                  auc(Axis::kAmbiguity), auc(Axis::kVariability));
    }
  }
  scores["sources"] = std::move(score_rows);
  curves["sources"] = std::move(curve_rows);
  WriteText(path("scores.json"), scores.dump(2) + "\n");
  WriteText(path("curves.json"), curves.dump(2) + "\n");
  WriteText(path("auc_ambiguity.csv"), AucTableCsv(bundle.sources, Axis::kAmbiguity));
  WriteText(path("auc_variability.csv"), AucTableCsv(bundle.sources, Axis::kVariability));
  WriteText(path("auc_baselines.csv"), baseline_auc);

  if (!bundle.sweeps.empty()) {
    Json sweeps;
    sweeps["schema_version"] = kReportSchemaVersion;
    Json rows = Json::array();
    std::string csv = "source,dim,f1\n";
    for (const auto& [name, result] : bundle.sweeps) {
      Json r = ToJson(result);
      r["source"] = name;
      rows.push_back(std::move(r));
      for (const SweepPoint& p : result.table)
        csv += fmt::format("{},{},{}\n", CsvField(name), p.dim, FormatNumber(p.f1));
    }
    sweeps["sweeps"] = std::move(rows);
    WriteText(path("sweep.json"), sweeps.dump(2) + "\n");
    WriteText(path("sweep.csv"), csv);
  }

  if (!bundle.rsa_names.empty()) {
    Json rsa;
    rsa["schema_version"] = kReportSchemaVersion;
    rsa["sources"] = bundle.rsa_names;
    Json m = Json::array();
    for (Eigen::Index i = 0; i < bundle.rsa.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(bundle.rsa.cols()));
      for (Eigen::Index j = 0; j < bundle.rsa.cols(); ++j)
        row[static_cast<std::size_t>(j)] = bundle.rsa(i, j);
      m.push_back(row);
    }
    rsa["matrix"] = std::move(m);
    WriteText(path("rsa.json"), rsa.dump(2) + "\n");
    WriteText(path("rsa.csv"), MatrixCsv(bundle.rsa_names, bundle.rsa));
  }
}

}  // namespace entsep
