#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entsep/analysis.hpp"
#include "entsep/corpus.hpp"
#include "entsep/probe.hpp"
#include "entsep/report.hpp"

namespace entsep {

struct ModelSpec {
  std::string name;
  std::vector<int> layers;
  std::map<int, std::string> embeddings;  // layer -> EMB1 path
};

struct BaselineSpec {
  std::string kind;  // random | unique-mention | static
  std::optional<std::size_t> dim;  // required for generated kinds without reduce_dim
  std::string table;               // static only
};

struct RunConfig {
  std::string corpus;
  FilterOptions filter;
  std::string skip_file;
  std::vector<ModelSpec> models;
  std::vector<BaselineSpec> baselines;
  std::optional<std::size_t> reduce_dim;
  std::optional<SweepConfig> sweep;
  std::vector<Axis> axes{Axis::kAmbiguity, Axis::kVariability};
  std::size_t bins = 10;
  std::optional<ProbeConfig> probe;
  std::optional<std::size_t> rsa_sample;
  std::string output_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Config as written, minus output_dir and workers; echoed into the manifest.
  Json echo;
};

// Parses a run config. Relative paths resolve against the config file's
// directory. Throws UsageError on malformed input.
RunConfig ParseRunConfig(const Json& j, const std::string& base_dir = ".");
RunConfig LoadRunConfig(const std::string& path);

// Checks that every referenced file exists, every declared layer has an
// embedding path, and the settings are consistent. Touches no outputs.
void Preflight(const RunConfig& cfg);

// ingest/filter -> reduce or generate -> score -> difficulty -> curves/AUC ->
// optional sweep, probe, RSA. A failing stage throws an Error naming it.
ReportBundle RunPipeline(const RunConfig& cfg);

// RunPipeline followed by EmitReport into cfg.output_dir.
ReportBundle RunAndEmit(const RunConfig& cfg);

}  // namespace entsep
