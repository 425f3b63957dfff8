#include "entsep/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "entsep/difficulty.hpp"
#include "entsep/embeddings.hpp"
#include "entsep/error.hpp"
#include "entsep/metrics.hpp"
#include "entsep/reduction.hpp"
#include "entsep/util.hpp"

namespace entsep {
namespace fs = std::filesystem;
namespace {

std::string Resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

// Runs one stage, prefixing any error with the stage name.
template <typename Fn>
auto RunStage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("stage '{}': {}", stage, e.what()));
  } catch (const std::bad_alloc&) {
    throw Error(ExitCode::kNumeric, fmt::format("stage '{}': out of memory", stage));
  }
}

Json DecisionFlags() {
  Json d;
  d["mention_grouping"] = "exact case-sensitive surface string";
  d["token_cap_counts"] = "single sentence (not the repeated input)";
  d["filter_order"] = "token cap and skip list first, then minimum entity count";
  d["ambiguity_entropy_log"] = "natural";
  d["variability_mentions"] = "distinct surface strings";
  d["character_unit"] = "unicode scalar value";
  d["nearest_centroid_ties"] = "lexicographically smallest entity id";
  d["majority_class_ties"] = "lexicographically smallest entity id";
  d["empty_clusters"] = "zero weight in purity, counted";
  d["lda"] = "refit per embedding matrix on the full labeled corpus (supervision leak)";
  d["lda_shrinkage"] = "1e-4 * trace(S_W) / dim";
  d["generated_baselines"] = "random and unique-mention generated directly at the target dim";
  d["ambiguity_scoring"] =
      "ambiguous subset rescored; per-mention F1 restricted to the group under subset-wide "
      "assignments";
  d["difficulty_axis_normalization"] = "global per dataset";
  d["auc"] = "trapezoids over bin centers, flat extrapolation to [0, 1]";
  d["probe_metric"] = "micro-F1 headline, macro-F1 reported";
  d["probe_protocol"] = "stratified holdout, k-fold CV on the training part, final fit on it";
  d["static_tokenization"] = "whitespace; all-OOV mentions get a string-seeded normal vector";
  d["seed_fanout"] = "per-stage seeds hashed from the global seed and stage name";
  return d;
}

struct Source {
  std::string name;
  std::string kind;
  std::string model;
  std::optional<int> layer;
  std::function<EmbeddingMatrix()> load;  // native (unreduced) embeddings
  std::string table;                      // static only
};

}  // namespace

RunConfig ParseRunConfig(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw UsageError("run config must be a JSON object");
  RunConfig cfg;
  try {
    cfg.corpus = Resolve(base_dir, j.at("corpus").get<std::string>());
    cfg.filter.min_count = j.value("min_count", cfg.filter.min_count);
    cfg.filter.max_tokens = j.value("max_tokens", cfg.filter.max_tokens);
    if (j.contains("skip_file") && !j["skip_file"].is_null())
      cfg.skip_file = Resolve(base_dir, j["skip_file"].get<std::string>());
    for (const auto& m : j.value("models", Json::array())) {
      ModelSpec spec;
      spec.name = m.at("name").get<std::string>();
      spec.layers = m.at("layers").get<std::vector<int>>();
      const Json paths = m.value("embeddings", Json::object());
      for (const auto& [layer, path] : paths.items())
        spec.embeddings[std::stoi(layer)] = Resolve(base_dir, path.get<std::string>());
      cfg.models.push_back(std::move(spec));
    }
    for (const auto& b : j.value("baselines", Json::array())) {
      BaselineSpec spec;
      spec.kind = b.at("kind").get<std::string>();
      if (b.contains("dim")) spec.dim = b["dim"].get<std::size_t>();
      if (b.contains("table")) spec.table = Resolve(base_dir, b["table"].get<std::string>());
      cfg.baselines.push_back(std::move(spec));
    }
    if (j.contains("reduce_dim") && !j["reduce_dim"].is_null())
      cfg.reduce_dim = j["reduce_dim"].get<std::size_t>();
    if (j.contains("sweep") && !j["sweep"].is_null()) {
      SweepConfig s;
      s.dims = j["sweep"].at("dims").get<std::vector<std::size_t>>();
      s.epsilon = j["sweep"].value("epsilon", s.epsilon);
      cfg.sweep = s;
    }
    if (j.contains("axes")) {
      cfg.axes.clear();
      for (const auto& a : j["axes"]) cfg.axes.push_back(ParseAxis(a.get<std::string>()));
    }
    cfg.bins = j.value("bins", cfg.bins);
    if (j.contains("probe") && !j["probe"].is_null()) {
      const auto& p = j["probe"];
      if (p.is_boolean()) {
        if (p.get<bool>()) cfg.probe = ProbeConfig{};
      } else {
        ProbeConfig pc;
        pc.learning_rate = p.value("learning_rate", pc.learning_rate);
        pc.batch_size = p.value("batch_size", pc.batch_size);
        pc.max_epochs = p.value("max_epochs", pc.max_epochs);
        pc.beta1 = p.value("beta1", pc.beta1);
        pc.beta2 = p.value("beta2", pc.beta2);
        pc.adam_epsilon = p.value("adam_epsilon", pc.adam_epsilon);
        pc.patience = p.value("patience", pc.patience);
        pc.min_delta = p.value("min_delta", pc.min_delta);
        pc.test_fraction = p.value("test_fraction", pc.test_fraction);
        pc.folds = p.value("folds", pc.folds);
        cfg.probe = pc;
      }
    }
    if (j.contains("rsa") && !j["rsa"].is_null())
      cfg.rsa_sample = j["rsa"].value("sample", std::size_t{2000});
    cfg.output_dir = Resolve(base_dir, j.value("output_dir", std::string("report")));
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.workers = j.value("workers", 1u);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("bad run config: {}", e.what()));
  } catch (const std::invalid_argument&) {
    throw UsageError("bad run config: embedding keys must be layer numbers");
  }
  cfg.echo = j;
  cfg.echo.erase("output_dir");
  cfg.echo.erase("workers");
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot open config '{}'", path));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  return ParseRunConfig(j, fs::path(path).parent_path().string());
}

void Preflight(const RunConfig& cfg) {
  auto need_file = [](const std::string& what, const std::string& p) {
    if (p.empty() || !fs::is_regular_file(p))
      throw UsageError(fmt::format("{} '{}' does not exist", what, p));
  };
  need_file("corpus", cfg.corpus);
  if (!cfg.skip_file.empty()) need_file("skip file", cfg.skip_file);
  if (cfg.filter.min_count < 1 || cfg.filter.max_tokens < 1)
    throw UsageError("min_count and max_tokens must be >= 1");
  std::set<std::string> names;
  for (const ModelSpec& m : cfg.models) {
    if (m.name.empty()) throw UsageError("model with empty name");
    if (!names.insert(m.name).second) throw UsageError(fmt::format("duplicate model '{}'", m.name));
    if (m.layers.empty()) throw UsageError(fmt::format("model '{}' declares no layers", m.name));
    for (int layer : m.layers) {
      auto it = m.embeddings.find(layer);
      if (it == m.embeddings.end())
        throw UsageError(fmt::format("model '{}': no embeddings for declared layer {}", m.name,
                                     layer));
      need_file(fmt::format("model '{}' layer {} embeddings", m.name, layer), it->second);
    }
  }
  std::set<std::string> kinds;
  for (const BaselineSpec& b : cfg.baselines) {
    if (b.kind != "random" && b.kind != "unique-mention" && b.kind != "static")
      throw UsageError(fmt::format("unknown baseline kind '{}'", b.kind));
    if (!kinds.insert(b.kind).second)
      throw UsageError(fmt::format("baseline '{}' listed twice", b.kind));
    if (b.kind == "static") need_file("static vector table", b.table);
    if (b.kind != "static" && !cfg.reduce_dim && !b.dim)
      throw UsageError(fmt::format("baseline '{}' needs a dim (or set reduce_dim)", b.kind));
    if (b.dim && *b.dim == 0) throw UsageError("baseline dim must be >= 1");
  }
  if (cfg.models.empty() && cfg.baselines.empty())
    throw UsageError("config declares no models and no baselines");
  if (cfg.reduce_dim && *cfg.reduce_dim == 0) throw UsageError("reduce_dim must be >= 1");
  if (cfg.axes.empty()) throw UsageError("no difficulty axes selected");
  if (cfg.bins == 0) throw UsageError("bins must be >= 1");
  if (cfg.sweep) {
    const auto& d = cfg.sweep->dims;
    if (d.empty() || d.front() == 0 || !std::is_sorted(d.begin(), d.end()) ||
        std::adjacent_find(d.begin(), d.end()) != d.end())
      throw UsageError("sweep dims must be positive and strictly ascending");
    if (!(cfg.sweep->epsilon > 0.0)) throw UsageError("sweep epsilon must be positive");
  }
  if (cfg.probe) cfg.probe->Validate();
  if (cfg.rsa_sample && *cfg.rsa_sample < 3) throw UsageError("rsa sample must be >= 3");
}

ReportBundle RunPipeline(const RunConfig& cfg) {
  RunStage("preflight", [&] { Preflight(cfg); });
  ReportBundle bundle;
  Json warnings = Json::array();
  Json seeds;
  auto seed_for = [&](const std::string& stage) {
    std::uint64_t s = StageSeed(cfg.seed, stage);
    seeds[stage] = s;
    return s;
  };
  const AssignOptions assign{cfg.workers, 256};

  Corpus raw = RunStage("ingest", [&] { return Ingest(cfg.corpus); });
  Corpus corpus = RunStage("filter", [&] {
    FilterOptions f = cfg.filter;
    if (!cfg.skip_file.empty()) f.skip_ids = ReadSkipFile(cfg.skip_file);
    return Filter(raw, f);
  });
  const auto amb_positions = AmbiguousPositions(corpus);
  const Corpus amb_corpus = corpus.Select(amb_positions);

  // Difficulty tables and the shared x-ranges.
  std::optional<DifficultyRange> amb_range, var_range;
  RunStage("difficulty", [&] {
    bundle.ambiguity = AllMentionAmbiguities(corpus);
    bundle.variability = AllMentionVariabilities(corpus);
    amb_range = AxisRange(corpus, Axis::kAmbiguity);
    var_range = AxisRange(corpus, Axis::kVariability);
  });
  auto wants = [&](Axis a) { return std::find(cfg.axes.begin(), cfg.axes.end(), a) != cfg.axes.end(); };
  if (wants(Axis::kAmbiguity) && !amb_range)
    warnings.push_back("no ambiguous mentions: ambiguity curves skipped");
  if (wants(Axis::kVariability) && !var_range)
    warnings.push_back("no entity has 2+ surface forms: variability curves skipped");

  std::vector<Source> sources;
  for (const ModelSpec& m : cfg.models) {
    for (int layer : m.layers) {
      std::string path = m.embeddings.at(layer);
      sources.push_back({fmt::format("{}/layer{}", m.name, layer), "model", m.name, layer,
                         [path, &corpus] { return Load(path, corpus); }, ""});
    }
  }
  for (const BaselineSpec& b : cfg.baselines) {
    const std::size_t dim = cfg.reduce_dim ? *cfg.reduce_dim : b.dim.value_or(0);
    if (b.kind == "random") {
      std::uint64_t s = seed_for("baseline/random");
      sources.push_back({"random", "random", "", std::nullopt,
                         [&corpus, dim, s] { return GenRandom(corpus, dim, s); }, ""});
    } else if (b.kind == "unique-mention") {
      std::uint64_t s = seed_for("baseline/unique-mention");
      sources.push_back({"unique-mention", "unique-mention", "", std::nullopt,
                         [&corpus, dim, s] { return GenUniqueMention(corpus, dim, s); }, ""});
    } else {
      std::string table = b.table;
      sources.push_back({"static", "static", "", std::nullopt,
                         [&corpus, table, &warnings] {
                           auto r = GenStaticLookup(corpus, LoadStaticTable(table));
                           if (!r.all_oov.empty())
                             warnings.push_back(fmt::format(
                                 "static: {} instances had no known token", r.all_oov.size()));
                           return std::move(r.matrix);
                         },
                         table});
    }
  }

  std::map<std::string, EmbeddingMatrix> reduced;  // kept for RSA
  for (const Source& src : sources) {
    SourceResult res;
    res.name = src.name;
    res.kind = src.kind;
    res.model = src.model;
    res.layer = src.layer;
    const std::string stage = "score/" + src.name;
    EmbeddingMatrix x = RunStage("load/" + src.name, src.load);
    if (cfg.reduce_dim && (src.kind == "model" || src.kind == "static")) {
      x = RunStage("reduce/" + src.name, [&] {
        return Transform(FitLda(x, corpus, *cfg.reduce_dim), x);
      });
    }
    res.dim = x.dim();
    RunStage(stage, [&] {
      CentroidSet b = ComputeCentroids(x, corpus);
      Assignment a = Assign(x, b, corpus, assign);
      res.scores = Score(a);
      if (res.scores.ari_degenerate) warnings.push_back(src.name + ": degenerate ARI");
      if (wants(Axis::kVariability) && var_range) {
        auto groups = GroupF1(corpus, a, res.scores.locals, Axis::kVariability);
        res.curves[Axis::kVariability] =
            BinAndCurve(groups, cfg.bins, Axis::kVariability, var_range);
      }
      if (wants(Axis::kAmbiguity) && amb_range) {
        EmbeddingMatrix xa = x.SelectRows(amb_positions, amb_corpus);
        Assignment aa = Assign(xa, ComputeCentroids(xa, amb_corpus), amb_corpus, assign);
        res.ambiguous_scores = Score(aa);
        auto groups = GroupF1(amb_corpus, aa, res.ambiguous_scores->locals, Axis::kAmbiguity);
        res.curves[Axis::kAmbiguity] = BinAndCurve(groups, cfg.bins, Axis::kAmbiguity, amb_range);
      }
    });
    if (cfg.probe) {
      std::uint64_t s = seed_for("probe/" + src.name);
      res.probe = RunStage("probe/" + src.name,
                           [&] { return TrainProbe(x, Labels(corpus), *cfg.probe, s); });
    }
    reduced.emplace(src.name, std::move(x));
    bundle.sources.push_back(std::move(res));
  }

  // Best layer per model: highest mean AUC over the computed axes.
  std::vector<const Source*> summary;  // best layers, then baselines
  for (const ModelSpec& m : cfg.models) {
    const Source* best = nullptr;
    double best_auc = -1.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (sources[i].model != m.name) continue;
      const auto& curves = bundle.sources[i].curves;
      double total = 0.0;
      for (const auto& [_, c] : curves) total += c.auc;
      double mean = curves.empty() ? bundle.sources[i].scores.f1
                                   : total / static_cast<double>(curves.size());
      if (mean > best_auc) {
        best_auc = mean;
        best = &sources[i];
      }
    }
    if (best) summary.push_back(best);
  }
  for (const Source& s : sources)
    if (s.kind != "model") summary.push_back(&s);

  if (cfg.sweep) {
    const std::size_t classes = corpus.by_entity().size();
    for (const Source* src : summary) {
      if (src->kind == "unique-mention") continue;
      std::string stage = "sweep/" + src->name;
      RunStage(stage, [&] {
        if (src->kind == "random") {
          bundle.sweeps.emplace_back(
              src->name, RandomDimensionSweep(corpus, *cfg.sweep, seeds["baseline/random"], assign));
          return;
        }
        EmbeddingMatrix x = src->load();
        SweepConfig feasible = *cfg.sweep;
        std::erase_if(feasible.dims, [&](std::size_t d) { return d > classes - 1 || d > x.dim(); });
        if (feasible.dims.empty()) {
          warnings.push_back(src->name + ": no sweep dim is feasible for LDA");
          return;
        }
        if (feasible.dims.size() < cfg.sweep->dims.size())
          warnings.push_back(fmt::format("{}: sweep dims above {} skipped (LDA rank limit)",
                                         src->name, std::min(classes - 1, x.dim())));
        bundle.sweeps.emplace_back(src->name, LdaDimensionSweep(x, corpus, feasible, assign));
      });
    }
    for (const auto& [name, r] : bundle.sweeps)
      if (!r.converged) warnings.push_back(name + ": dimension sweep did not converge");
  }

  if (cfg.rsa_sample && summary.size() >= 2) {
    RunStage("rsa", [&] {
      bool clamped = false;
      auto idx = SampleIndices(corpus.size(), *cfg.rsa_sample, seed_for("rsa"), &clamped);
      if (clamped)
        warnings.push_back(fmt::format("rsa: sample {} clamped to corpus size {}",
                                       *cfg.rsa_sample, corpus.size()));
      std::vector<RSMatrix> rsms;
      for (const Source* s : summary) {
        bundle.rsa_names.push_back(s->name);
        rsms.push_back(BuildRsm(reduced.at(s->name), idx));
      }
      const auto n = static_cast<Eigen::Index>(rsms.size());
      bundle.rsa = RowMatrix::Identity(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
          bundle.rsa(i, j) = bundle.rsa(j, i) =
              Rsa(rsms[static_cast<std::size_t>(i)], rsms[static_cast<std::size_t>(j)]);
    });
  } else if (cfg.rsa_sample) {
    warnings.push_back("rsa: fewer than two sources, skipped");
  }

  Json& m = bundle.manifest;
  m["version"] = kVersion;
  m["schema_version"] = kReportSchemaVersion;
  m["config"] = cfg.echo;
  m["corpus"] = {{"hash", corpus.hash()},
                 {"ingested_instances", raw.size()},
                 {"instances", corpus.size()},
                 {"entities", corpus.by_entity().size()},
                 {"mentions", corpus.by_mention().size()},
                 {"ambiguous_instances", amb_corpus.size()},
                 {"ambiguous_entities", amb_corpus.by_entity().size()},
                 {"ambiguous_mentions", amb_corpus.by_mention().size()}};
  m["seeds"] = seeds;
  m["decisions"] = DecisionFlags();
  Json unique = Json::array();
  for (const auto& w : warnings)
    if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(w);
  m["warnings"] = unique;
  return bundle;
}

ReportBundle RunAndEmit(const RunConfig& cfg) {
  ReportBundle bundle = RunPipeline(cfg);
  RunStage("emit", [&] { EmitReport(bundle, cfg.output_dir); });
  return bundle;
}

}  // namespace entsep
