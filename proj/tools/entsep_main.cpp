// Command-line front end for the entsep library.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "entsep/analysis.hpp"
#include "entsep/corpus.hpp"
#include "entsep/difficulty.hpp"
#include "entsep/embeddings.hpp"
#include "entsep/error.hpp"
#include "entsep/metrics.hpp"
#include "entsep/pipeline.hpp"
#include "entsep/probe.hpp"
#include "entsep/reduction.hpp"
#include "entsep/report.hpp"

namespace {

using namespace entsep;

void Emit(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    WriteText(out, text);
  }
}

std::vector<std::size_t> ParseDims(const std::string& s) {
  std::vector<std::size_t> dims;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v == 0)
      throw UsageError(fmt::format("bad dimension '{}' in --dims", item));
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty()) throw UsageError("--dims is empty");
  return dims;
}

struct CorpusArgs {
  std::string path;
  std::int64_t min_count = 1;
  std::int64_t max_tokens = 500;
  std::string skip;
  bool filter = false;

  void Add(CLI::App* app, bool required = true) {
    app->add_option("--labels,--corpus", path, "Corpus JSONL")->required(required);
  }

  Corpus Load() const {
    Corpus c = Ingest(path);
    if (!filter) return c;
    FilterOptions f;
    f.min_count = min_count;
    f.max_tokens = max_tokens;
    if (!skip.empty()) f.skip_ids = ReadSkipFile(skip);
    return Filter(c, f);
  }
};

int Run(int argc, char** argv) {
  CLI::App app{"Entity separability analysis for embedding spaces"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  unsigned workers = 1;
  app.add_option("--workers", workers, "Worker threads for assignment")
      ->check(CLI::PositiveNumber);
  auto assign = [&] { return AssignOptions{workers, 256}; };

  // ingest
  CorpusArgs ingest;
  ingest.filter = true;
  ingest.min_count = 5;
  std::string ingest_out;
  auto* c_ingest = app.add_subcommand("ingest", "Validate and filter a corpus");
  ingest.Add(c_ingest);
  c_ingest->add_option("--min-count", ingest.min_count, "Minimum instances per entity");
  c_ingest->add_option("--max-tokens", ingest.max_tokens, "Maximum tokens per instance");
  c_ingest->add_option("--skip", ingest.skip, "Skip file of instance ids")
      ->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest_out, "Filtered JSONL output")->required();
  c_ingest->callback([&] {
    Corpus c = ingest.Load();
    WriteJsonl(c, ingest_out);
    Json stats;
    stats["instances"] = c.size();
    stats["entities"] = c.by_entity().size();
    stats["mentions"] = c.by_mention().size();
    stats["ambiguous_instances"] = AmbiguousPositions(c).size();
    stats["corpus_hash"] = c.hash();
    Emit(stats, "");
  });

  // gen-baseline
  CorpusArgs gen;
  std::string gen_kind, gen_table, gen_out;
  std::size_t gen_dim = 0;
  std::uint64_t gen_seed = 0;
  auto* c_gen = app.add_subcommand("gen-baseline", "Generate a baseline embedding matrix");
  gen.Add(c_gen);
  c_gen->add_option("--kind", gen_kind, "random | unique-mention | static")
      ->required()
      ->check(CLI::IsMember({"random", "unique-mention", "static"}));
  c_gen->add_option("--dim", gen_dim, "Output dimension");
  c_gen->add_option("--seed", gen_seed, "Seed");
  c_gen->add_option("--table", gen_table, "Static vector table (word2vec text)")
      ->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen_out, "Output .emb")->required();
  c_gen->callback([&] {
    Corpus c = gen.Load();
    if (gen_kind == "static") {
      if (gen_table.empty()) throw UsageError("--kind static needs --table");
      StaticTable table = LoadStaticTable(gen_table);
      if (gen_dim != 0 && gen_dim != table.dim)
        throw UsageError(fmt::format("--dim {} does not match table dim {}", gen_dim, table.dim));
      auto r = GenStaticLookup(c, table);
      if (!r.all_oov.empty())
        std::cerr << fmt::format("warning: {} instances had no known token\n", r.all_oov.size());
      Save(r.matrix, gen_out);
      return;
    }
    if (gen_dim == 0) throw UsageError("--dim is required for generated baselines");
    Save(gen_kind == "random" ? GenRandom(c, gen_dim, gen_seed)
                              : GenUniqueMention(c, gen_dim, gen_seed),
         gen_out);
  });

  // reduce
  CorpusArgs red;
  std::string red_in, red_out, red_proj;
  std::size_t red_dim = 20;
  auto* c_red = app.add_subcommand("reduce", "LDA-reduce an embedding matrix");
  red.Add(c_red);
  c_red->add_option("--dim", red_dim, "Target dimension")->check(CLI::PositiveNumber);
  c_red->add_option("--in", red_in, "Input .emb")->required()->check(CLI::ExistingFile);
  c_red->add_option("--out", red_out, "Output .emb")->required();
  c_red->add_option("--proj", red_proj, "Projection to apply (if it exists) or save");
  c_red->callback([&] {
    Corpus c = red.Load();
    EmbeddingMatrix x = Load(red_in, c);
    Projection p;
    if (!red_proj.empty() && std::filesystem::exists(red_proj)) {
      p = LoadProjection(red_proj);
    } else {
      p = FitLda(x, c, red_dim);
      if (p.out_dim() < red_dim)
        std::cerr << fmt::format("warning: reduced to {} dims (rank limit)\n", p.out_dim());
      if (!red_proj.empty()) SaveProjection(p, red_proj);
    }
    Save(Transform(p, x), red_out);
  });

  // score
  CorpusArgs sc;
  std::string sc_in, sc_out;
  auto* c_score = app.add_subcommand("score", "Purity, inverse purity, F1 and ARI");
  sc.Add(c_score);
  c_score->add_option("--in", sc_in, "Input .emb")->required()->check(CLI::ExistingFile);
  c_score->add_option("--out", sc_out, "Write JSON here instead of stdout");
  c_score->callback([&] {
    Corpus c = sc.Load();
    Emit(ToJson(Score(Load(sc_in, c), c, assign())), sc_out);
  });

  // difficulty
  CorpusArgs dif;
  std::string dif_axis, dif_out;
  auto* c_dif = app.add_subcommand("difficulty", "Mention ambiguity and variability");
  dif.Add(c_dif);
  c_dif->add_option("--axis", dif_axis, "Restrict to one axis")
      ->check(CLI::IsMember({"ambiguity", "variability"}));
  c_dif->add_option("--out", dif_out, "Write JSON here instead of stdout");
  c_dif->callback([&] {
    Corpus c = dif.Load();
    Json j = Json::object();
    if (dif_axis.empty() || dif_axis == "ambiguity") j["ambiguity"] = ToJson(AllMentionAmbiguities(c));
    if (dif_axis.empty() || dif_axis == "variability")
      j["variability"] = ToJson(AllMentionVariabilities(c));
    Emit(j, dif_out);
  });

  // curve
  CorpusArgs cu;
  std::string cu_in, cu_axis = "ambiguity", cu_csv, cu_out;
  std::size_t cu_bins = 10;
  auto* c_curve = app.add_subcommand("curve", "F1 against difficulty, with AUC");
  cu.Add(c_curve);
  c_curve->add_option("--in", cu_in, "Input .emb")->required()->check(CLI::ExistingFile);
  c_curve->add_option("--axis", cu_axis, "ambiguity | variability")
      ->check(CLI::IsMember({"ambiguity", "variability"}));
  c_curve->add_option("--bins", cu_bins, "Number of bins")->check(CLI::PositiveNumber);
  c_curve->add_option("--csv", cu_csv, "Also write the curve as CSV");
  c_curve->add_option("--out", cu_out, "Write JSON here instead of stdout");
  c_curve->callback([&] {
    Corpus c = cu.Load();
    CurveReport r = DifficultyCurve(Load(cu_in, c), c, ParseAxis(cu_axis), cu_bins, assign());
    if (!cu_csv.empty()) WriteText(cu_csv, CurveCsv(r));
    Emit(ToJson(r), cu_out);
  });

  // sweep
  CorpusArgs sw;
  std::string sw_in, sw_dims = "1,2,5,10,20,30,50,100", sw_out, sw_kind = "lda";
  double sw_eps = 0.005;
  std::uint64_t sw_seed = 0;
  auto* c_sweep = app.add_subcommand("sweep", "F1 across reduced dimensions");
  sw.Add(c_sweep);
  c_sweep->add_option("--kind", sw_kind, "lda (reduce --in) | random (generate)")
      ->check(CLI::IsMember({"lda", "random"}));
  c_sweep->add_option("--in", sw_in, "Input .emb (lda)")->check(CLI::ExistingFile);
  c_sweep->add_option("--dims", sw_dims, "Comma-separated ascending dims");
  c_sweep->add_option("--epsilon", sw_eps, "Slope threshold")->check(CLI::PositiveNumber);
  c_sweep->add_option("--seed", sw_seed, "Seed (random)");
  c_sweep->add_option("--out", sw_out, "Write JSON here instead of stdout");
  c_sweep->callback([&] {
    SweepConfig cfg{ParseDims(sw_dims), sw_eps};
    Corpus c = sw.Load();
    if (sw_kind == "random") {
      Emit(ToJson(RandomDimensionSweep(c, cfg, sw_seed, assign())), sw_out);
      return;
    }
    if (sw_in.empty()) throw UsageError("--kind lda needs --in");
    Emit(ToJson(LdaDimensionSweep(Load(sw_in, c), c, cfg, assign())), sw_out);
  });

  // rsa
  std::vector<std::string> rsa_in;
  std::size_t rsa_sample = 2000;
  std::uint64_t rsa_seed = 0;
  std::string rsa_out, rsa_csv;
  auto* c_rsa = app.add_subcommand("rsa", "Representational similarity between matrices");
  c_rsa->add_option("--in", rsa_in, "Input .emb files (2 or more, same corpus)")
      ->required()
      ->check(CLI::ExistingFile);
  c_rsa->add_option("--sample", rsa_sample, "Rows to sample")->check(CLI::Range(3ul, 1ul << 20));
  c_rsa->add_option("--seed", rsa_seed, "Sampling seed");
  c_rsa->add_option("--csv", rsa_csv, "Also write the matrix as CSV");
  c_rsa->add_option("--out", rsa_out, "Write JSON here instead of stdout");
  c_rsa->callback([&] {
    if (rsa_in.size() < 2) throw UsageError("rsa needs at least two --in files");
    std::vector<EmbeddingMatrix> xs;
    for (const auto& p : rsa_in) xs.push_back(LoadUnchecked(p));
    for (const auto& x : xs) {
      if (x.manifest().corpus_hash != xs[0].manifest().corpus_hash || x.rows() != xs[0].rows())
        throw DataError("rsa inputs were built from different corpora");
    }
    bool clamped = false;
    auto idx = SampleIndices(xs[0].rows(), rsa_sample, rsa_seed, &clamped);
    if (clamped) std::cerr << fmt::format("warning: sample clamped to {}\n", xs[0].rows());
    std::vector<RSMatrix> rsms;
    for (const auto& x : xs) rsms.push_back(BuildRsm(x, idx));
    const auto n = static_cast<Eigen::Index>(xs.size());
    RowMatrix m = RowMatrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        m(i, j) = m(j, i) = Rsa(rsms[static_cast<std::size_t>(i)], rsms[static_cast<std::size_t>(j)]);
    Json j;
    j["names"] = rsa_in;
    j["sample"] = idx.size();
    j["matrix"] = Json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < n; ++k) row.push_back(m(i, k));
      j["matrix"].push_back(row);
    }
    if (!rsa_csv.empty()) WriteText(rsa_csv, MatrixCsv(rsa_in, m));
    Emit(j, rsa_out);
  });

  // probe
  CorpusArgs pr;
  std::string pr_in, pr_config, pr_out;
  std::size_t pr_dim = 0;
  std::uint64_t pr_seed = 0;
  auto* c_probe = app.add_subcommand("probe", "Linear softmax probe for entity identity");
  pr.Add(c_probe);
  c_probe->add_option("--in", pr_in, "Input .emb")->required()->check(CLI::ExistingFile);
  c_probe->add_option("--dim", pr_dim, "LDA-reduce to this dim first (0 = as is)");
  c_probe->add_option("--seed", pr_seed, "Seed");
  c_probe->add_option("--config", pr_config, "Probe hyperparameters JSON")
      ->check(CLI::ExistingFile);
  c_probe->add_option("--out", pr_out, "Write JSON here instead of stdout");
  c_probe->callback([&] {
    ProbeConfig cfg = pr_config.empty() ? ProbeConfig{} : LoadProbeConfig(pr_config);
    cfg.Validate();
    Corpus c = pr.Load();
    EmbeddingMatrix x = Load(pr_in, c);
    if (pr_dim != 0 && pr_dim != x.dim()) x = Transform(FitLda(x, c, pr_dim), x);
    Emit(ToJson(TrainProbe(x, Labels(c), cfg, pr_seed)), pr_out);
  });

  // run
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_bins;
  bool dry_run = false;
  auto* c_run = app.add_subcommand("run", "Full pipeline from a JSON config");
  c_run->add_option("--config", run_config, "Run config JSON")->required();
  c_run->add_option("--out", run_out, "Override output_dir");
  c_run->add_option("--seed", run_seed, "Override seed");
  c_run->add_option("--bins", run_bins, "Override bins");
  c_run->add_flag("--dry-run", dry_run, "Validate the config and exit");
  c_run->callback([&] {
    RunConfig cfg = LoadRunConfig(run_config);
    if (!run_out.empty()) cfg.output_dir = run_out;
    if (run_seed) {
      cfg.seed = *run_seed;
      cfg.echo["seed"] = *run_seed;
    }
    if (run_bins) {
      cfg.bins = *run_bins;
      cfg.echo["bins"] = *run_bins;
    }
    cfg.workers = workers;
    if (dry_run) {
      Preflight(cfg);
      std::cout << "config ok\n";
      return;
    }
    RunAndEmit(cfg);
    std::cout << cfg.output_dir << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const entsep::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(entsep::ExitCode::kData);
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(entsep::ExitCode::kNumeric);
  }
}
