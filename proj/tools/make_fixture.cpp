// Writes the small synthetic fixture used by the end-to-end tests:
// a corpus with shared surnames (ambiguity) and several surface forms per
// entity (variability), a static word-vector table, two "model" layers and
// a run config.
//
//   make_fixture OUT_DIR

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"
#include "entsep/error.hpp"
#include "entsep/report.hpp"
#include "entsep/util.hpp"

namespace {

using namespace entsep;

constexpr std::size_t kEntities = 40;
constexpr std::size_t kPerEntity = 30;
constexpr std::size_t kDim = 64;
constexpr std::size_t kStaticDim = 32;
constexpr std::uint64_t kSeed = 20240607;

const char* kFirst[] = {"Alba",  "Bruno", "Cleo",  "Dario", "Elin",  "Faro",  "Gita",  "Hugo",
                        "Ines",  "Joran", "Kira",  "Lumo",  "Mara",  "Nils",  "Oda",   "Pavo",
                        "Quin",  "Rhea",  "Sami",  "Tove"};
const char* kLast[] = {"Corin", "Vesk",  "Marro", "Tallis", "Oberg", "Quade", "Lind",
                       "Sorel", "Hask",  "Pryde", "Ulm",    "Dace",  "Rook",  "Fenn"};

struct Entity {
  std::string id;
  std::vector<std::string> forms;
};

std::vector<Entity> MakeEntities() {
  std::vector<Entity> out;
  for (std::size_t e = 0; e < kEntities; ++e) {
    const std::string first = kFirst[e % std::size(kFirst)];
    const std::string last = kLast[(e * 7) % std::size(kLast)];
    Entity ent;
    ent.id = fmt::format("{}_{}_{}", first, last, e);
    ent.forms.push_back(first + " " + last);
    if (e % 4 != 3) ent.forms.push_back(last);
    if (e % 3 == 0) ent.forms.push_back(first.substr(0, 1) + ". " + last);
    if (e % 5 == 0) ent.forms.push_back(first + "y");
    out.push_back(std::move(ent));
  }
  return out;
}

Corpus MakeCorpus(const std::vector<Entity>& entities) {
  Rng rng(StageSeed(kSeed, "corpus"));
  const char* kTemplates[] = {"Yesterday {} spoke at the harbor.",
                              "Reports say {} will travel north.",
                              "{} was seen near the old mill.",
                              "Everyone agreed that {} had won.",
                              "The letter from {} arrived late."};
  std::vector<Instance> rows;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (std::size_t k = 0; k < kPerEntity; ++k) {
      const auto& forms = entities[e].forms;
      const std::string& mention = forms[rng.Below(forms.size())];
      const std::string tmpl = kTemplates[rng.Below(std::size(kTemplates))];
      const std::size_t at = tmpl.find("{}");
      Instance inst;
      inst.instance_id = static_cast<std::int64_t>(rows.size());
      inst.text = tmpl.substr(0, at) + mention + tmpl.substr(at + 2);
      inst.mention = mention;
      inst.span = {at, at + CodepointLength(mention)};
      inst.entity = entities[e].id;
      std::int64_t tokens = 1;
      for (char ch : inst.text) tokens += ch == ' ';
      inst.token_count = tokens;
      rows.push_back(std::move(inst));
    }
  }
  return Corpus::FromInstances(std::move(rows), true);
}

std::vector<float> Gaussian(Rng& rng, std::size_t n, double scale) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(scale * rng.Normal());
  return v;
}

// Row = a * entity vector + b * mention vector + unit noise.
EmbeddingMatrix MakeLayer(const Corpus& c, int layer, double a, double b) {
  Rng rng(StageSeed(kSeed, fmt::format("layer{}", layer)));
  std::map<std::string, std::vector<float>> ent, men;
  for (const auto& [id, _] : c.by_entity()) ent[id] = Gaussian(rng, kDim, 1.0);
  for (const auto& [m, _] : c.by_mention()) men[m] = Gaussian(rng, kDim, 1.0);
  std::vector<float> values;
  values.reserve(c.size() * kDim);
  for (const Instance& inst : c.instances()) {
    const auto& u = ent[inst.entity];
    const auto& v = men[inst.mention];
    for (std::size_t d = 0; d < kDim; ++d)
      values.push_back(static_cast<float>(a * u[d] + b * v[d] + rng.Normal()));
  }
  EmbeddingManifest m;
  m.producer = "synthetic-model";
  m.layer = layer;
  m.pooling = Pooling::kLastToken;
  m.dim = kDim;
  m.corpus_hash = c.hash();
  m.seed = kSeed;
  return EmbeddingMatrix(m, c.size(), std::move(values));
}

void WriteStaticTable(const Corpus& c, const std::string& path) {
  Rng rng(StageSeed(kSeed, "static"));
  std::set<std::string> words;
  for (const auto& [m, _] : c.by_mention()) {
    std::size_t start = 0;
    while (start < m.size()) {
      std::size_t end = m.find(' ', start);
      if (end == std::string::npos) end = m.size();
      words.insert(m.substr(start, end - start));
      start = end + 1;
    }
  }
  std::string out = fmt::format("{} {}\n", words.size(), kStaticDim);
  for (const std::string& w : words) {
    // Leave nicknames out so the lookup fallback is exercised.
    if (w.back() == 'y') continue;
    out += w;
    for (float x : Gaussian(rng, kStaticDim, 1.0)) out += " " + FormatNumber(x);
    out += "\n";
  }
  WriteText(path, out);
}

Json MakeConfig() {
  Json cfg;
  cfg["corpus"] = "corpus.jsonl";
  cfg["min_count"] = 5;
  cfg["max_tokens"] = 500;
  cfg["models"] = Json::array({Json{{"name", "synthetic"},
                                    {"layers", {0, 1}},
                                    {"embeddings", {{"0", "synthetic_l0.emb"},
                                                    {"1", "synthetic_l1.emb"}}}}});
  cfg["baselines"] = Json::array({Json{{"kind", "random"}}, Json{{"kind", "unique-mention"}},
                                  Json{{"kind", "static"}, {"table", "static.vec"}}});
  cfg["reduce_dim"] = 20;
  cfg["sweep"] = {{"dims", {1, 2, 5, 10, 20, 30}}, {"epsilon", 0.005}};
  cfg["axes"] = {"ambiguity", "variability"};
  cfg["bins"] = 10;
  cfg["probe"] = {{"max_epochs", 200}, {"batch_size", 256}, {"learning_rate", 0.01}};
  cfg["rsa"] = {{"sample", 400}};
  cfg["output_dir"] = "report";
  cfg["seed"] = 7;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture OUT_DIR\n";
    return 1;
  }
  try {
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    const Corpus c = MakeCorpus(MakeEntities());
    WriteJsonl(c, (dir / "corpus.jsonl").string());
    Save(MakeLayer(c, 0, 0.35, 1.0), (dir / "synthetic_l0.emb").string());
    Save(MakeLayer(c, 1, 0.8, 0.5), (dir / "synthetic_l1.emb").string());
    WriteStaticTable(c, (dir / "static.vec").string());
    WriteText((dir / "config.json").string(), MakeConfig().dump(2) + "\n");
    std::cout << fmt::format("{} instances, {} entities, {} mentions -> {}\n", c.size(),
                             c.by_entity().size(), c.by_mention().size(), dir.string());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
  return 0;
}
