#include "entsep/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "entsep/difficulty.hpp"
#include "entsep/error.hpp"
#include "entsep/util.hpp"

namespace entsep {
namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t HashRow(const Instance& inst) {
  std::uint64_t h = Fnv1a(inst.text);
  h = Fnv1a("\x1f", h);
  h = Fnv1a(fmt::format("{}:{}", inst.span.start, inst.span.end), h);
  h = Fnv1a("\x1f", h);
  return Fnv1a(inst.entity, h);
}

void Validate(const Instance& inst, std::size_t position) {
  auto where = [&] { return fmt::format("instance {} (id {})", position, inst.instance_id); };
  if (inst.entity.empty()) throw DataError(where() + ": empty entity id");
  if (inst.token_count < 0) throw DataError(where() + ": negative token_count");
  std::size_t len = DecodeUtf8(inst.text).size();
  DecodeUtf8(inst.mention);
  DecodeUtf8(inst.entity);
  if (!(inst.span.start < inst.span.end && inst.span.end <= len))
    throw DataError(fmt::format("{}: span ({},{}) out of range for text of length {}", where(),
                                inst.span.start, inst.span.end, len));
  std::size_t b0 = CodepointToByte(inst.text, inst.span.start);
  std::size_t b1 = CodepointToByte(inst.text, inst.span.end);
  std::string_view covered = std::string_view(inst.text).substr(b0, b1 - b0);
  if (covered != inst.mention)
    throw DataError(fmt::format("{}: span/mention mismatch: span covers \"{}\", mention is \"{}\"",
                                where(), covered, inst.mention));
}

Instance ParseRecord(const std::string& line, std::size_t line_no, const std::string& source,
                     std::int64_t default_id, bool& has_id) {
  auto fail = [&](const std::string& why) {
    return DataError(fmt::format("{}:{}: malformed record: {}", source, line_no, why));
  };
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("not a JSON object");
  auto need = [&](const char* key) -> const ordered_json& {
    auto it = j.find(key);
    if (it == j.end()) throw fail(fmt::format("missing key '{}'", key));
    return *it;
  };
  Instance inst;
  const auto& text = need("text");
  const auto& mention = need("mention");
  const auto& span = need("span");
  const auto& entity = need("entity");
  const auto& tokens = need("token_count");
  if (!text.is_string()) throw fail("'text' must be a string");
  if (!mention.is_string()) throw fail("'mention' must be a string");
  if (!entity.is_string()) throw fail("'entity' must be a string");
  if (!tokens.is_number_integer()) throw fail("'token_count' must be an integer");
  if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() ||
      !span[1].is_number_unsigned())
    throw fail("'span' must be [start, end] non-negative integers");
  inst.text = text.get<std::string>();
  inst.mention = mention.get<std::string>();
  inst.entity = entity.get<std::string>();
  inst.token_count = tokens.get<std::int64_t>();
  inst.span = {span[0].get<std::size_t>(), span[1].get<std::size_t>()};
  if (auto it = j.find("instance_id"); it != j.end()) {
    if (!it->is_number_integer()) throw fail("'instance_id' must be an integer");
    inst.instance_id = it->get<std::int64_t>();
    has_id = true;
  } else {
    inst.instance_id = default_id;
    has_id = false;
  }
  return inst;
}

}  // namespace

Corpus Corpus::FromInstances(std::vector<Instance> instances, bool explicit_ids) {
  Corpus c;
  c.explicit_ids_ = explicit_ids;
  std::unordered_set<std::int64_t> seen;
  c.row_hashes_.reserve(instances.size());
  std::uint64_t total = kFnvOffset;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    Validate(inst, i);
    if (!seen.insert(inst.instance_id).second)
      throw DataError(fmt::format("duplicate instance_id {}", inst.instance_id));
    c.by_entity_[inst.entity].push_back(i);
    c.by_mention_[inst.mention].push_back(i);
    std::uint64_t rh = HashRow(inst);
    c.row_hashes_.push_back(rh);
    total = Fnv1a(std::string_view(reinterpret_cast<const char*>(&rh), sizeof rh), total);
  }
  c.hash_ = HexDigest(total);
  c.instances_ = std::move(instances);
  return c;
}

std::vector<EntityId> Corpus::entities() const {
  std::vector<EntityId> out;
  out.reserve(by_entity_.size());
  for (const auto& [e, _] : by_entity_) out.push_back(e);
  return out;
}

Corpus Corpus::Select(std::span<const std::size_t> positions) const {
  std::vector<Instance> picked;
  picked.reserve(positions.size());
  for (std::size_t p : positions) picked.push_back(instances_.at(p));
  return FromInstances(std::move(picked), explicit_ids_);
}

CorpusFormat ParseCorpusFormat(const std::string& tag) {
  if (tag == "jsonl") return CorpusFormat::kJsonl;
  throw UsageError(fmt::format("unknown corpus format '{}'", tag));
}

Corpus ReadJsonl(std::istream& in, const std::string& source) {
  std::vector<Instance> instances;
  std::string line;
  std::size_t line_no = 0;
  std::optional<bool> ids_present;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    bool has_id = false;
    instances.push_back(ParseRecord(line, line_no, source,
                                    static_cast<std::int64_t>(instances.size()), has_id));
    if (ids_present && *ids_present != has_id)
      throw DataError(fmt::format("{}:{}: malformed record: instance_id must be given on all "
                                  "records or none",
                                  source, line_no));
    ids_present = has_id;
  }
  return Corpus::FromInstances(std::move(instances), ids_present.value_or(false));
}

Corpus Ingest(const std::string& path, CorpusFormat format) {
  if (format != CorpusFormat::kJsonl) throw UsageError("unsupported corpus format");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open corpus file '{}'", path));
  return ReadJsonl(in, path);
}

void WriteJsonl(const Corpus& c, std::ostream& out) {
  for (const Instance& inst : c.instances()) {
    ordered_json j;
    if (c.explicit_ids()) j["instance_id"] = inst.instance_id;
    j["text"] = inst.text;
    j["mention"] = inst.mention;
    j["span"] = {inst.span.start, inst.span.end};
    j["entity"] = inst.entity;
    j["token_count"] = inst.token_count;
    out << j.dump() << '\n';
  }
}

void WriteJsonl(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  WriteJsonl(c, out);
  if (!out) throw DataError(fmt::format("write failed for '{}'", path));
}

Corpus Filter(const Corpus& c, const FilterOptions& options) {
  if (options.min_count < 1) throw UsageError("min_count must be >= 1");
  if (options.max_tokens < 1) throw UsageError("max_tokens must be >= 1");

  std::vector<std::size_t> kept;
  std::map<EntityId, std::int64_t> remaining;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Instance& inst = c[i];
    if (inst.token_count > options.max_tokens) continue;
    if (options.skip_ids.contains(inst.instance_id)) continue;
    kept.push_back(i);
    ++remaining[inst.entity];
  }
  std::vector<std::size_t> out;
  out.reserve(kept.size());
  for (std::size_t i : kept)
    if (remaining[c[i].entity] >= options.min_count) out.push_back(i);
  if (out.empty()) throw DataError("filter removed every instance");
  return c.Select(out);
}

std::set<std::int64_t> ReadSkipFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open skip file '{}'", path));
  std::set<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.is_number_integer()) {
        ids.insert(j.get<std::int64_t>());
      } else if (j.is_object() && j.contains("instance_id") && j["instance_id"].is_number_integer()) {
        ids.insert(j["instance_id"].get<std::int64_t>());
      } else {
        throw DataError("expected an integer or an object with instance_id");
      }
    } catch (const std::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return ids;
}

std::vector<std::size_t> AmbiguousPositions(const Corpus& c) {
  std::vector<bool> keep(c.size(), false);
  for (const auto& [mention, rows] : c.by_mention()) {
    if (MentionAmbiguity(c, mention).entropy > 0.0)
      for (std::size_t r : rows) keep[r] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

Corpus AmbiguousSubset(const Corpus& c) {
  auto positions = AmbiguousPositions(c);
  return c.Select(positions);
}

}  // namespace entsep
