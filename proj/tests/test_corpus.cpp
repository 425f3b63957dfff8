#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "entsep/corpus.hpp"
#include "entsep/error.hpp"
#include "support.hpp"

using namespace entsep;

namespace {

Instance Paris() {
  Instance i;
  i.text = "Alice went to Paris";
  i.mention = "Paris";
  i.span = {14, 19};
  i.entity = "Paris";
  i.token_count = 4;
  return i;
}

std::vector<Instance> Repeat(const std::string& entity, int n, std::int64_t tokens = 3) {
  std::vector<Instance> out;
  for (int k = 0; k < n; ++k) {
    Instance i;
    i.text = entity + " here";
    i.mention = entity;
    i.span = {0, entity.size()};
    i.entity = entity;
    i.token_count = tokens;
    out.push_back(i);
  }
  return out;
}

Corpus Join(std::vector<std::vector<Instance>> parts) {
  std::vector<Instance> all;
  for (auto& p : parts)
    for (auto& i : p) {
      i.instance_id = static_cast<std::int64_t>(all.size());
      all.push_back(i);
    }
  return Corpus::FromInstances(all);
}

}  // namespace

TEST_CASE("single record builds one bucket") {
  Corpus c = Corpus::FromInstances({Paris()});
  CHECK(c.size() == 1);
  CHECK(c.by_entity().size() == 1);
  CHECK(c.by_mention().at("Paris") == std::vector<std::size_t>{0});
}

TEST_CASE("span must select the mention") {
  Instance i = Paris();
  i.span = {14, 18};
  try {
    Corpus::FromInstances({i});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("span/mention mismatch") != std::string::npos);
  }
  i.span = {14, 40};
  CHECK_THROWS_AS(Corpus::FromInstances({i}), DataError);
}

TEST_CASE("spans count code points") {
  Instance i;
  i.text = "Er wohnt in Zürich seit 2010";
  i.mention = "Zürich";
  i.span = {12, 18};
  i.entity = "Zürich";
  i.token_count = 5;
  CHECK_NOTHROW(Corpus::FromInstances({i}));
}

TEST_CASE("invalid records are rejected") {
  Instance i = Paris();
  i.entity = "";
  CHECK_THROWS_AS(Corpus::FromInstances({i}), DataError);
  i = Paris();
  i.token_count = -1;
  CHECK_THROWS_AS(Corpus::FromInstances({i}), DataError);
  i = Paris();
  i.text = "Alice went to Paris\xff";
  CHECK_THROWS_AS(Corpus::FromInstances({i}), DataError);
  Instance a = Paris(), b = Paris();
  a.instance_id = b.instance_id = 3;
  CHECK_THROWS_AS(Corpus::FromInstances({a, b}, true), DataError);
}

TEST_CASE("jsonl parse reports line numbers") {
  std::istringstream in(
      R"({"text":"Alice went to Paris","mention":"Paris","span":[14,19],"entity":"Paris","token_count":4})"
      "\n\n"
      R"({"text":"x","mention":"x","span":[0,1],"entity":"X"})"
      "\n");
  try {
    ReadJsonl(in, "c.jsonl");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("c.jsonl:3") != std::string::npos);
  }
  std::istringstream bad("{not json}\n");
  CHECK_THROWS_AS(ReadJsonl(bad), DataError);
}

TEST_CASE("jsonl round trip") {
  std::istringstream in(
      R"({"text":"Alice went to Paris","mention":"Paris","span":[14,19],"entity":"Paris","token_count":4})"
      "\n"
      R"({"text":"Er wohnt in Zürich","mention":"Zürich","span":[12,18],"entity":"Zürich","token_count":4})"
      "\n");
  Corpus c = ReadJsonl(in);
  CHECK(c.size() == 2);
  CHECK_FALSE(c.explicit_ids());
  CHECK(c[1].instance_id == 1);
  std::ostringstream out;
  WriteJsonl(c, out);
  std::istringstream again(out.str());
  Corpus d = ReadJsonl(again);
  CHECK(d.hash() == c.hash());
  std::ostringstream out2;
  WriteJsonl(d, out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("explicit instance ids are all or nothing") {
  std::istringstream mixed(
      R"({"instance_id":5,"text":"a","mention":"a","span":[0,1],"entity":"A","token_count":1})"
      "\n"
      R"({"text":"b","mention":"b","span":[0,1],"entity":"B","token_count":1})"
      "\n");
  CHECK_THROWS_AS(ReadJsonl(mixed), DataError);
  std::istringstream ids(
      R"({"instance_id":5,"text":"a","mention":"a","span":[0,1],"entity":"A","token_count":1})"
      "\n");
  Corpus c = ReadJsonl(ids);
  CHECK(c.explicit_ids());
  CHECK(c[0].instance_id == 5);
}

TEST_CASE("hash depends on text, span and entity") {
  Corpus a = Corpus::FromInstances({Paris()});
  Instance i = Paris();
  i.entity = "Paris, Texas";
  CHECK(Corpus::FromInstances({i}).hash() != a.hash());
  CHECK(Corpus::FromInstances({Paris()}).hash() == a.hash());
}

TEST_CASE("min count boundary") {
  Corpus c = Join({Repeat("Four", 4), Repeat("Five", 5)});
  Corpus f = Filter(c, {});
  CHECK(f.by_entity().size() == 1);
  CHECK(f.by_entity().count("Five") == 1);
}

TEST_CASE("token cap applies before the count check") {
  auto five = Repeat("Five", 5);
  five[0].token_count = 501;
  auto six = Repeat("Six", 6);
  six[0].token_count = 500;
  Corpus f = Filter(Join({five, six}), {});
  CHECK(f.by_entity().count("Five") == 0);
  CHECK(f.by_entity().at("Six").size() == 6);
}

TEST_CASE("skip ids drop instances before counting") {
  Corpus c = Join({Repeat("A", 5), Repeat("B", 6)});
  FilterOptions o;
  o.skip_ids = {0, 5};
  Corpus f = Filter(c, o);
  CHECK(f.by_entity().count("A") == 0);
  CHECK(f.by_entity().at("B").size() == 5);
  o.min_count = 100;
  CHECK_THROWS_AS(Filter(c, o), DataError);
}

TEST_CASE("skip file formats") {
  auto path = std::filesystem::temp_directory_path() / "entsep_skip_test.txt";
  {
    std::ofstream out(path);
    out << "3\n{\"instance_id\": 7, \"reason\": \"span not aligned\"}\n\n12\n";
  }
  auto ids = ReadSkipFile(path.string());
  CHECK(ids == std::set<std::int64_t>{3, 7, 12});
  {
    std::ofstream out(path);
    out << "three\n";
  }
  CHECK_THROWS_AS(ReadSkipFile(path.string()), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("ambiguous subset keeps multi-entity mentions only") {
  Corpus c = testing::MakeCorpus({"Ohio", "Ohio", "Ohio River", "Texas"},
                                 {"Ohio", "Ohio", "Ohio", "Texas"});
  CHECK(AmbiguousPositions(c) == std::vector<std::size_t>{0, 1, 2});
  Corpus sub = AmbiguousSubset(c);
  CHECK(sub.size() == 3);
  CHECK(sub.by_entity().count("Texas") == 0);
}

TEST_CASE("select keeps order and reindexes") {
  Corpus c = testing::MakeCorpus({"A", "B", "C"});
  std::vector<std::size_t> pos{2, 0};
  Corpus s = c.Select(pos);
  CHECK(s[0].entity == "C");
  CHECK(s.by_entity().at("A") == std::vector<std::size_t>{1});
}
