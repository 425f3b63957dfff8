#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "entsep/error.hpp"
#include "entsep/metrics.hpp"
#include "support.hpp"

using namespace entsep;

namespace {

struct Worked {
  Corpus c = testing::MakeCorpus({"A", "A", "A", "B", "B", "B"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{0}, {1}, {2}, {10}, {11}, {1.5}});
};

Assignment FromLabels(std::vector<std::uint32_t> cls, std::vector<std::uint32_t> clu,
                      std::size_t k) {
  Assignment a;
  for (std::size_t e = 0; e < k; ++e) a.entities.push_back("E" + std::to_string(e));
  a.class_of = std::move(cls);
  a.cluster_of = std::move(clu);
  return a;
}

}  // namespace

TEST_CASE("centroids") {
  Corpus c = testing::MakeCorpus({"A", "B", "B"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{3, 4}, {0, 0}, {2, 0}});
  CentroidSet b = ComputeCentroids(x, c);
  REQUIRE(b.entities == std::vector<EntityId>{"A", "B"});
  CHECK(b.centroids(0, 0) == 3.0);
  CHECK(b.centroids(0, 1) == 4.0);
  CHECK(b.centroids(1, 0) == 1.0);
  CHECK(b.centroids(1, 1) == 0.0);
}

TEST_CASE("centroid of standard normal rows is near the origin") {
  std::vector<std::string> labels(1000, "A");
  Corpus c = testing::MakeCorpus(labels);
  EmbeddingMatrix x = GenRandom(c, 8, 77);
  CHECK(ComputeCentroids(x, c).centroids.row(0).norm() < 0.15);
}

TEST_CASE("assignment on the worked example") {
  Worked w;
  Assignment a = Assign(w.x, ComputeCentroids(w.x, w.c), w.c);
  CHECK(a.cluster_of == std::vector<std::uint32_t>{0, 0, 0, 1, 1, 0});
  CHECK(a.class_of == std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("a point on a centroid goes to it") {
  Corpus c = testing::MakeCorpus({"A", "B", "B"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{5, 5}, {0, 0}, {0, 0}});
  Assignment a = Assign(x, ComputeCentroids(x, c), c);
  CHECK(a.cluster_of == std::vector<std::uint32_t>{0, 1, 1});
}

TEST_CASE("ties go to the smallest entity id") {
  Corpus c = testing::MakeCorpus({"B", "A", "B"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{2}, {-2}, {0}});
  CentroidSet b = ComputeCentroids(x, c);
  // Centroids A = -2, B = 1; the tie point is -0.5.
  Corpus probe = testing::MakeCorpus({"B"});
  EmbeddingMatrix p = testing::MakeMatrix(probe, {{-0.5}});
  Assignment a = Assign(p, b, probe);
  CHECK(a.entities[a.cluster_of[0]] == "A");
}

TEST_CASE("worked example scores") {
  Worked w;
  PartitionScores s = Score(w.x, w.c);
  CHECK(s.purity == 5.0 / 6.0);
  CHECK(s.ip == 5.0 / 6.0);
  CHECK(s.f1 == 5.0 / 6.0);
  REQUIRE(s.locals.size() == 2);
  CHECK(s.locals[0].local_purity == 0.75);
  CHECK(s.locals[0].local_ip == 1.0);
  CHECK(s.locals[1].local_purity == 1.0);
  CHECK(s.locals[1].local_ip == doctest::Approx(2.0 / 3.0));
  CHECK(s.locals[1].local_f1 == doctest::Approx(0.8));
  CHECK(s.locals[0].cluster_size == 4);
  CHECK(s.locals[1].class_size == 3);
}

TEST_CASE("perfect partition") {
  Assignment a = FromLabels({0, 0, 1, 2, 2}, {0, 0, 1, 2, 2}, 3);
  PurityScores s = PurityIpF1(a);
  CHECK(s.purity == 1.0);
  CHECK(s.ip == 1.0);
  CHECK(s.f1 == 1.0);
  CHECK(AdjustedRandIndex(a).value == 1.0);
}

TEST_CASE("empty clusters carry no purity weight") {
  Assignment a = FromLabels({0, 1, 2}, {0, 0, 0}, 3);
  PurityScores s = PurityIpF1(a);
  CHECK(s.empty_clusters == 2);
  CHECK(s.purity == doctest::Approx(1.0 / 3.0));
  CHECK(s.ip == doctest::Approx(1.0 / 3.0));
  CHECK(s.locals[0].majority_class == "E0");  // three-way tie
  CHECK(s.locals[1].majority_class.empty());
}

TEST_CASE("ari contingency example") {
  std::vector<std::uint32_t> cls{0, 0, 1, 1}, clu{0, 1, 0, 1};
  AriResult r = AdjustedRandIndex(cls, clu);
  CHECK(r.value == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("ari degenerate partitions") {
  std::vector<std::uint32_t> one{0, 0, 0}, same{0, 0, 0};
  AriResult r = AdjustedRandIndex(one, same);
  CHECK(r.degenerate);
  CHECK(r.value == 1.0);
  std::vector<std::uint32_t> single{0};
  CHECK_THROWS_AS(AdjustedRandIndex(single, single), DataError);
}

TEST_CASE("ari of random permutations averages to zero") {
  std::mt19937_64 gen(2024);
  std::vector<std::uint32_t> labels(400);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i % 10);
  double sum = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto perm = labels;
    std::shuffle(perm.begin(), perm.end(), gen);
    sum += AdjustedRandIndex(labels, perm).value;
  }
  CHECK(std::abs(sum / 100.0) < 0.02);
}

TEST_CASE("scores match the brute-force oracle") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<std::size_t> kdist(2, 6), ndist(10, 60), ddist(1, 4);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = kdist(gen), n = ndist(gen), dim = ddist(gen);
    std::vector<std::size_t> klass(n);
    for (std::size_t i = 0; i < n; ++i) klass[i] = i < k ? i : gen() % k;
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    for (auto& r : rows)
      for (auto& v : r) v = static_cast<float>(normal(gen));
    auto names = testing::EntityNames(k);
    std::vector<std::string> labels;
    for (auto e : klass) labels.push_back(names[e]);
    Corpus c = testing::MakeCorpus(labels);
    PartitionScores s = Score(testing::MakeMatrix(c, rows), c);
    auto p = testing::oracle::NearestCentroid(rows, klass, k);
    auto o = testing::oracle::PurityIp(p);
    CHECK(s.purity == doctest::Approx(o.purity).epsilon(1e-12));
    CHECK(s.ip == doctest::Approx(o.ip).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(o.f1).epsilon(1e-12));
    CHECK(s.ari == doctest::Approx(testing::oracle::PairAri(p.klass, p.cluster)).epsilon(1e-12));
    for (std::size_t e = 0; e < k; ++e) CHECK(s.locals[e].local_f1 == doctest::Approx(o.local_f1[e]));
  }
}

TEST_CASE("worker count and block size do not change the assignment") {
  auto blobs = testing::MakeBlobs(12, 40, 5, 1.0, 1.0, 3);
  CentroidSet b = ComputeCentroids(blobs.x, blobs.corpus);
  Assignment ref = Assign(blobs.x, b, blobs.corpus);
  for (unsigned w : {2u, 3u, 7u}) {
    for (std::size_t block : {1ul, 17ul, 1000ul}) {
      Assignment a = Assign(blobs.x, b, blobs.corpus, {w, block});
      CHECK(a.cluster_of == ref.cluster_of);
    }
  }
}

TEST_CASE("translation does not change the assignment") {
  auto blobs = testing::MakeBlobs(10, 20, 3, 1.0, 1.0, 5);
  std::vector<float> shifted(blobs.x.values().begin(), blobs.x.values().end());
  for (auto& v : shifted) v += 1000.0f;
  EmbeddingMatrix y = testing::MakeMatrix(blobs.corpus, 3, shifted);
  PartitionScores a = Score(blobs.x, blobs.corpus), b = Score(y, blobs.corpus);
  CHECK(a.f1 == doctest::Approx(b.f1).epsilon(0.02));
}
