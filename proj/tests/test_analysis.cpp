#include <doctest.h>

#include <cmath>
#include <random>

#include "entsep/analysis.hpp"
#include "entsep/error.hpp"
#include "support.hpp"

using namespace entsep;

TEST_CASE("variability group score is the entity's local f1") {
  Corpus c = testing::MakeCorpus({"A", "A", "A", "B", "B", "B"},
                                 {"a", "a", "a", "Bee", "B.", "Bee"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{0}, {1}, {2}, {10}, {11}, {1.5}});
  Assignment a = Assign(x, ComputeCentroids(x, c), c);
  PurityScores s = PurityIpF1(a);
  auto groups = GroupF1(c, a, s.locals, Axis::kVariability);
  REQUIRE(groups.size() == 1);  // A has a single surface form
  CHECK(groups[0].key == "B");
  CHECK(groups[0].f1 == doctest::Approx(0.8));
  CHECK(groups[0].difficulty == doctest::Approx(2.0 / 3.0));
  CHECK(groups[0].support == 3);
}

TEST_CASE("ambiguity group scores") {
  // "Jordan" refers to a country and a person; both are well separated.
  Corpus c = testing::MakeCorpus({"Country", "Country", "Person", "Person", "River"},
                                 {"Jordan", "Jordan", "Jordan", "MJ", "Jordan River"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{0}, {0.5}, {10}, {10.5}, {20}});
  Assignment a = Assign(x, ComputeCentroids(x, c), c);
  PurityScores s = PurityIpF1(a);
  auto groups = GroupF1(c, a, s.locals, Axis::kAmbiguity);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].key == "Jordan");
  CHECK(groups[0].f1 == 1.0);
  CHECK(groups[0].support == 3);
  CHECK(groups[0].difficulty == doctest::Approx(-(2.0 / 3) * std::log(2.0 / 3) - std::log(1.0 / 3) / 3));
}

TEST_CASE("restricted f1 on a mixed group") {
  Assignment a;
  a.entities = {"A", "B"};
  a.class_of = {0, 0, 1, 1};
  a.cluster_of = {0, 1, 1, 1};
  std::vector<std::size_t> all{0, 1, 2, 3};
  // purity (1 + 2) / 4, ip 3 / 4
  CHECK(RestrictedF1(a, all) == doctest::Approx(0.75));
  std::vector<std::size_t> first{0};
  CHECK(RestrictedF1(a, first) == 1.0);
}

TEST_CASE("binning") {
  SUBCASE("one bin holds the mean") {
    std::vector<std::pair<double, double>> pairs{{0.2, 0.5}, {0.4, 0.7}, {0.9, 0.9}};
    CurveReport r = BinAndCurve(pairs, 1);
    REQUIRE(r.bins.size() == 1);
    CHECK(r.bins[0].mean_f1 == doctest::Approx(0.7));
    CHECK(r.auc == doctest::Approx(0.7));
  }
  SUBCASE("two bins") {
    std::vector<std::pair<double, double>> pairs{{0.1, 1.0}, {0.9, 0.0}};
    CurveReport r = BinAndCurve(pairs, 2);
    REQUIRE(r.bins.size() == 2);
    CHECK(r.bins[0].mean_f1 == 1.0);
    CHECK(r.bins[1].mean_f1 == 0.0);
    CHECK(r.bins[0].x_center == 0.25);
    CHECK(r.range_min == 0.1);
    CHECK(r.range_max == 0.9);
  }
  SUBCASE("explicit range clamps and leaves empty bins out") {
    std::vector<std::pair<double, double>> pairs{{-1.0, 0.3}, {5.0, 0.6}};
    CurveReport r = BinAndCurve(pairs, 4, Axis::kAmbiguity, DifficultyRange{0.0, 2.0});
    REQUIRE(r.bins.size() == 2);
    CHECK(r.bins[0].x_low == 0.0);
    CHECK(r.bins[1].x_high == 1.0);
  }
  SUBCASE("uniform ramp") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 1000; ++i) {
      double v = u(gen);
      pairs.emplace_back(v, v);
    }
    CurveReport r = BinAndCurve(pairs, 10, Axis::kAmbiguity, DifficultyRange{0.0, 1.0});
    REQUIRE(r.bins.size() == 10);
    for (const auto& b : r.bins) CHECK(std::abs(b.mean_f1 - b.x_center) < 0.02);
    std::size_t total = 0;
    for (const auto& b : r.bins) total += b.support;
    CHECK(total == 1000);
  }
  std::vector<std::pair<double, double>> none;
  CHECK_THROWS_AS(BinAndCurve(none, 3), DataError);
}

TEST_CASE("auc") {
  std::vector<std::pair<double, double>> flat, ramp;
  for (int i = 0; i <= 100; ++i) flat.emplace_back(i / 100.0, 0.8);
  CHECK(BinAndCurve(flat, 10).auc == doctest::Approx(0.8).epsilon(1e-12));
  for (int i = 0; i < 1000; ++i) ramp.emplace_back((i + 0.5) / 1000.0, (i + 0.5) / 1000.0);
  CHECK(std::abs(BinAndCurve(ramp, 100, Axis::kAmbiguity, DifficultyRange{0, 1}).auc - 0.5) <
        0.01);
  CurveReport r = BinAndCurve(flat, 10);
  r.bins.clear();
  CHECK_THROWS_AS(Auc(r), DataError);
}

TEST_CASE("dimension selection") {
  SUBCASE("reference table") {
    auto r = SelectDimension({{5, 0.51}, {10, 0.80}, {20, 0.91}, {30, 0.93}}, 0.005);
    CHECK(r.chosen_dim == 20);
    CHECK(r.converged);
  }
  SUBCASE("constant") {
    auto r = SelectDimension({{1, 0.4}, {2, 0.4}, {8, 0.4}}, 0.005);
    CHECK(r.chosen_dim == 1);
    CHECK(r.converged);
  }
  SUBCASE("steep staircase") {
    auto r = SelectDimension({{1, 0.1}, {2, 0.2}, {3, 0.3}}, 0.005);
    CHECK_FALSE(r.converged);
    CHECK(r.chosen_dim == 3);
  }
  SUBCASE("single point") {
    auto r = SelectDimension({{4, 0.5}}, 0.005);
    CHECK(r.chosen_dim == 4);
  }
  SUBCASE("a late rise resets the choice") {
    auto r = SelectDimension({{1, 0.5}, {2, 0.5}, {3, 0.9}, {4, 0.9}}, 0.005);
    CHECK(r.chosen_dim == 3);
  }
}

TEST_CASE("lda sweep on separable blobs") {
  auto blobs = testing::MakeBlobs(8, 20, 6, 4.0, 0.5, 3);
  SweepResult r = LdaDimensionSweep(blobs.x, blobs.corpus, {{1, 2, 4, 6}, 0.005});
  REQUIRE(r.table.size() == 4);
  CHECK(r.table.back().f1 == 1.0);
  CHECK_THROWS_AS(LdaDimensionSweep(blobs.x, blobs.corpus, {{1, 7}, 0.005}), DataError);
  CHECK_THROWS_AS(LdaDimensionSweep(blobs.x, blobs.corpus, {{4, 2}, 0.005}), UsageError);
}

TEST_CASE("random sweep is deterministic") {
  auto names = testing::EntityNames(30);
  std::vector<std::string> labels;
  for (int r = 0; r < 10; ++r) labels.insert(labels.end(), names.begin(), names.end());
  Corpus c = testing::MakeCorpus(labels);
  SweepConfig cfg{{2, 8, 32}, 0.005};
  SweepResult a = RandomDimensionSweep(c, cfg, 9), b = RandomDimensionSweep(c, cfg, 9);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.table[i].f1 == b.table[i].f1);
  CHECK(a.table[0].f1 < a.table[2].f1);
}

TEST_CASE("rsm of three points") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 0, 3, 0, 0, 4;
  RSMatrix r = BuildRsm(pts, {0, 1, 2});
  CHECK(r.sim(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.sim(0, 2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(std::abs(r.sim(1, 2)) < 1e-15);
  CHECK(r.sim(1, 1) == 1.0);
  CHECK(r.sim(2, 1) == r.sim(1, 2));
}

TEST_CASE("rsa invariances") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(60, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
  std::vector<std::size_t> idx(60);
  std::iota(idx.begin(), idx.end(), 0);
  RSMatrix base = BuildRsm(x, idx);
  CHECK(Rsa(base, base) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(Rsa(base, BuildRsm(2.0 * x, idx)) - 1.0) < 1e-10);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(5, 5))
                          .householderQ();
  Eigen::MatrixXd moved = (x * q).rowwise() + Eigen::RowVectorXd::Constant(5, 3.5);
  CHECK(std::abs(Rsa(base, BuildRsm(moved, idx)) - 1.0) < 1e-10);
  Eigen::MatrixXd other(60, 5);
  for (Eigen::Index i = 0; i < other.size(); ++i) other.data()[i] = normal(gen);
  CHECK(std::abs(Rsa(base, BuildRsm(other, idx))) < 0.2);
}

TEST_CASE("rsa requires matching samples") {
  Eigen::MatrixXd pts(6, 1);
  pts << 0, 1, 3, 4, 7, 9;
  RSMatrix a = BuildRsm(pts, {0, 1, 2});
  RSMatrix b = BuildRsm(pts, {0, 1, 5});
  CHECK_THROWS_AS(Rsa(a, b), DataError);
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(BuildRsm(same, {0, 1, 2}), DataError);
}

TEST_CASE("average ranks and spearman") {
  std::vector<double> v{10, 20, 20, 5};
  CHECK(AverageRanks(v) == std::vector<double>{2, 3.5, 3.5, 1});
  std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 40}, c{4, 3, 2, 1};
  CHECK(Spearman(a, b) == doctest::Approx(1.0));
  CHECK(Spearman(a, c) == doctest::Approx(-1.0));
  std::vector<double> flat{1, 1, 1, 1};
  CHECK_THROWS_AS(Spearman(a, flat), NumericError);
}

TEST_CASE("sample indices") {
  bool clamped = false;
  auto s = SampleIndices(100, 10, 3, &clamped);
  CHECK(s.size() == 10);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK_FALSE(clamped);
  CHECK(SampleIndices(100, 10, 3) == s);
  auto all = SampleIndices(5, 50, 3, &clamped);
  CHECK(all.size() == 5);
  CHECK(clamped);
}

TEST_CASE("difficulty curve over a corpus") {
  Corpus c = testing::MakeCorpus({"Country", "Country", "Person", "Person", "River", "River"},
                                 {"Jordan", "Jordan", "Jordan", "MJ", "Jordan River", "Jordan"});
  EmbeddingMatrix x = testing::MakeMatrix(c, {{0}, {0.5}, {10}, {10.5}, {20}, {20.5}});
  CurveReport amb = DifficultyCurve(x, c, Axis::kAmbiguity, 5);
  REQUIRE(amb.bins.size() == 1);
  CHECK(amb.range_min == amb.range_max);
  CurveReport var = DifficultyCurve(x, c, Axis::kVariability, 5);
  CHECK(var.bins.size() >= 1);
  Corpus plain = testing::MakeCorpus({"A", "A", "B", "B"});
  EmbeddingMatrix y = testing::MakeMatrix(plain, {{0}, {1}, {5}, {6}});
  CHECK_THROWS_AS(DifficultyCurve(y, plain, Axis::kAmbiguity, 5), DataError);
  CHECK(ParseAxis("variability") == Axis::kVariability);
  CHECK_THROWS_AS(ParseAxis("frequency"), UsageError);
}
