#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dmtl/evalrank.hpp"
#include "metric_oracles.hpp"

using namespace dmtl;
using namespace dmtl::eval;
using data::ItemIndex;

namespace {

// Random group test table: groups x items with random ratings on a random
// subset of cells.
grouping::GroupRatingsTable random_test(std::mt19937_64& rng, std::size_t groups, std::size_t items) {
  grouping::GroupRatingsTable t;
  t.group_count = groups;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < items; ++i) {
      if (rng() % 2) continue;
      const double r = 1.0 + static_cast<double>(rng() % 9) * 0.5;
      t.tuples.push_back({static_cast<grouping::GroupIndex>(g), static_cast<ItemIndex>(i), r, {0}});
    }
  }
  return t;
}

}  // namespace

TEST_CASE("precision and recall examples") {
  std::vector<ItemIndex> ranked(10);
  for (ItemIndex i = 0; i < 10; ++i) ranked[i] = i;
  const std::vector<ItemIndex> all(ranked);
  CHECK(precision_at_k(ranked, all, 10) == 1.0);
  const std::vector<ItemIndex> three{2, 5, 9, 40};
  CHECK(precision_at_k(ranked, three, 10) == doctest::Approx(0.3));
  const std::vector<ItemIndex> four{1, 3, 20, 21};
  CHECK(*recall_at_k(ranked, four, 10) == 0.5);
  const std::vector<ItemIndex> inside{0, 4};
  CHECK(*recall_at_k(ranked, inside, 10) == 1.0);
  CHECK_FALSE(recall_at_k(ranked, {}, 10).has_value());

  // Fewer candidates than K.
  const std::vector<ItemIndex> short_list{7, 8};
  const std::vector<ItemIndex> rel{7, 8};
  CHECK(precision_at_k(short_list, rel, 10) == doctest::Approx(0.2));
  CHECK(precision_at_k(short_list, rel, 10, PrecisionDenominator::min_k_ranked) == 1.0);
  CHECK_THROWS_AS(precision_at_k(ranked, all, 0), DomainError);
  CHECK_THROWS_AS(recall_at_k(ranked, all, 0), DomainError);
}

TEST_CASE("ranking metrics agree with set-intersection oracles") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_ranking(rng);
    for (auto d : {PrecisionDenominator::k, PrecisionDenominator::min_k_ranked}) {
      CHECK(precision_at_k(s.ranked, s.relevant, s.k, d) == testing::brute_precision(s, d));
    }
    const auto rec = recall_at_k(s.ranked, s.relevant, s.k);
    CHECK(rec.has_value() == !s.relevant.empty());
    if (rec) {
      CHECK(*rec == static_cast<double>(testing::brute_hits(s)) / static_cast<double>(s.relevant.size()));
      // Monotone in K, and P * K is a whole number of hits.
      CHECK(*recall_at_k(s.ranked, s.relevant, s.k + 1) >= *rec);
    }
    const double pk = precision_at_k(s.ranked, s.relevant, s.k) * static_cast<double>(s.k);
    CHECK(std::abs(pk - std::round(pk)) <= 1e-12);
  }
}

TEST_CASE("profiling metrics") {
  const std::vector<std::size_t> labels{0, 1, 2, 1, 0};
  const auto perfect = profiling_metrics(labels, labels, 3);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  // Balanced two-class truth, everything predicted as class 0:
  // class 0: p = 1/2, r = 1, f = 2/3; class 1: p = r = f = 0.
  const std::vector<std::size_t> truth{0, 0, 1, 1}, zeros{0, 0, 0, 0};
  const auto m = profiling_metrics(truth, zeros, 2);
  CHECK(m.precision == doctest::Approx(0.25));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.f1 == doctest::Approx(1.0 / 3.0));
  CHECK(m.confusion[1][0] == 2);
  CHECK(m.samples == 4);

  const std::vector<std::size_t> bad{0, 3};
  CHECK_THROWS_AS(profiling_metrics(bad, bad, 3), IndexError);
  CHECK_THROWS_AS(profiling_metrics(truth, bad, 3), ShapeError);

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_labels(rng);
    const auto got = profiling_metrics(s.truth, s.pred, s.classes);
    const auto want = testing::brute_profiling(s.truth, s.pred, s.classes);
    CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
    CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
    CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
  }
}

TEST_CASE("rank_items orders by score then item") {
  const std::vector<ItemIndex> c{5, 2, 9, 1};
  const std::vector<double> s{1.0, 3.0, 1.0, 0.0};
  CHECK(rank_items(c, s) == std::vector<ItemIndex>{2, 5, 9, 1});
  CHECK_THROWS_AS(rank_items(c, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("evaluate_method with oracle and constant predictors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto test = random_test(rng, 6, 25);
    const RelevanceSpec spec;
    std::vector<std::vector<double>> truth(6, std::vector<double>(25, 0.0));
    for (const auto& t : test.tuples) truth[t.group][t.item] = t.rating;

    const auto oracle = evaluate_method([&](grouping::GroupIndex g, ItemIndex i) { return truth[g][i]; }, test, spec);
    const auto constant = evaluate_method([](grouping::GroupIndex, ItemIndex) { return 2.0; }, test, spec);

    double ideal_p = 0, ideal_r = 0, const_p = 0, const_r = 0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < 6; ++g) {
      std::vector<ItemIndex> items, rel;
      for (ItemIndex i = 0; i < 25; ++i) {
        if (truth[g][i] == 0.0) continue;
        items.push_back(i);
        if (truth[g][i] >= 3.5) rel.push_back(i);
      }
      if (rel.empty()) continue;
      ++n;
      const double hits = static_cast<double>(std::min<std::size_t>(10, rel.size()));
      ideal_p += hits / 10.0;
      ideal_r += hits / static_cast<double>(rel.size());
      // Constant scores: ascending item index.
      double h = 0;
      for (std::size_t p = 0; p < items.size() && p < 10; ++p) h += std::count(rel.begin(), rel.end(), items[p]);
      const_p += h / 10.0;
      const_r += h / static_cast<double>(rel.size());
    }
    REQUIRE(n > 0);
    CHECK(oracle.evaluated == n);
    CHECK(oracle.precision == doctest::Approx(ideal_p / n));
    CHECK(oracle.recall == doctest::Approx(ideal_r / n));
    CHECK(constant.precision == doctest::Approx(const_p / n));
    CHECK(constant.recall == doctest::Approx(const_r / n));
    CHECK(oracle.precision >= constant.precision);
  }
}

TEST_CASE("evaluate_method is invariant under increasing transforms") {
  std::mt19937_64 rng(6);
  const auto test = random_test(rng, 8, 30);
  std::vector<double> noise(8 * 30);
  for (double& v : noise) v = std::uniform_real_distribution<double>(-2, 2)(rng);
  const RelevanceSpec spec;
  const auto base = evaluate_method([&](grouping::GroupIndex g, ItemIndex i) { return noise[g * 30 + i]; }, test, spec);
  const auto warped = evaluate_method(
      [&](grouping::GroupIndex g, ItemIndex i) { return std::exp(3.0 * noise[g * 30 + i]) + 1.0; }, test, spec);
  CHECK(base.precision == warped.precision);
  CHECK(base.recall == warped.recall);
  CHECK(base.precision >= 0.0);
  CHECK(base.precision <= 1.0);
}

TEST_CASE("evaluate_method candidate modes and errors") {
  grouping::GroupRatingsTable test;
  test.group_count = 2;
  test.tuples = {{0, 3, 5.0, {0}}, {0, 4, 1.0, {0}}, {1, 1, 2.0, {1}}};
  const RelevanceSpec spec;
  const auto m = evaluate_method([](grouping::GroupIndex, ItemIndex i) { return static_cast<double>(i); }, test, spec);
  CHECK(m.evaluated == 1);
  CHECK(m.skipped == 1);
  CHECK(m.precision == doctest::Approx(0.1));
  CHECK(m.recall == 1.0);

  RelevanceSpec catalog_spec;
  catalog_spec.candidates = CandidateSet::catalog;
  catalog_spec.k = 2;
  const std::vector<std::vector<ItemIndex>> catalog{{0, 1, 2, 4, 5}, {0, 1}};
  // Catalog items 5 and 4 outrank the relevant item 3.
  const auto c = evaluate_method([](grouping::GroupIndex, ItemIndex i) { return static_cast<double>(i); }, test,
                                 catalog_spec, &catalog);
  CHECK(c.precision == 0.0);
  CHECK_THROWS_AS(evaluate_method([](grouping::GroupIndex, ItemIndex) { return 0.0; }, test, catalog_spec), ConfigError);

  grouping::GroupRatingsTable empty;
  CHECK_THROWS_AS(evaluate_method([](grouping::GroupIndex, ItemIndex) { return 0.0; }, empty, spec), ProtocolError);
  grouping::GroupRatingsTable low;
  low.group_count = 1;
  low.tuples = {{0, 0, 2.0, {0}}};
  CHECK_THROWS_AS(evaluate_method([](grouping::GroupIndex, ItemIndex) { return 0.0; }, low, spec), ProtocolError);

  RelevanceSpec bad;
  bad.threshold = 7.0;
  CHECK_THROWS_AS(bad.validate({}), ConfigError);
  CHECK(precision_denominator_from_string(to_string(PrecisionDenominator::min_k_ranked)) ==
        PrecisionDenominator::min_k_ranked);
  CHECK(candidate_set_from_string("catalog") == CandidateSet::catalog);
  CHECK_THROWS_AS(candidate_set_from_string("all"), ConfigError);
}

TEST_CASE("individual table") {
  const auto t = data::parse_movielens_text("a\tx\t4\t0\nb\ty\t2\t0\na\ty\t5\t0\n");
  const auto g = individual_table(t);
  CHECK(g.group_count == 2);
  REQUIRE(g.tuples.size() == 3);
  CHECK(g.tuples[0].group == 0);
  CHECK(g.tuples[1].group == 0);
  CHECK(g.tuples[1].item == 1);
  CHECK(g.tuples[2].contributors == std::vector<data::UserIndex>{1});
}

TEST_CASE("report rendering") {
  EvalReport r;
  r.dataset = "ML-100K";
  r.methods.push_back({"svd", "SVD", {0.5, 0.25, 3, 1}});
  r.methods.push_back({"dmtl", "DMTL", {0.123456, 1.0, 4, 0}});
  ProfilingMetrics p;
  p.precision = 0.9;
  p.recall = 0.8;
  p.f1 = 0.85;
  p.samples = 10;
  r.profiling = p;
  r.metadata["seed"] = 42;
  const auto j = report_json(r);
  CHECK(j["dataset"] == "ML-100K");
  CHECK(j["protocol"]["k"] == 10);
  CHECK(j["protocol"]["precision_denominator"] == "k");
  CHECK(j["methods"][1]["tag"] == "dmtl");
  CHECK(j["methods"][0]["groups_skipped"] == 1);
  CHECK(j["profiling"]["averaging"] == "weighted");
  CHECK(j["metadata"]["seed"] == 42);
  CHECK(r.find("dmtl")->metrics.evaluated == 4);
  CHECK(r.find("nope") == nullptr);

  const std::string md = report_markdown(r);
  CHECK(md.find("| Method | ML-100K P@10 | ML-100K R@10 |") != std::string::npos);
  CHECK(md.find("| DMTL | 0.1235 | 1.0000 |") != std::string::npos);
  CHECK(md.find("| ML-100K | 0.9000 | 0.8000 | 0.8500 |") != std::string::npos);
}
