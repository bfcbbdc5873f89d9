#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "rdsnet/estimators.hpp"
#include "rdsnet/graph.hpp"
#include "rdsnet/rds.hpp"
#include "test_support.hpp"

using namespace rdsnet;

namespace {

AttributedGraph star_graph(int leaves) {
  auto g = AttributedGraph::with_nodes(leaves + 1);
  for (int i = 1; i <= leaves; ++i) g.add_edge(0, i);
  return g;
}

AttributedGraph path_graph(int n) {
  auto g = AttributedGraph::with_nodes(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

AttributedGraph complete_graph(int n) {
  auto g = AttributedGraph::with_nodes(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

void check_forest_shape(const ReferralForest& f) {
  for (int i = 0; i < f.n(); ++i) {
    if (f.parent[static_cast<std::size_t>(i)]) {
      int p = *f.parent[static_cast<std::size_t>(i)];
      CHECK(f.wave[static_cast<std::size_t>(i)] ==
            f.wave[static_cast<std::size_t>(p)] + 1);
    } else {
      CHECK(f.wave[static_cast<std::size_t>(i)] == 0);
    }
    CHECK(f.out_degree(i) <= 5);  // tests below never exceed 5 coupons
  }
}

}  // namespace

TEST_CASE("star population seeded at the hub yields one depth-1 tree") {
  auto g = star_graph(5);
  RdsConfig cfg;
  cfg.n_seeds = 1;
  cfg.seed_selection = RdsConfig::SeedSelection::degree_proportional;
  cfg.coupons_per_respondent = 5;
  cfg.acceptance_prob = 1.0;
  cfg.target_sample = 6;
  bool found = false;
  for (std::uint64_t s = 0; s < 64 && !found; ++s) {
    cfg.rng_seed = s;
    auto res = simulate_rds(g, cfg);
    auto roots = res.forest.roots();
    REQUIRE(roots.size() == 1);
    if (res.node_index[static_cast<std::size_t>(roots[0])] != 0) continue;  // seed not at hub
    found = true;
    CHECK(res.sample.n() == 6);
    CHECK(res.forest.out_degree(roots[0]) == 5);
    int max_wave = 0;
    for (int w : res.forest.wave) max_wave = std::max(max_wave, w);
    CHECK(max_wave == 1);
    check_forest_shape(res.forest);
  }
  REQUIRE(found);
}

TEST_CASE("path population with one coupon grows a single 20-wave chain") {
  auto g = path_graph(21);
  RdsConfig cfg;
  cfg.n_seeds = 1;
  cfg.seed_selection = RdsConfig::SeedSelection::uniform;
  cfg.coupons_per_respondent = 1;
  cfg.acceptance_prob = 1.0;
  cfg.target_sample = 21;
  bool found = false;
  for (std::uint64_t s = 0; s < 200 && !found; ++s) {
    cfg.rng_seed = s;
    auto res = simulate_rds(g, cfg);
    auto roots = res.forest.roots();
    REQUIRE(roots.size() == 1);
    int seed_node = res.node_index[static_cast<std::size_t>(roots[0])];
    if (seed_node != 0 && seed_node != 20) continue;  // need an endpoint seed
    found = true;
    REQUIRE(res.sample.n() == 21);
    int max_wave = 0;
    for (int w : res.forest.wave) max_wave = std::max(max_wave, w);
    CHECK(max_wave == 20);
    for (int i = 0; i < res.forest.n(); ++i) CHECK(res.forest.out_degree(i) <= 1);
    check_forest_shape(res.forest);
  }
  REQUIRE(found);
}

TEST_CASE("recruitment samples without replacement and reports degrees truthfully") {
  auto g = erdos_renyi(2000, 8.0, 31);
  assign_attributes(g, "gender", {{"male", 0.7}, {"female", 0.3}}, 32);
  RdsConfig cfg;  // defaults: 6 seeds, 3 coupons, acceptance 0.5, target 500
  cfg.rng_seed = 33;
  auto res = simulate_rds(g, cfg);
  CHECK(res.sample.n() == 500);
  CHECK_FALSE(res.shortfall);
  std::set<int> seen(res.node_index.begin(), res.node_index.end());
  CHECK(seen.size() == res.node_index.size());
  for (int i = 0; i < res.sample.n(); ++i) {
    int node = res.node_index[static_cast<std::size_t>(i)];
    CHECK(res.sample.records[static_cast<std::size_t>(i)].acquaintance_degree ==
          g.degree(node));
    CHECK(*res.sample.records[static_cast<std::size_t>(i)].gender ==
          g.attribute_value("gender", node));
  }
  check_forest_shape(res.forest);

  auto again = simulate_rds(g, cfg);
  CHECK(again.node_index == res.node_index);
  CHECK(again.forest.wave == res.forest.wave);
  CHECK(again.sample.records == res.sample.records);
}

TEST_CASE("full acceptance with ample coupons reaches the target exactly") {
  auto g = complete_graph(60);
  RdsConfig cfg;
  cfg.n_seeds = 2;
  cfg.coupons_per_respondent = 5;
  cfg.acceptance_prob = 1.0;
  cfg.target_sample = 60;
  cfg.rng_seed = 5;
  auto res = simulate_rds(g, cfg);
  CHECK(res.sample.n() == 60);
  CHECK_FALSE(res.shortfall);
}

TEST_CASE("shortfall is reported, not thrown") {
  auto g = AttributedGraph::with_nodes(50);  // a 4-path plus 46 isolated nodes
  for (int i = 0; i < 3; ++i) g.add_edge(i, i + 1);
  RdsConfig cfg;
  cfg.n_seeds = 1;
  cfg.seed_selection = RdsConfig::SeedSelection::uniform;
  cfg.target_sample = 50;
  cfg.acceptance_prob = 1.0;
  cfg.rng_seed = 1;
  auto res = simulate_rds(g, cfg);
  CHECK(res.shortfall);
  CHECK(res.sample.n() < 50);
}

TEST_CASE("a target beyond the population size is rejected") {
  auto g = path_graph(4);
  RdsConfig cfg;
  cfg.target_sample = 50;
  CHECK_THROWS(simulate_rds(g, cfg));
}

TEST_CASE("dataset with no recruiter coupons becomes an all-seed forest") {
  auto ds = testsup::flat_dataset({5, 5, 5, 5});
  auto f = forest_from_dataset(ds);
  CHECK(f.n() == 4);
  CHECK(f.roots().size() == 4);
  for (int w : f.wave) CHECK(w == 0);
}

TEST_CASE("two-link chain gets waves 0, 1, 2") {
  std::vector<SurveyRecord> recs{testsup::record("A"), testsup::record("B"),
                                 testsup::record("C")};
  recs[0].own_coupons = {"C1"};
  recs[1].own_coupons = {"C2"};
  recs[1].recruiter_coupon = "C1";
  recs[2].recruiter_coupon = "C2";
  auto ds = testsup::dataset(recs);
  auto f = forest_from_dataset(ds);
  CHECK(f.wave == std::vector<int>{0, 1, 2});
  CHECK(f.roots() == std::vector<int>{0});
  CHECK(f.out_degree(0) == 1);
}

TEST_CASE("cyclic coupon linkage is detected as corrupt") {
  std::vector<SurveyRecord> recs{testsup::record("A"), testsup::record("B")};
  recs[0].own_coupons = {"C1"};
  recs[1].own_coupons = {"C2"};
  recs[0].recruiter_coupon = "C2";
  recs[1].recruiter_coupon = "C1";
  auto ds = testsup::dataset(recs);
  CHECK_THROWS_AS(forest_from_dataset(ds), DatasetError);
}

TEST_CASE("trajectory of a constant variable is flat at that constant") {
  std::vector<SurveyRecord> recs;
  for (int i = 0; i < 6; ++i) {
    auto r = testsup::record("R" + std::to_string(i));
    r.close_friend_degree = 4;
    r.acquaintance_degree = 3 + i;  // unequal weights must not matter
    if (i > 0) {
      recs[static_cast<std::size_t>(i - 1)].own_coupons = {"K" + std::to_string(i)};
    }
    recs.push_back(r);
  }
  for (int i = 1; i < 6; ++i)
    recs[static_cast<std::size_t>(i)].recruiter_coupon = "K" + std::to_string(i);
  auto ds = testsup::dataset(recs);
  auto f = forest_from_dataset(ds);
  auto rows = wave_trajectory(f, ds, "close_friend_degree");
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) CHECK(r.estimate == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rows.back().n == 6);
}

TEST_CASE("trajectory of a seed-only forest has a single row") {
  auto ds = testsup::flat_dataset({5});
  auto f = forest_from_dataset(ds);
  auto rows = wave_trajectory(f, ds, "acquaintance_degree");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].wave == 0);
  CHECK(rows[0].estimate == doctest::Approx(5.0));
}

TEST_CASE("trajectory approaches the population value as waves accumulate") {
  auto g = erdos_renyi(2000, 8.0, 81);
  assign_attributes(g, "gender", {{"male", 0.3}, {"female", 0.7}}, 82);
  RdsConfig cfg;
  cfg.rng_seed = 83;
  auto res = simulate_rds(g, cfg);
  auto rows = wave_trajectory(res.forest, res.sample, "gender=male");
  REQUIRE(rows.size() > 3);
  CHECK(std::abs(rows.back().estimate - 0.3) < 0.1);
}

TEST_CASE("trajectory with no usable observations throws") {
  auto ds = testsup::flat_dataset({5, 6});
  auto f = forest_from_dataset(ds);
  CHECK_THROWS(wave_trajectory(f, ds, "kinship_degree"));  // all missing
}

TEST_CASE("forest csv round trip preserves linkage and waves") {
  testsup::TempDir tmp("rds");
  auto g = erdos_renyi(300, 6.0, 17);
  RdsConfig cfg;
  cfg.target_sample = 120;
  cfg.rng_seed = 18;
  auto res = simulate_rds(g, cfg);
  save_forest_csv(res.forest, tmp.file("forest.csv"));
  auto back = load_forest_csv(tmp.file("forest.csv"));
  REQUIRE(back.n() == res.forest.n());
  CHECK(back.ids == res.forest.ids);
  CHECK(back.wave == res.forest.wave);
  for (int i = 0; i < back.n(); ++i) {
    bool seed_before = res.forest.is_seed(i);
    CHECK(back.is_seed(i) == seed_before);
  }
}
