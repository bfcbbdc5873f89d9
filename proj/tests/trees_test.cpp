#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "rdsnet/rng.hpp"
#include "rdsnet/trees.hpp"
#include "test_support.hpp"
#include "tree_oracle.hpp"

using namespace rdsnet;

namespace {

RootedTree tree_from(const std::vector<std::vector<int>>& children,
                     std::vector<std::string> labels = {}) {
  RootedTree t;
  t.children = children;
  t.label = std::move(labels);
  return t;
}

ReferralForest forest_of_chains(const std::vector<int>& chain_lengths) {
  ReferralForest f;
  int next = 0;
  for (int len : chain_lengths) {
    for (int k = 0; k < len; ++k) {
      int id = next++;
      f.ids.push_back("R" + std::to_string(id));
      f.parent.push_back(k == 0 ? std::optional<int>{} : std::optional<int>{id - 1});
      f.wave.push_back(k);
      f.children.push_back({});
      if (k > 0) f.children[static_cast<std::size_t>(id - 1)].push_back(id);
    }
  }
  return f;
}

}  // namespace

TEST_CASE("a single node canonicalizes to the empty parenthesis pair") {
  CHECK(canonical_code(tree_from({{}}), false) == "()");
}

TEST_CASE("child order never changes the canonical code") {
  // root with subtrees: chain of 2 and single leaf, in both orders
  auto a = tree_from({{1, 2}, {3}, {}, {}});   // child 1 has a kid, child 2 is a leaf
  auto b = tree_from({{1, 2}, {}, {3}, {}});   // mirrored
  CHECK(canonical_code(a, false) == canonical_code(b, false));
  CHECK(canonical_code(a, false) != canonical_code(tree_from({{1}, {2}, {3}, {}}), false));
}

TEST_CASE("labeled codes distinguish labelings but refine unlabeled codes") {
  auto mm = tree_from({{1}, {}}, {"male", "male"});
  auto mf = tree_from({{1}, {}}, {"male", "female"});
  CHECK(canonical_code(mm, true) != canonical_code(mf, true));
  CHECK(canonical_code(mm, false) == canonical_code(mf, false));
}

TEST_CASE("canonical classes agree with the brute-force oracle up to six nodes") {
  for (int n = 1; n <= 6; ++n) {
    auto trees = tree_oracle::all_trees(n);
    auto census = tree_oracle::classify(trees);

    std::map<std::string, int> code_class;
    int mismatch = 0;
    for (std::size_t i = 0; i < trees.size(); ++i) {
      std::string code = canonical_code(tree_oracle::to_rooted(trees[i]), false);
      auto [it, inserted] = code_class.emplace(code, census.class_of[i]);
      if (!inserted && it->second != census.class_of[i]) mismatch++;
    }
    CAPTURE(n);
    CHECK(mismatch == 0);
    CHECK(code_class.size() == census.representative.size());
  }
}

TEST_CASE("a forest of singletons collapses to one class") {
  auto f = forest_of_chains({1, 1, 1, 1, 1});
  auto table = iso_census(f, false);
  REQUIRE(table.entries.size() == 1);
  CHECK(table.entries[0].multiplicity == 5);
  CHECK(table.tree_count == 5);
}

TEST_CASE("two chains and a star make two classes with multiplicities 2 and 1") {
  ReferralForest f = forest_of_chains({3, 3});  // two chains of 3
  // append a star of 3: root 6 with children 7, 8
  for (int id = 6; id <= 8; ++id) {
    f.ids.push_back("R" + std::to_string(id));
    f.parent.push_back(id == 6 ? std::optional<int>{} : std::optional<int>{6});
    f.wave.push_back(id == 6 ? 0 : 1);
    f.children.push_back({});
  }
  f.children[6] = {7, 8};
  auto table = iso_census(f, false);
  REQUIRE(table.entries.size() == 2);
  CHECK(table.entries[0].multiplicity == 2);
  CHECK(table.entries[1].multiplicity == 1);
  CHECK(table.tree_count == 3);
  int total = 0;
  for (const auto& e : table.entries) total += e.multiplicity;
  CHECK(total == 3);
}

TEST_CASE("labeled census requires every node to carry the label attributes") {
  auto f = forest_of_chains({2, 1});
  f.attrs["gender"] = {std::optional<std::string>{"male"}, std::nullopt,
                       std::optional<std::string>{"female"}};
  CHECK_THROWS(iso_census(f, true, {"gender"}));
  f.attrs["gender"][1] = "female";
  auto table = iso_census(f, true, {"gender"});
  CHECK(table.tree_count == 2);
}

TEST_CASE("labeled classes split unlabeled classes but never merge them") {
  auto g = erdos_renyi(400, 6.0, 50);
  assign_attributes(g, "gender", {{"male", 0.6}, {"female", 0.4}}, 51);
  RdsConfig cfg;
  cfg.target_sample = 200;
  cfg.rng_seed = 52;
  auto res = simulate_rds(g, cfg);
  auto unlabeled = iso_census(res.forest, false);
  auto labeled = iso_census(res.forest, true, {"gender"});
  CHECK(labeled.entries.size() >= unlabeled.entries.size());

  // two trees with equal labeled codes must also share unlabeled codes
  std::map<std::string, std::string> labeled_to_unlabeled;
  for (int root : res.forest.roots()) {
    auto lt = tree_from_forest(res.forest, root, true, {"gender"});
    auto ut = tree_from_forest(res.forest, root, false, {});
    std::string lc = canonical_code(lt, true);
    std::string uc = canonical_code(ut, false);
    auto [it, inserted] = labeled_to_unlabeled.emplace(lc, uc);
    if (!inserted) CHECK(it->second == uc);
  }
}

TEST_CASE("wave statistics of an all-seed forest are trivial") {
  auto f = forest_of_chains({1, 1, 1});
  auto ws = wave_stats(f);
  CHECK(ws.max_wave == 0);
  REQUIRE(ws.wave_histogram.size() == 1);
  CHECK(ws.wave_histogram[0] == 3);
}

TEST_CASE("a 21-node chain has max wave 20") {
  auto f = forest_of_chains({21});
  auto ws = wave_stats(f);
  CHECK(ws.max_wave == 20);
  REQUIRE(ws.per_tree.size() == 1);
  CHECK(ws.per_tree[0].depth == 20);
  CHECK(ws.per_tree[0].size == 21);
}

TEST_CASE("wave histograms always sum to the node count") {
  auto g = erdos_renyi(500, 7.0, 60);
  RdsConfig cfg;
  cfg.target_sample = 250;
  cfg.rng_seed = 61;
  auto res = simulate_rds(g, cfg);
  auto ws = wave_stats(res.forest);
  int total = 0;
  for (int c : ws.wave_histogram) total += c;
  CHECK(total == res.forest.n());
}

TEST_CASE("out-degree histogram of singletons is all zeros with mean zero") {
  auto f = forest_of_chains({1, 1, 1, 1});
  auto od = referral_degree_distribution(f);
  CHECK(od.mean == 0.0);
  REQUIRE(od.counts.size() >= 4);
  CHECK(od.counts[0] == 4);
  CHECK(od.counts[1] + od.counts[2] + od.counts[3] == 0);
}

TEST_CASE("a full ternary tree of depth two counts 4 internal and 9 leaf nodes") {
  ReferralForest f;
  for (int id = 0; id < 13; ++id) {
    f.ids.push_back("R" + std::to_string(id));
    f.children.push_back({});
  }
  f.parent.assign(13, std::nullopt);
  f.wave.assign(13, 0);
  int next = 1;
  for (int internal = 0; internal < 4; ++internal) {
    for (int k = 0; k < 3 && next < 13; ++k, ++next) {
      f.parent[static_cast<std::size_t>(next)] = internal;
      f.children[static_cast<std::size_t>(internal)].push_back(next);
      f.wave[static_cast<std::size_t>(next)] =
          f.wave[static_cast<std::size_t>(internal)] + 1;
    }
  }
  auto od = referral_degree_distribution(f);
  CHECK(od.counts[3] == 4);
  CHECK(od.counts[0] == 9);
  CHECK(od.mean == doctest::Approx(12.0 / 13.0).epsilon(1e-12));
}

TEST_CASE("fixture forest reproduces the published referral profile") {
  auto ds = load_dataset(testsup::fixture_path(), FileFormat::csv, 20,
                         OrphanPolicy::reject);
  auto f = forest_from_dataset(ds);
  auto od = referral_degree_distribution(f);
  CHECK(std::abs(od.mean - 0.789) <= 0.01);
  CHECK(wave_stats(f).max_wave == 20);

  auto census = iso_census(f, false);
  CHECK(census.tree_count == static_cast<int>(f.roots().size()));
  int total = 0;
  for (const auto& e : census.entries) {
    total += e.multiplicity;
    CHECK(!e.code.empty());
  }
  CHECK(total == census.tree_count);
  // many small chains, few deep trees: the top class dominates
  CHECK(census.entries[0].multiplicity > census.tree_count / 3);
}

TEST_CASE("census table is sorted by multiplicity then code") {
  auto g = erdos_renyi(600, 6.0, 71);
  RdsConfig cfg;
  cfg.target_sample = 300;
  cfg.rng_seed = 72;
  auto res = simulate_rds(g, cfg);
  auto table = iso_census(res.forest, false);
  for (std::size_t i = 1; i < table.entries.size(); ++i) {
    const auto& prev = table.entries[i - 1];
    const auto& cur = table.entries[i];
    bool ordered = prev.multiplicity > cur.multiplicity ||
                   (prev.multiplicity == cur.multiplicity && prev.code < cur.code);
    CHECK(ordered);
  }
}

TEST_CASE("census csv and grid json exports are well formed") {
  testsup::TempDir tmp("trees");
  auto f = forest_of_chains({3, 3, 1});
  auto table = iso_census(f, false);
  save_census_csv(table, tmp.file("census.csv"));
  std::string csv_text = testsup::slurp(tmp.file("census.csv"));
  CHECK(csv_text.find("multiplicity") != std::string::npos);

  std::string json_text = census_grid_json(table);
  CHECK(json_text.find("\"classes\"") != std::string::npos);
  CHECK(json_text.find("\"grid\"") != std::string::npos);
}
