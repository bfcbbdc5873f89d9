// Generates the synthetic 2024-style survey fixture shipped in data/.
// The referral forest and degree margins are engineered exactly:
//   1466 records, 309 seeds, 1157 referral edges (mean out-degree 0.78922),
//   out-degree histogram {0:821, 1:233, 2:312, 3:100}, max wave 20,
//   zero/skip fractions 0.820 / 0.450 / 0.120 / 0.560 for the
//   kinship / close-friendship / acquaintance / referral networks,
//   close-friendship RDS-II mean tuned into [2.45, 2.55].
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "rdsnet/estimators.hpp"
#include "rdsnet/rds.hpp"
#include "rdsnet/rng.hpp"
#include "rdsnet/survey.hpp"
#include "rdsnet/trees.hpp"

using namespace rdsnet;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) {
    std::fprintf(stderr, "fixture check failed: %s\n", what.c_str());
    std::exit(1);
  }
}

// Draws a negative-binomial count as a gamma-Poisson mixture.
int neg_binomial(Rng& rng, double mean, double size) {
  double lambda = gamma_draw(rng, size, mean / size);
  return poisson(rng, lambda);
}

// Picks k distinct indices from 0..n-1, uniformly.
std::vector<int> pick_subset(Rng& rng, int n, int k, const std::vector<int>& from) {
  std::vector<int> pool = from.empty() ? std::vector<int>() : from;
  if (pool.empty()) {
    pool.resize(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_path = argc > 1 ? argv[1] : "data/fixture_2024.csv";
  Rng rng = make_rng(0x20240FE1);

  // --- forest structure: wave sizes and per-wave parent out-degree mix ----
  const std::vector<int> wave_size = {309, 281, 213, 159, 114, 89, 69, 54, 42, 33, 25,
                                      20,  15,  12,  9,   7,   5,  4,  3,  2,  1};
  struct Mix {
    int d1, d2, d3;  // parents with out-degree 1 / 2 / 3 in this wave
  };
  const std::vector<Mix> mix = {{1, 140, 0}, {0, 105, 1}, {0, 39, 27}, {0, 27, 20},
                                {0, 1, 29},  {0, 0, 23},  {54, 0, 0},  {42, 0, 0},
                                {33, 0, 0},  {25, 0, 0},  {20, 0, 0},  {15, 0, 0},
                                {12, 0, 0},  {9, 0, 0},   {7, 0, 0},   {5, 0, 0},
                                {4, 0, 0},   {3, 0, 0},   {2, 0, 0},   {1, 0, 0}};
  const int n = std::accumulate(wave_size.begin(), wave_size.end(), 0);
  require(n == 1466, "node count");
  int d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t k = 0; k < mix.size(); ++k) {
    require(mix[k].d1 + 2 * mix[k].d2 + 3 * mix[k].d3 == wave_size[k + 1],
            "wave slot balance");
    require(mix[k].d1 + mix[k].d2 + mix[k].d3 <= wave_size[k], "parent supply");
    d1 += mix[k].d1;
    d2 += mix[k].d2;
    d3 += mix[k].d3;
  }
  require(d1 == 233 && d2 == 312 && d3 == 100, "out-degree histogram");

  std::vector<int> wave(static_cast<std::size_t>(n));
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<int> child_rank(static_cast<std::size_t>(n), 0);  // 1-based coupon slot
  std::vector<int> out_deg(static_cast<std::size_t>(n), 0);

  std::vector<int> offset(wave_size.size() + 1, 0);
  for (std::size_t k = 0; k < wave_size.size(); ++k)
    offset[k + 1] = offset[k] + wave_size[k];
  for (std::size_t k = 0; k < wave_size.size(); ++k)
    for (int i = offset[k]; i < offset[k + 1]; ++i)
      wave[static_cast<std::size_t>(i)] = static_cast<int>(k);

  for (std::size_t k = 0; k < mix.size(); ++k) {
    std::vector<int> members(static_cast<std::size_t>(wave_size[k]));
    std::iota(members.begin(), members.end(), offset[k]);
    std::shuffle(members.begin(), members.end(), rng);
    std::vector<int> slots;  // parent index repeated once per child slot
    int at = 0;
    for (int rep = 0; rep < mix[k].d3; ++rep, ++at)
      for (int c = 0; c < 3; ++c) slots.push_back(members[static_cast<std::size_t>(at)]);
    for (int rep = 0; rep < mix[k].d2; ++rep, ++at)
      for (int c = 0; c < 2; ++c) slots.push_back(members[static_cast<std::size_t>(at)]);
    for (int rep = 0; rep < mix[k].d1; ++rep, ++at)
      slots.push_back(members[static_cast<std::size_t>(at)]);
    std::shuffle(slots.begin(), slots.end(), rng);
    require(static_cast<int>(slots.size()) == wave_size[k + 1], "slot count");
    for (int j = 0; j < wave_size[k + 1]; ++j) {
      int child = offset[k + 1] + j;
      int p = slots[static_cast<std::size_t>(j)];
      parent[static_cast<std::size_t>(child)] = p;
      out_deg[static_cast<std::size_t>(p)] += 1;
      child_rank[static_cast<std::size_t>(child)] = out_deg[static_cast<std::size_t>(p)];
    }
  }

  // --- attributes (recruitment-correlated gender, the rest independent) ---
  std::vector<std::string> gender(static_cast<std::size_t>(n));
  std::vector<std::string> age(static_cast<std::size_t>(n));
  std::vector<std::string> race(static_cast<std::size_t>(n));
  std::vector<std::string> ethnicity(static_cast<std::size_t>(n));
  std::vector<std::string> shelter(static_cast<std::size_t>(n));
  std::vector<std::string> hub(static_cast<std::size_t>(n));
  std::vector<int> veteran(static_cast<std::size_t>(n)), chronic(static_cast<std::size_t>(n)),
      mental(static_cast<std::size_t>(n)), subst(static_cast<std::size_t>(n)),
      disab(static_cast<std::size_t>(n));

  const std::vector<std::string> age_levels = {"18-24", "25-34", "35-44",
                                               "45-54", "55-64", "65+"};
  const std::vector<double> age_w = {0.10, 0.22, 0.24, 0.22, 0.16, 0.06};
  const std::vector<std::string> race_levels = {"white", "black", "indigenous",
                                                "asian", "multiracial"};
  const std::vector<double> race_w = {0.38, 0.32, 0.08, 0.04, 0.18};
  const std::vector<std::string> shelter_levels = {"housed", "sheltered", "unsheltered"};
  const std::vector<double> shelter_w = {0.08, 0.45, 0.47};

  for (int i = 0; i < n; ++i) {
    std::size_t ui = static_cast<std::size_t>(i);
    int p = parent[ui];
    if (p < 0) {
      double u = uniform01(rng);
      gender[ui] = u < 0.70 ? "male" : (u < 0.98 ? "female" : "other");
    } else {
      const std::string& pg = gender[static_cast<std::size_t>(p)];
      double p_male = pg == "male" ? 0.79 : (pg == "female" ? 0.60 : 0.50);
      double u = uniform01(rng);
      gender[ui] = u < p_male ? "male" : (u < 0.99 ? "female" : "other");
    }
    age[ui] = age_levels[static_cast<std::size_t>(categorical(rng, age_w))];
    race[ui] = race_levels[static_cast<std::size_t>(categorical(rng, race_w))];
    ethnicity[ui] = bernoulli(rng, 0.28) ? "hispanic" : "non-hispanic";
    shelter[ui] = shelter_levels[static_cast<std::size_t>(categorical(rng, shelter_w))];
    hub[ui] = "H0" + std::to_string(1 + uniform_int(rng, 6));
    veteran[ui] = bernoulli(rng, 0.09);
    chronic[ui] = bernoulli(rng, 0.38);
    mental[ui] = bernoulli(rng, 0.42);
    subst[ui] = bernoulli(rng, 0.33);
    disab[ui] = bernoulli(rng, 0.29);
  }

  // --- degree variables with exact skip/zero counts ----------------------
  // kinship & close friendship share the 40 skipped interviews (N = 1426);
  // acquaintance has its own 103 skips (N = 1363).
  std::vector<int> acq(static_cast<std::size_t>(n), -1);     // -1 = skip
  std::vector<int> friend_d(static_cast<std::size_t>(n), -1);
  std::vector<int> kin(static_cast<std::size_t>(n), -1);

  std::vector<int> all_idx(static_cast<std::size_t>(n));
  std::iota(all_idx.begin(), all_idx.end(), 0);
  auto fk_skip = pick_subset(rng, n, 40, all_idx);
  std::vector<char> is_fk_skip(static_cast<std::size_t>(n), 0);
  for (int i : fk_skip) is_fk_skip[static_cast<std::size_t>(i)] = 1;
  auto acq_skip = pick_subset(rng, n, 103, all_idx);
  std::vector<char> is_acq_skip(static_cast<std::size_t>(n), 0);
  for (int i : acq_skip) is_acq_skip[static_cast<std::size_t>(i)] = 1;

  // acquaintance: 73 zeros among the 1363 answers, positives heavy-tailed
  {
    std::vector<int> answered;
    for (int i = 0; i < n; ++i)
      if (!is_acq_skip[static_cast<std::size_t>(i)]) answered.push_back(i);
    auto zeros = pick_subset(rng, 0, 73, answered);
    std::vector<char> is_zero(static_cast<std::size_t>(n), 0);
    for (int i : zeros) is_zero[static_cast<std::size_t>(i)] = 1;
    for (int i : answered)
      acq[static_cast<std::size_t>(i)] =
          is_zero[static_cast<std::size_t>(i)] ? 0 : std::max(1, neg_binomial(rng, 37.0, 1.4));
  }

  // close friendship: 620 zeros among 1426 answers (zeros lean toward the
  // chronically homeless), positives truncated NB capped at the top code
  {
    std::vector<int> answered;
    for (int i = 0; i < n; ++i)
      if (!is_fk_skip[static_cast<std::size_t>(i)]) answered.push_back(i);
    std::vector<std::pair<double, int>> keyed;
    for (int i : answered) {
      double w = std::exp(0.8 * chronic[static_cast<std::size_t>(i)] +
                          0.4 * (shelter[static_cast<std::size_t>(i)] == "unsheltered"));
      keyed.emplace_back(-std::log(uniform01(rng)) / w, i);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<char> is_zero(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < 620; ++j) is_zero[static_cast<std::size_t>(keyed[static_cast<std::size_t>(j)].second)] = 1;
    for (int i : answered) {
      std::size_t ui = static_cast<std::size_t>(i);
      if (is_zero[ui]) {
        friend_d[ui] = 0;
        continue;
      }
      double mean = 4.2 * std::exp(0.25 * (shelter[ui] == "unsheltered") -
                                   0.20 * (gender[ui] == "female"));
      int v = 0;
      do {
        v = neg_binomial(rng, mean, 1.3);
      } while (v < 1);
      friend_d[ui] = std::min(v, 20);
    }
  }

  // kinship: 1162 zeros among 1426 answers, positives small counts
  {
    std::vector<int> answered;
    for (int i = 0; i < n; ++i)
      if (!is_fk_skip[static_cast<std::size_t>(i)]) answered.push_back(i);
    auto positives = pick_subset(rng, 0, 264, answered);
    std::vector<char> is_pos(static_cast<std::size_t>(n), 0);
    for (int i : positives) is_pos[static_cast<std::size_t>(i)] = 1;
    for (int i : answered) {
      std::size_t ui = static_cast<std::size_t>(i);
      kin[ui] = is_pos[ui] ? 1 + neg_binomial(rng, 1.0, 2.0) : 0;
    }
  }

  // --- assemble records in shuffled row order -----------------------------
  std::vector<int> row_of(static_cast<std::size_t>(n));  // construction idx -> row
  {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int r = 0; r < n; ++r) row_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = r;
  }
  auto id_of = [](int row) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "R%05d", row + 1);
    return std::string(buf);
  };
  auto coupon_of = [&](int cons_idx, int slot) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "C%05d-%d", row_of[static_cast<std::size_t>(cons_idx)] + 1, slot);
    return std::string(buf);
  };

  std::vector<SurveyRecord> records(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::size_t ui = static_cast<std::size_t>(i);
    int row = row_of[ui];
    SurveyRecord& r = records[static_cast<std::size_t>(row)];
    r.respondent_id = id_of(row);
    if (parent[ui] >= 0)
      r.recruiter_coupon = coupon_of(parent[ui], child_rank[ui]);
    for (int c = 1; c <= 3; ++c) r.own_coupons.push_back(coupon_of(i, c));
    r.hub_id = hub[ui];
    r.age_bracket = age[ui];
    r.gender = gender[ui];
    r.race = race[ui];
    r.ethnicity = ethnicity[ui];
    r.shelter_status = shelter[ui];
    r.veteran = veteran[ui] != 0;
    r.chronic = chronic[ui] != 0;
    r.mental_health = mental[ui] != 0;
    r.substance_use = subst[ui] != 0;
    r.disability = disab[ui] != 0;
    if (acq[ui] >= 0) r.acquaintance_degree = acq[ui];
    if (friend_d[ui] >= 0) r.close_friend_degree = friend_d[ui];
    if (kin[ui] >= 0) r.kinship_degree = kin[ui];
  }

  LoadResult lr = validate_records(std::move(records), 20, OrphanPolicy::reject, "2024");
  for (const auto& issue : lr.issues)
    std::fprintf(stderr, "row %d: %s\n", issue.row, issue.message.c_str());
  require(lr.ok(), "validation");
  SurveyDataset ds = std::move(lr.dataset);

  // --- verify the engineered margins --------------------------------------
  ReferralForest forest = forest_from_dataset(ds);
  WaveStats ws = wave_stats(forest);
  require(ws.max_wave == 20, "max wave = 20");
  OutDegreeHistogram od = referral_degree_distribution(forest);
  require(std::abs(od.mean - 0.789) <= 0.01, "referral mean out-degree");
  require(od.counts[0] == 821 && od.counts[1] == 233 && od.counts[2] == 312 &&
              od.counts[3] == 100,
          "out-degree histogram in forest");
  require(static_cast<int>(forest.roots().size()) == 309, "seed count");

  auto zs = zero_skip_summary(ds);
  auto frac_of = [&](const std::string& name) {
    for (const auto& row : zs)
      if (row.network == name) return row.fraction_zero_or_skip;
    require(false, "summary row " + name);
    return 0.0;
  };
  require(std::abs(frac_of("kinship") - 0.82) <= 0.005, "kinship zero/skip fraction");
  require(std::abs(frac_of("close_friendship") - 0.45) <= 0.005,
          "friendship zero/skip fraction");
  require(std::abs(frac_of("acquaintance") - 0.12) <= 0.005,
          "acquaintance zero/skip fraction");
  require(std::abs(frac_of("referral") - 0.56) <= 0.005, "referral zero fraction");

  // tune the close-friendship RDS-II mean into [2.45, 2.55] by nudging
  // positive responses (never touching zeros, skips, or the top code)
  {
    const double target = 2.5;
    int guard = 0;
    while (true) {
      double est = rds2_mean(ds, "close_friend_degree").estimate;
      if (std::abs(est - target) <= 0.02) break;
      require(++guard < 20000, "rds2 tuning converges");
      int dir = est < target ? 1 : -1;
      for (int tries = 0; tries < n; ++tries) {
        int row = uniform_int(rng, n);
        auto& v = ds.records[static_cast<std::size_t>(row)].close_friend_degree;
        if (!v || *v < 1) continue;
        if (dir > 0 && *v < 20) {
          *v += 1;
          break;
        }
        if (dir < 0 && *v > 1) {
          *v -= 1;
          break;
        }
      }
    }
    double est = rds2_mean(ds, "close_friend_degree").estimate;
    require(est >= 2.45 && est <= 2.55, "close-friendship RDS-II mean");
    std::printf("close-friendship RDS-II mean: %.4f\n", est);
  }

  save_dataset(ds, out_path, FileFormat::csv);
  std::printf("wrote %s: %d records, %d seeds, %d referral edges, max wave %d\n",
              out_path.c_str(), ds.n(), static_cast<int>(forest.roots().size()),
              ds.n() - static_cast<int>(forest.roots().size()), ws.max_wave);
  return 0;
}
