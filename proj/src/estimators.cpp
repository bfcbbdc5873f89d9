#include "rdsnet/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdsnet/rng.hpp"

namespace rdsnet {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB0075EED;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct UsableRows {
  std::vector<double> y;
  std::vector<double> w;  // imputed, strictly positive
  int n = 0;
  double min_y = std::numeric_limits<double>::infinity();
};

// Listwise deletion on y; weights imputed to the median positive weight
// within the contributing rows. Nullopt when nothing usable survives.
std::optional<UsableRows> gather(const SurveyDataset& ds, const std::vector<int>& rows,
                                 const std::string& y_var, const std::string& weight_var,
                                 bool include_seeds) {
  UsableRows u;
  std::vector<double> raw_w;
  for (int i : rows) {
    if (!include_seeds && ds.is_seed(i)) continue;
    auto yv = numeric_value(ds.records[static_cast<std::size_t>(i)], y_var);
    if (!yv) continue;
    auto wv = numeric_value(ds.records[static_cast<std::size_t>(i)], weight_var);
    u.y.push_back(*yv);
    u.min_y = std::min(u.min_y, *yv);
    raw_w.push_back(wv && *wv > 0.0 ? *wv : 0.0);
  }
  u.n = static_cast<int>(u.y.size());
  if (u.n == 0) return std::nullopt;
  std::vector<double> positive;
  for (double w : raw_w)
    if (w > 0.0) positive.push_back(w);
  if (positive.empty()) return std::nullopt;  // weights entirely missing/zero
  double med = median_of(std::move(positive));
  u.w.reserve(raw_w.size());
  for (double w : raw_w) u.w.push_back(w > 0.0 ? w : med);
  return u;
}

double rds2_point(const UsableRows& u) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.y.size(); ++i) {
    num += u.y[i] / u.w[i];
    den += 1.0 / u.w[i];
  }
  return num / den;
}

std::vector<int> all_rows(const SurveyDataset& ds) {
  std::vector<int> rows(static_cast<std::size_t>(ds.n()));
  for (int i = 0; i < ds.n(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

double sample_variance(const std::vector<double>& y) {
  if (y.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(y.size() - 1);
}

RdsEstimate point_only(const SurveyDataset& ds, const std::string& y,
                       const std::string& weight_degree, bool include_seeds) {
  auto u = gather(ds, all_rows(ds), y, weight_degree, include_seeds);
  if (!u)
    throw std::runtime_error("no usable records for '" + y +
                             "' (missing values or all weights missing)");
  RdsEstimate e;
  e.estimate = rds2_point(*u);
  e.n = u->n;
  return e;
}

void attach_interval(RdsEstimate& e, double se, double de, bool nonnegative) {
  e.se = se;
  e.design_effect = de;
  double low = e.estimate - 1.96 * se;
  if (nonnegative) low = std::max(0.0, low);
  e.ci_low = low;
  e.ci_high = e.estimate + 1.96 * se;
}

}  // namespace

RdsEstimate rds2_mean(const SurveyDataset& ds, const std::string& y,
                      const std::string& weight_degree, bool include_seeds) {
  return point_only(ds, y, weight_degree, include_seeds);
}

RdsEstimate rds2_proportion(const SurveyDataset& ds, const std::string& indicator,
                            const std::string& weight_degree, bool include_seeds) {
  RdsEstimate e = point_only(ds, indicator, weight_degree, include_seeds);
  if (e.estimate < -1e-9 || e.estimate > 1.0 + 1e-9)
    throw std::runtime_error("'" + indicator + "' is not a 0/1 indicator");
  return e;
}

BootstrapResult bootstrap_se(
    const ReferralForest& f,
    const std::function<std::optional<double>(const std::vector<int>&)>& statistic,
    int B, std::uint64_t rng_seed, double srs_variance, int threads) {
  if (B < 100) throw std::invalid_argument("bootstrap needs B >= 100");
  std::vector<int> roots = f.roots();
  if (roots.empty()) throw std::invalid_argument("forest has no seeds");
  std::size_t m = roots.size();

  // Each recruitment tree is the sampling cluster: collect its rows once.
  std::vector<std::vector<int>> tree_rows(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<int> stack{roots[k]};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      tree_rows[k].push_back(u);
      const auto& kids = f.children[static_cast<std::size_t>(u)];
      stack.insert(stack.end(), kids.begin(), kids.end());
    }
  }

  std::vector<std::optional<double>> stats(static_cast<std::size_t>(B));
  parallel_for(B, threads, [&](int b) {
    Rng rng = make_rng(substream_seed(rng_seed, kBootstrapStream,
                                      static_cast<std::uint64_t>(b)));
    std::vector<int> rows;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& t = tree_rows[static_cast<std::size_t>(
          uniform_int(rng, static_cast<int>(m)))];
      rows.insert(rows.end(), t.begin(), t.end());
    }
    stats[static_cast<std::size_t>(b)] = statistic(rows);
  });

  std::vector<double> ok;
  ok.reserve(static_cast<std::size_t>(B));
  for (const auto& s : stats)
    if (s) ok.push_back(*s);
  BootstrapResult r;
  r.failures = B - static_cast<int>(ok.size());
  if (r.failures * 10 > B)
    throw std::runtime_error("statistic undefined on more than 10% of bootstrap replicates");
  // With-replacement cluster draws understate the m-cluster variance by
  // (m-1)/m; rescale so a one-cluster forest degenerates gracefully.
  double var = sample_variance(ok);
  if (m >= 2) var *= static_cast<double>(m) / static_cast<double>(m - 1);
  r.se = std::sqrt(var);
  r.design_effect = var == 0.0 ? 0.0 : var / srs_variance;
  return r;
}

RdsEstimate estimate_with_se(const SurveyDataset& ds, const ReferralForest& f,
                             const std::string& variable,
                             const std::string& weight_degree, bool include_seeds,
                             int B, std::uint64_t rng_seed, int threads) {
  auto u = gather(ds, all_rows(ds), variable, weight_degree, include_seeds);
  if (!u)
    throw std::runtime_error("no usable records for '" + variable +
                             "' (missing values or all weights missing)");
  RdsEstimate e;
  e.estimate = rds2_point(*u);
  e.n = u->n;
  if (u->n < 2) return e;  // a lone record supports no dispersion estimate

  double srs_variance = sample_variance(u->y) / static_cast<double>(u->n);
  auto stat = [&](const std::vector<int>& rows) -> std::optional<double> {
    auto ur = gather(ds, rows, variable, weight_degree, include_seeds);
    if (!ur) return std::nullopt;
    return rds2_point(*ur);
  };
  BootstrapResult boot = bootstrap_se(f, stat, B, rng_seed, srs_variance, threads);
  attach_interval(e, boot.se, boot.design_effect, u->min_y >= 0.0);
  return e;
}

std::vector<SubgroupCell> subgroup_table(
    const SurveyDataset& ds, const ReferralForest& f, const std::string& by,
    const std::vector<std::string>& networks, const std::string& weight_degree,
    bool include_seeds, int B, std::uint64_t rng_seed, int threads) {
  auto dict = ds.category_dictionaries.find(by);
  if (dict == ds.category_dictionaries.end())
    throw std::runtime_error("unknown attribute '" + by + "'");

  std::vector<SubgroupCell> out;
  std::uint64_t cell = 0;
  for (const std::string& level : dict->second) {
    for (const std::string& network : networks) {
      ++cell;
      SubgroupCell c;
      c.level = level;
      c.network = network;
      auto in_level = [&](int i) {
        auto v = categorical_value(ds.records[static_cast<std::size_t>(i)], by);
        return v && *v == level;
      };
      std::vector<int> rows;
      for (int i = 0; i < ds.n(); ++i)
        if (in_level(i)) rows.push_back(i);
      auto u = gather(ds, rows, network, weight_degree, include_seeds);
      if (!u) {
        out.push_back(std::move(c));  // paper prints "---" for empty cells
        continue;
      }
      RdsEstimate e;
      e.estimate = rds2_point(*u);
      e.n = u->n;
      if (u->n >= 2) {
        double srs_variance = sample_variance(u->y) / static_cast<double>(u->n);
        auto stat = [&](const std::vector<int>& resampled) -> std::optional<double> {
          std::vector<int> kept;
          for (int i : resampled)
            if (in_level(i)) kept.push_back(i);
          auto ur = gather(ds, kept, network, weight_degree, include_seeds);
          if (!ur) return std::nullopt;
          return rds2_point(*ur);
        };
        BootstrapResult boot = bootstrap_se(f, stat, B, substream_seed(rng_seed, 0x5B, cell),
                                            srs_variance, threads);
        attach_interval(e, boot.se, boot.design_effect, u->min_y >= 0.0);
      }
      c.est = e;
      out.push_back(std::move(c));
    }
  }
  return out;
}

MixingMatrix mixing_from_pairs(
    const std::vector<std::string>& categories,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  MixingMatrix m;
  m.categories = categories;
  std::size_t k = categories.size();
  m.counts.assign(k, std::vector<long long>(k, 0));
  auto index_of = [&](const std::string& s) -> int {
    for (std::size_t i = 0; i < k; ++i)
      if (categories[i] == s) return static_cast<int>(i);
    return -1;
  };
  long long used = 0;
  for (const auto& [from, to] : edges) {
    int r = index_of(from), c = index_of(to);
    if (r < 0 || c < 0) continue;
    ++m.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    ++used;
  }
  if (used == 0) throw std::runtime_error("no usable referral edges for mixing matrix");
  m.rates.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t r = 0; r < k; ++r) {
    long long row = 0;
    for (long long v : m.counts[r]) row += v;
    if (row == 0) continue;
    for (std::size_t c = 0; c < k; ++c)
      m.rates[r][c] = static_cast<double>(m.counts[r][c]) / static_cast<double>(row);
  }
  return m;
}

MixingMatrix mixing_matrix(const ReferralForest& f, const SurveyDataset& ds,
                           const std::string& attribute,
                           const std::vector<std::string>& drop_levels) {
  auto dict = ds.category_dictionaries.find(attribute);
  if (dict == ds.category_dictionaries.end())
    throw std::runtime_error("unknown attribute '" + attribute + "'");
  std::vector<std::string> categories;
  for (const std::string& level : dict->second)
    if (std::find(drop_levels.begin(), drop_levels.end(), level) == drop_levels.end())
      categories.push_back(level);
  if (categories.empty()) throw std::runtime_error("all levels dropped");

  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < f.n(); ++i) {
    const auto& p = f.parent[static_cast<std::size_t>(i)];
    if (!p) continue;
    auto from = categorical_value(ds.records[static_cast<std::size_t>(*p)], attribute);
    auto to = categorical_value(ds.records[static_cast<std::size_t>(i)], attribute);
    if (from && to) edges.emplace_back(*from, *to);
  }
  return mixing_from_pairs(categories, edges);  // throws when nothing usable
}

// Declared in rds.hpp; lives here so the trajectory shares the exact
// weighting and deletion policy of the estimators.
std::vector<TrajectoryRow> wave_trajectory(const ReferralForest& f,
                                           const SurveyDataset& ds,
                                           const std::string& variable,
                                           const std::string& weight_degree) {
  if (f.n() != ds.n())
    throw std::invalid_argument("forest/dataset size mismatch");
  int max_wave = 0;
  for (int i = 0; i < f.n(); ++i)
    max_wave = std::max(max_wave, f.wave[static_cast<std::size_t>(i)]);

  std::vector<TrajectoryRow> rows;
  bool any = false;
  for (int w = 0; w <= max_wave; ++w) {
    std::vector<int> prefix;
    for (int i = 0; i < f.n(); ++i)
      if (f.wave[static_cast<std::size_t>(i)] <= w) prefix.push_back(i);
    TrajectoryRow row;
    row.wave = w;
    auto u = gather(ds, prefix, variable, weight_degree, true);
    if (u) {
      row.n = u->n;
      row.estimate = rds2_point(*u);
      any = true;
    } else {
      row.n = 0;
      row.estimate = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  if (!any)
    throw std::runtime_error("no usable observations of '" + variable +
                             "' in any wave");
  return rows;
}

}  // namespace rdsnet
