#include "rdsnet/rds.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "rdsnet/csv.hpp"

namespace rdsnet {

std::vector<int> ReferralForest::roots() const {
  std::vector<int> r;
  for (int i = 0; i < n(); ++i)
    if (is_seed(i)) r.push_back(i);
  return r;
}

namespace {

const char* kMirroredAttrs[] = {"gender",    "race",           "age_bracket",
                                "ethnicity", "shelter_status", "hub_id"};

std::vector<int> select_seeds(const AttributedGraph& g, const RdsConfig& cfg, Rng& rng) {
  int n_seeds = std::min(cfg.n_seeds, g.n());
  std::vector<int> seeds;
  std::vector<bool> taken(static_cast<std::size_t>(g.n()), false);
  if (cfg.seed_selection == RdsConfig::SeedSelection::uniform) {
    while (static_cast<int>(seeds.size()) < n_seeds) {
      int v = uniform_int(rng, g.n());
      if (taken[static_cast<std::size_t>(v)]) continue;
      taken[static_cast<std::size_t>(v)] = true;
      seeds.push_back(v);
    }
    return seeds;
  }
  // degree-proportional, falling back to uniform when all degrees are zero
  std::vector<double> weight(static_cast<std::size_t>(g.n()));
  double total = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    weight[static_cast<std::size_t>(i)] = static_cast<double>(g.degree(i));
    total += weight[static_cast<std::size_t>(i)];
  }
  if (total <= 0.0) weight.assign(static_cast<std::size_t>(g.n()), 1.0);
  while (static_cast<int>(seeds.size()) < n_seeds) {
    int v = categorical(rng, weight);
    if (taken[static_cast<std::size_t>(v)]) continue;
    taken[static_cast<std::size_t>(v)] = true;
    weight[static_cast<std::size_t>(v)] = 0.0;
    bool any = false;
    for (double w : weight) any = any || w > 0.0;
    if (!any) weight.assign(static_cast<std::size_t>(g.n()), 1.0);  // degenerate leftover
    seeds.push_back(v);
  }
  return seeds;
}

std::string respondent_label(int order) {
  std::string digits = std::to_string(order + 1);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "R" + digits;
}

}  // namespace

RdsResult simulate_rds(const AttributedGraph& g, const RdsConfig& cfg) {
  if (cfg.coupons_per_respondent < 1)
    throw std::invalid_argument("coupons_per_respondent must be >= 1");
  if (cfg.target_sample > g.n())
    throw std::invalid_argument("target_sample exceeds population size");
  if (cfg.acceptance_prob <= 0.0 || cfg.acceptance_prob > 1.0)
    throw std::invalid_argument("acceptance_prob must lie in (0, 1]");

  Rng rng = make_rng(cfg.rng_seed);
  RdsResult result;
  ReferralForest& f = result.forest;

  std::vector<int> sample_order;       // graph node per respondent index
  std::vector<int> respondent_of(static_cast<std::size_t>(g.n()), -1);
  std::deque<int> frontier;            // respondent indices, FIFO

  auto admit = [&](int node, std::optional<int> parent_respondent) {
    int idx = static_cast<int>(sample_order.size());
    sample_order.push_back(node);
    respondent_of[static_cast<std::size_t>(node)] = idx;
    f.ids.push_back(respondent_label(idx));
    f.parent.push_back(parent_respondent);
    f.wave.push_back(parent_respondent ? f.wave[static_cast<std::size_t>(*parent_respondent)] + 1 : 0);
    f.children.emplace_back();
    if (parent_respondent)
      f.children[static_cast<std::size_t>(*parent_respondent)].push_back(idx);
    frontier.push_back(idx);
    return idx;
  };

  for (int seed_node : select_seeds(g, cfg, rng)) {
    if (static_cast<int>(sample_order.size()) >= cfg.target_sample) break;
    admit(seed_node, std::nullopt);
  }

  while (!frontier.empty() && static_cast<int>(sample_order.size()) < cfg.target_sample) {
    int resp = frontier.front();
    frontier.pop_front();
    if (f.wave[static_cast<std::size_t>(resp)] >= cfg.max_waves) continue;
    int node = sample_order[static_cast<std::size_t>(resp)];

    std::vector<int> eligible;
    for (int nb : g.neighbors(node))
      if (respondent_of[static_cast<std::size_t>(nb)] < 0) eligible.push_back(nb);
    shuffle_vector(rng, eligible);
    int coupons = std::min<std::size_t>(static_cast<std::size_t>(cfg.coupons_per_respondent),
                                        eligible.size());
    for (int c = 0; c < coupons; ++c) {
      if (static_cast<int>(sample_order.size()) >= cfg.target_sample) break;
      int nb = eligible[static_cast<std::size_t>(c)];
      if (!bernoulli(rng, cfg.acceptance_prob)) continue;  // coupon not redeemed
      if (respondent_of[static_cast<std::size_t>(nb)] >= 0) continue;
      admit(nb, resp);
    }
  }
  result.shortfall = static_cast<int>(sample_order.size()) < cfg.target_sample;
  result.node_index = sample_order;

  // Emit the survey rows. Coupon linkage is exact whenever the configured
  // coupon count fits the three-coupon instrument.
  SurveyDataset& ds = result.sample;
  ds.year_label = "simulated";
  ds.top_code = 20;
  int n = static_cast<int>(sample_order.size());
  ds.records.resize(static_cast<std::size_t>(n));
  ds.recruiter_index.assign(static_cast<std::size_t>(n), std::nullopt);
  for (int i = 0; i < n; ++i) {
    SurveyRecord& r = ds.records[static_cast<std::size_t>(i)];
    int node = sample_order[static_cast<std::size_t>(i)];
    r.respondent_id = f.ids[static_cast<std::size_t>(i)];
    int coupon_slots = std::min(3, cfg.coupons_per_respondent);
    for (int c = 0; c < coupon_slots; ++c)
      r.own_coupons.push_back("C" + r.respondent_id + "-" + std::to_string(c + 1));
    r.acquaintance_degree = g.degree(node);
    for (const char* attr : kMirroredAttrs) {
      if (!g.has_attribute(attr)) continue;
      const std::string& value = g.attribute_value(attr, node);
      if (std::string(attr) == "gender") r.gender = value;
      else if (std::string(attr) == "race") r.race = value;
      else if (std::string(attr) == "age_bracket") r.age_bracket = value;
      else if (std::string(attr) == "ethnicity") r.ethnicity = value;
      else if (std::string(attr) == "shelter_status") r.shelter_status = value;
      else if (std::string(attr) == "hub_id") r.hub_id = value;
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto& kids = f.children[static_cast<std::size_t>(i)];
    for (std::size_t rank = 0; rank < kids.size(); ++rank) {
      SurveyRecord& child = ds.records[static_cast<std::size_t>(kids[rank])];
      child.recruiter_coupon = "C" + f.ids[static_cast<std::size_t>(i)] + "-" +
                               std::to_string(rank + 1);
      ds.recruiter_index[static_cast<std::size_t>(kids[rank])] = i;
    }
    ds.records[static_cast<std::size_t>(i)].referral_out_degree =
        static_cast<int>(kids.size());
  }
  for (const char* attr : kMirroredAttrs) {
    if (!g.has_attribute(attr)) continue;
    ds.category_dictionaries[attr] = g.attribute(attr).levels;
  }

  for (const char* attr : kMirroredAttrs) {
    std::vector<std::optional<std::string>> column;
    column.reserve(static_cast<std::size_t>(n));
    bool any = false;
    for (const auto& r : ds.records) {
      auto v = categorical_value(r, attr);
      any = any || v.has_value();
      column.push_back(std::move(v));
    }
    if (any) f.attrs[attr] = std::move(column);
  }
  return result;
}

ReferralForest forest_from_dataset(const SurveyDataset& ds) {
  ReferralForest f;
  int n = ds.n();
  f.ids.reserve(static_cast<std::size_t>(n));
  for (const auto& r : ds.records) f.ids.push_back(r.respondent_id);
  f.parent = ds.recruiter_index;
  f.children.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (f.parent[static_cast<std::size_t>(i)])
      f.children[static_cast<std::size_t>(*f.parent[static_cast<std::size_t>(i)])].push_back(i);

  // BFS waves; anything never reached sits on a cycle of corrupt linkage.
  f.wave.assign(static_cast<std::size_t>(n), -1);
  std::deque<int> queue;
  for (int i = 0; i < n; ++i)
    if (f.is_seed(i)) {
      f.wave[static_cast<std::size_t>(i)] = 0;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int c : f.children[static_cast<std::size_t>(u)]) {
      f.wave[static_cast<std::size_t>(c)] = f.wave[static_cast<std::size_t>(u)] + 1;
      queue.push_back(c);
    }
  }
  for (int i = 0; i < n; ++i)
    if (f.wave[static_cast<std::size_t>(i)] < 0)
      throw DatasetError("cycle detected in referral linkage involving respondent '" +
                         ds.records[static_cast<std::size_t>(i)].respondent_id + "'");

  for (const char* attr : kMirroredAttrs) {
    std::vector<std::optional<std::string>> column;
    column.reserve(static_cast<std::size_t>(n));
    bool any = false;
    for (const auto& r : ds.records) {
      auto v = categorical_value(r, attr);
      any = any || v.has_value();
      column.push_back(std::move(v));
    }
    if (any) f.attrs[attr] = std::move(column);
  }
  return f;
}

void save_forest_csv(const ReferralForest& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  csv::write_row(out, {"respondent_id", "parent_id", "wave"});
  for (int i = 0; i < f.n(); ++i) {
    const auto& p = f.parent[static_cast<std::size_t>(i)];
    csv::write_row(out, {f.ids[static_cast<std::size_t>(i)],
                         p ? f.ids[static_cast<std::size_t>(*p)] : "",
                         std::to_string(f.wave[static_cast<std::size_t>(i)])});
  }
}

ReferralForest load_forest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> row;
  bool have_header = false;
  std::vector<std::pair<std::string, std::string>> links;  // id, parent id
  while (csv::read_row(in, row)) {
    if (!row.empty() && !row[0].empty() && row[0][0] == '#') continue;
    if (!have_header) {
      if (row != std::vector<std::string>{"respondent_id", "parent_id", "wave"})
        throw std::runtime_error("forest CSV must have header respondent_id,parent_id,wave");
      have_header = true;
      continue;
    }
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) throw std::runtime_error("bad forest row");
    links.emplace_back(row[0], row[1]);
  }
  ReferralForest f;
  std::map<std::string, int> index;
  for (const auto& [id, parent] : links) {
    if (!index.emplace(id, f.n()).second)
      throw std::runtime_error("duplicate respondent '" + id + "' in forest");
    f.ids.push_back(id);
  }
  f.parent.resize(f.ids.size());
  f.children.resize(f.ids.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].second.empty()) continue;
    auto it = index.find(links[i].second);
    if (it == index.end())
      throw std::runtime_error("unknown parent '" + links[i].second + "'");
    f.parent[i] = it->second;
    f.children[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
  }
  // recompute waves rather than trusting the file
  f.wave.assign(f.ids.size(), -1);
  std::deque<int> queue;
  for (int i = 0; i < f.n(); ++i)
    if (f.is_seed(i)) {
      f.wave[static_cast<std::size_t>(i)] = 0;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int c : f.children[static_cast<std::size_t>(u)]) {
      f.wave[static_cast<std::size_t>(c)] = f.wave[static_cast<std::size_t>(u)] + 1;
      queue.push_back(c);
    }
  }
  for (int i = 0; i < f.n(); ++i)
    if (f.wave[static_cast<std::size_t>(i)] < 0)
      throw std::runtime_error("cycle detected in forest file");
  return f;
}

}  // namespace rdsnet
