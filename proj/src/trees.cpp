#include "rdsnet/trees.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rdsnet/csv.hpp"

namespace rdsnet {

std::string canonical_code(const RootedTree& t, bool labeled) {
  if (labeled && t.label.size() != static_cast<std::size_t>(t.n()))
    throw std::invalid_argument("labeled canonicalization needs a label per node");
  std::function<std::string(int)> code = [&](int v) {
    std::vector<std::string> parts;
    parts.reserve(t.children[static_cast<std::size_t>(v)].size());
    for (int c : t.children[static_cast<std::size_t>(v)]) parts.push_back(code(c));
    std::sort(parts.begin(), parts.end());
    std::string out;
    if (labeled) out += "[" + t.label[static_cast<std::size_t>(v)] + "]";
    out += "(";
    for (const auto& p : parts) out += p;
    out += ")";
    return out;
  };
  return code(0);
}

RootedTree tree_from_forest(const ReferralForest& f, int root, bool labeled,
                            const std::vector<std::string>& label_attrs) {
  RootedTree t;
  std::vector<int> order;  // forest indices in tree order
  order.push_back(root);
  t.children.emplace_back();
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : f.children[static_cast<std::size_t>(order[i])]) {
      t.children[i].push_back(static_cast<int>(order.size()));
      order.push_back(c);
      t.children.emplace_back();
    }
  }
  if (labeled) {
    std::vector<std::string> missing;
    t.label.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::string tuple;
      for (std::size_t a = 0; a < label_attrs.size(); ++a) {
        auto it = f.attrs.find(label_attrs[a]);
        const std::optional<std::string>* v =
            it == f.attrs.end() ? nullptr : &it->second[static_cast<std::size_t>(order[i])];
        if (v == nullptr || !v->has_value()) {
          missing.push_back(f.ids[static_cast<std::size_t>(order[i])]);
          break;
        }
        if (a > 0) tuple += '\x1f';  // reserved separator between tuple parts
        tuple += **v;
      }
      t.label[i] = std::move(tuple);
    }
    if (!missing.empty()) {
      std::string msg = "label attribute missing on node(s):";
      for (const auto& id : missing) msg += " " + id;
      throw std::invalid_argument(msg);
    }
  }
  return t;
}

IsoClassTable iso_census(const ReferralForest& f, bool labeled,
                         const std::vector<std::string>& label_attrs) {
  std::map<std::string, IsoClassEntry> classes;
  int trees = 0;
  for (int root : f.roots()) {
    RootedTree t = tree_from_forest(f, root, labeled, label_attrs);
    std::string code = canonical_code(t, labeled);
    auto [it, fresh] = classes.try_emplace(code);
    if (fresh) {
      it->second.code = code;
      it->second.example_tree = std::move(t);
      it->second.example_root_id = f.ids[static_cast<std::size_t>(root)];
    }
    ++it->second.multiplicity;
    ++trees;
  }
  IsoClassTable table;
  table.tree_count = trees;
  for (auto& [code, entry] : classes) table.entries.push_back(std::move(entry));
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const IsoClassEntry& a, const IsoClassEntry& b) {
                     if (a.multiplicity != b.multiplicity)
                       return a.multiplicity > b.multiplicity;
                     return a.code < b.code;
                   });
  return table;
}

WaveStats wave_stats(const ReferralForest& f) {
  WaveStats s;
  for (int i = 0; i < f.n(); ++i) {
    int w = f.wave[static_cast<std::size_t>(i)];
    s.max_wave = std::max(s.max_wave, w);
    if (static_cast<std::size_t>(w) >= s.wave_histogram.size())
      s.wave_histogram.resize(static_cast<std::size_t>(w) + 1, 0);
    ++s.wave_histogram[static_cast<std::size_t>(w)];
  }
  for (int root : f.roots()) {
    TreeDepthRow row;
    row.root_id = f.ids[static_cast<std::size_t>(root)];
    std::vector<int> stack{root};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      ++row.size;
      row.depth = std::max(row.depth, f.wave[static_cast<std::size_t>(u)] -
                                          f.wave[static_cast<std::size_t>(root)]);
      for (int c : f.children[static_cast<std::size_t>(u)]) stack.push_back(c);
    }
    s.per_tree.push_back(std::move(row));
  }
  return s;
}

OutDegreeHistogram referral_degree_distribution(const ReferralForest& f) {
  OutDegreeHistogram h;
  h.counts.assign(4, 0);
  long long total = 0;
  for (int i = 0; i < f.n(); ++i) {
    int d = f.out_degree(i);
    if (static_cast<std::size_t>(d) >= h.counts.size())
      h.counts.resize(static_cast<std::size_t>(d) + 1, 0);
    ++h.counts[static_cast<std::size_t>(d)];
    total += d;
  }
  h.mean = f.n() > 0 ? static_cast<double>(total) / f.n() : 0.0;
  return h;
}

void save_census_csv(const IsoClassTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  csv::write_row(out, {"canonical_code", "multiplicity", "example_root"});
  for (const auto& e : table.entries)
    csv::write_row(out, {e.code, std::to_string(e.multiplicity), e.example_root_id});
}

std::string census_grid_json(const IsoClassTable& table) {
  nlohmann::json j;
  int k = static_cast<int>(table.entries.size());
  int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k)))));
  j["grid"] = {{"rows", (k + cols - 1) / std::max(1, cols)}, {"cols", cols}};
  j["tree_count"] = table.tree_count;
  j["classes"] = nlohmann::json::array();
  for (const auto& e : table.entries) {
    // parent array rendering of the example tree, root parent = -1
    std::vector<int> parent(static_cast<std::size_t>(e.example_tree.n()), -1);
    for (int v = 0; v < e.example_tree.n(); ++v)
      for (int c : e.example_tree.children[static_cast<std::size_t>(v)])
        parent[static_cast<std::size_t>(c)] = v;
    nlohmann::json cls = {{"code", e.code},
                          {"multiplicity", e.multiplicity},
                          {"example_root", e.example_root_id},
                          {"parents", parent}};
    if (!e.example_tree.label.empty()) cls["labels"] = e.example_tree.label;
    j["classes"].push_back(std::move(cls));
  }
  return j.dump(2);
}

}  // namespace rdsnet
