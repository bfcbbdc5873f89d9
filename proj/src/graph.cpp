#include "rdsnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rdsnet/csv.hpp"

namespace rdsnet {

AttributedGraph AttributedGraph::with_nodes(int n) {
  if (n < 0) throw std::invalid_argument("node count must be nonnegative");
  AttributedGraph g;
  g.n_ = n;
  g.neighbors_.resize(static_cast<std::size_t>(n));
  return g;
}

std::uint64_t AttributedGraph::key(int i, int j) const {
  if (i > j) std::swap(i, j);
  return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n_) +
         static_cast<std::uint64_t>(j);
}

bool AttributedGraph::has_edge(int i, int j) const {
  if (i == j) return false;
  return edges_.count(key(i, j)) > 0;
}

bool AttributedGraph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("self-loops are not allowed");
  if (i < 0 || j < 0 || i >= n_ || j >= n_)
    throw std::out_of_range("edge endpoint out of range");
  if (!edges_.insert(key(i, j)).second) return false;
  auto& ni = neighbors_[static_cast<std::size_t>(i)];
  ni.insert(std::lower_bound(ni.begin(), ni.end(), j), j);
  auto& nj = neighbors_[static_cast<std::size_t>(j)];
  nj.insert(std::lower_bound(nj.begin(), nj.end(), i), i);
  return true;
}

bool AttributedGraph::remove_edge(int i, int j) {
  if (i == j) return false;
  if (edges_.erase(key(i, j)) == 0) return false;
  auto& ni = neighbors_[static_cast<std::size_t>(i)];
  ni.erase(std::lower_bound(ni.begin(), ni.end(), j));
  auto& nj = neighbors_[static_cast<std::size_t>(j)];
  nj.erase(std::lower_bound(nj.begin(), nj.end(), i));
  return true;
}

void AttributedGraph::toggle_edge(int i, int j) {
  if (!remove_edge(i, j)) add_edge(i, j);
}

void AttributedGraph::set_attribute(const std::string& name, Attribute attr) {
  if (static_cast<int>(attr.value.size()) != n_)
    throw std::invalid_argument("attribute '" + name + "' must cover every node");
  for (int v : attr.value)
    if (v < 0 || v >= static_cast<int>(attr.levels.size()))
      throw std::invalid_argument("attribute '" + name + "' has a value outside its levels");
  attrs_[name] = std::move(attr);
}

const AttributedGraph::Attribute& AttributedGraph::attribute(const std::string& name) const {
  auto it = attrs_.find(name);
  if (it == attrs_.end())
    throw std::invalid_argument("graph has no attribute '" + name + "'");
  return it->second;
}

const std::string& AttributedGraph::attribute_value(const std::string& name, int i) const {
  const Attribute& a = attribute(name);
  return a.levels[static_cast<std::size_t>(a.value[static_cast<std::size_t>(i)])];
}

StatisticSpec parse_statistic(const std::string& text) {
  if (text == "edges") return {StatisticSpec::Kind::edges, ""};
  const std::string prefix = "nodematch(";
  if (text.rfind(prefix, 0) == 0 && text.back() == ')') {
    std::string attr = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    if (!attr.empty()) return {StatisticSpec::Kind::nodematch, attr};
  }
  throw std::invalid_argument("unknown statistic '" + text +
                              "' (expected 'edges' or 'nodematch(attr)')");
}

GraphStatistics compute_statistics(const AttributedGraph& g,
                                   const std::vector<StatisticSpec>& spec) {
  GraphStatistics stats;
  stats.edges = g.edge_count();
  stats.mean_degree = g.mean_degree();
  int max_deg = 0;
  for (int i = 0; i < g.n(); ++i) max_deg = std::max(max_deg, g.degree(i));
  stats.degree_histogram.assign(static_cast<std::size_t>(max_deg) + 1, 0);
  for (int i = 0; i < g.n(); ++i)
    ++stats.degree_histogram[static_cast<std::size_t>(g.degree(i))];

  for (const auto& s : spec) {
    if (s.kind != StatisticSpec::Kind::nodematch) continue;
    const auto& attr = g.attribute(s.attr);  // throws on unknown attribute
    std::int64_t count = 0;
    g.for_each_edge([&](int i, int j) {
      if (attr.value[static_cast<std::size_t>(i)] == attr.value[static_cast<std::size_t>(j)])
        ++count;
    });
    stats.nodematch_counts[s.attr] = count;
  }
  return stats;
}

std::vector<double> statistic_vector(const AttributedGraph& g,
                                     const std::vector<StatisticSpec>& spec) {
  GraphStatistics stats = compute_statistics(g, spec);
  std::vector<double> out;
  out.reserve(spec.size());
  for (const auto& s : spec) {
    if (s.kind == StatisticSpec::Kind::edges)
      out.push_back(static_cast<double>(stats.edges));
    else
      out.push_back(static_cast<double>(stats.nodematch_counts.at(s.attr)));
  }
  return out;
}

std::vector<double> toggle_edge_delta(const AttributedGraph& g, int i, int j,
                                      const std::vector<StatisticSpec>& spec) {
  if (i == j) throw std::invalid_argument("toggle_edge_delta: i == j");
  double sign = g.has_edge(i, j) ? -1.0 : 1.0;
  std::vector<double> delta;
  delta.reserve(spec.size());
  for (const auto& s : spec) {
    if (s.kind == StatisticSpec::Kind::edges) {
      delta.push_back(sign);
    } else {
      const auto& attr = g.attribute(s.attr);
      bool match = attr.value[static_cast<std::size_t>(i)] ==
                   attr.value[static_cast<std::size_t>(j)];
      delta.push_back(match ? sign : 0.0);
    }
  }
  return delta;
}

AttributedGraph erdos_renyi(int n, double mean_degree, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  if (mean_degree < 0 || (n > 1 && mean_degree > static_cast<double>(n) - 1.0))
    throw std::invalid_argument("mean_degree must lie in [0, n-1]");
  AttributedGraph g = AttributedGraph::with_nodes(n);
  if (n < 2 || mean_degree <= 0.0) return g;
  double p = mean_degree / (static_cast<double>(n) - 1.0);
  Rng rng = make_rng(seed);
  std::int64_t dyads = g.dyad_count();
  if (p >= 1.0) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
  }
  // Geometric skips over the canonical dyad enumeration.
  double log1mp = std::log1p(-p);
  std::int64_t pos = -1;
  while (true) {
    double u = 1.0 - uniform01(rng);  // in (0, 1]
    double skip = std::floor(std::log(u) / log1mp);
    if (skip > static_cast<double>(dyads)) break;
    pos += 1 + static_cast<std::int64_t>(skip);
    if (pos >= dyads) break;
    // invert pos -> (i, j), i < j
    std::int64_t remaining = pos;
    int i = 0;
    while (remaining >= n - 1 - i) {
      remaining -= n - 1 - i;
      ++i;
    }
    int j = i + 1 + static_cast<int>(remaining);
    g.add_edge(i, j);
  }
  return g;
}

void assign_attributes(AttributedGraph& g, const std::string& attr,
                       const std::vector<std::pair<std::string, double>>& distribution,
                       std::uint64_t seed) {
  if (distribution.empty())
    throw std::invalid_argument("attribute distribution must be nonempty");
  double total = 0.0;
  for (const auto& [level, p] : distribution) {
    if (p < 0.0) throw std::invalid_argument("negative probability for level '" + level + "'");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("attribute probabilities must sum to 1");

  AttributedGraph::Attribute a;
  std::vector<double> weights;
  for (const auto& [level, p] : distribution) {
    a.levels.push_back(level);
    weights.push_back(p);
  }
  a.value.resize(static_cast<std::size_t>(g.n()));
  Rng rng = make_rng(substream_seed(seed, std::hash<std::string>{}(attr)));
  for (int i = 0; i < g.n(); ++i)
    a.value[static_cast<std::size_t>(i)] = categorical(rng, weights);
  g.set_attribute(attr, std::move(a));
}

void save_edge_list(const AttributedGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n=" << g.n() << '\n';
  g.for_each_edge([&](int i, int j) { out << i << ' ' << j << '\n'; });
}

AttributedGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header) || header.rfind("n=", 0) != 0)
    throw std::runtime_error("edge list must start with 'n=<count>'");
  int n = std::stoi(header.substr(2));
  AttributedGraph g = AttributedGraph::with_nodes(n);
  int i, j;
  while (in >> i >> j) g.add_edge(i, j);
  return g;
}

void save_attributes_csv(const AttributedGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  csv::write_row(out, {"node", "attr", "value"});
  for (const auto& [name, attr] : g.attributes())
    for (int i = 0; i < g.n(); ++i)
      csv::write_row(out, {std::to_string(i), name,
                           attr.levels[static_cast<std::size_t>(
                               attr.value[static_cast<std::size_t>(i)])]});
}

void load_attributes_csv(AttributedGraph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> row;
  if (!csv::read_row(in, row) || row != std::vector<std::string>{"node", "attr", "value"})
    throw std::runtime_error("attribute sidecar must have header node,attr,value");
  std::map<std::string, std::vector<std::string>> values;  // attr -> per-node level name
  while (csv::read_row(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) throw std::runtime_error("bad attribute row");
    int node = std::stoi(row[0]);
    auto& column = values[row[1]];
    column.resize(static_cast<std::size_t>(g.n()));
    column.at(static_cast<std::size_t>(node)) = row[2];
  }
  for (auto& [name, column] : values) {
    AttributedGraph::Attribute a;
    std::map<std::string, int> interned;
    a.value.reserve(column.size());
    for (const auto& level : column) {
      auto [it, inserted] = interned.emplace(level, static_cast<int>(a.levels.size()));
      if (inserted) a.levels.push_back(level);
      a.value.push_back(it->second);
    }
    g.set_attribute(name, std::move(a));
  }
}

}  // namespace rdsnet
