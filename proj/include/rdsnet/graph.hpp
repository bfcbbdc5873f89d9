#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "rdsnet/rng.hpp"

namespace rdsnet {

/// Undirected simple graph with interned categorical node attributes.
/// Edges live twice: a hash set of canonical (i<j) keys for O(1) membership
/// (the MCMC inner loop) and sorted per-node neighbor lists for O(deg)
/// iteration (the recruitment walk). Neighbor order is deterministic.
class AttributedGraph {
 public:
  struct Attribute {
    std::vector<std::string> levels;
    std::vector<int> value;  // per node, index into levels
  };

  AttributedGraph() = default;
  static AttributedGraph with_nodes(int n);

  int n() const { return n_; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(edges_.size()); }
  std::int64_t dyad_count() const {
    return static_cast<std::int64_t>(n_) * (n_ - 1) / 2;
  }

  bool has_edge(int i, int j) const;
  /// Returns true if the edge was inserted (false if already present).
  bool add_edge(int i, int j);
  /// Returns true if the edge was removed (false if absent).
  bool remove_edge(int i, int j);
  void toggle_edge(int i, int j);

  int degree(int i) const { return static_cast<int>(neighbors_[static_cast<std::size_t>(i)].size()); }
  const std::vector<int>& neighbors(int i) const {
    return neighbors_[static_cast<std::size_t>(i)];
  }
  double mean_degree() const {
    return n_ > 0 ? 2.0 * static_cast<double>(edge_count()) / n_ : 0.0;
  }

  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    for (int i = 0; i < n_; ++i)
      for (int j : neighbors_[static_cast<std::size_t>(i)])
        if (i < j) fn(i, j);
  }

  void set_attribute(const std::string& name, Attribute attr);
  bool has_attribute(const std::string& name) const { return attrs_.count(name) > 0; }
  const Attribute& attribute(const std::string& name) const;
  const std::map<std::string, Attribute>& attributes() const { return attrs_; }
  /// Level name of node i's value for the attribute.
  const std::string& attribute_value(const std::string& name, int i) const;

 private:
  std::uint64_t key(int i, int j) const;

  int n_ = 0;
  std::vector<std::vector<int>> neighbors_;
  std::unordered_set<std::uint64_t> edges_;
  std::map<std::string, Attribute> attrs_;
};

struct StatisticSpec {
  enum class Kind { edges, nodematch };
  Kind kind = Kind::edges;
  std::string attr;  // nodematch only

  std::string name() const {
    return kind == Kind::edges ? "edges" : "nodematch(" + attr + ")";
  }
  bool operator==(const StatisticSpec&) const = default;
};

/// Parses "edges" or "nodematch(attr)".
StatisticSpec parse_statistic(const std::string& text);

struct GraphStatistics {
  std::int64_t edges = 0;
  std::map<std::string, std::int64_t> nodematch_counts;
  double mean_degree = 0.0;
  std::vector<std::int64_t> degree_histogram;
};

/// Exact counts for the requested statistics plus the standard summary.
GraphStatistics compute_statistics(const AttributedGraph& g,
                                   const std::vector<StatisticSpec>& spec);

/// s(g) aligned to spec, for ERGM use.
std::vector<double> statistic_vector(const AttributedGraph& g,
                                     const std::vector<StatisticSpec>& spec);

/// s(g xor (i,j)) - s(g) without mutating g. O(1) per statistic.
std::vector<double> toggle_edge_delta(const AttributedGraph& g, int i, int j,
                                      const std::vector<StatisticSpec>& spec);

/// G(n, p) with p = mean_degree/(n-1), via geometric dyad skipping.
AttributedGraph erdos_renyi(int n, double mean_degree, std::uint64_t seed);

/// I.i.d. categorical labels; probabilities must sum to 1 (1e-12).
void assign_attributes(AttributedGraph& g, const std::string& attr,
                       const std::vector<std::pair<std::string, double>>& distribution,
                       std::uint64_t seed);

void save_edge_list(const AttributedGraph& g, const std::string& path);
AttributedGraph load_edge_list(const std::string& path);
void save_attributes_csv(const AttributedGraph& g, const std::string& path);
void load_attributes_csv(AttributedGraph& g, const std::string& path);

}  // namespace rdsnet
