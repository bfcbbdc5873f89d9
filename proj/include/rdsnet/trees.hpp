#pragma once

#include <map>
#include <string>
#include <vector>

#include "rdsnet/rds.hpp"

namespace rdsnet {

/// Rooted tree with semantically unordered children. Nodes are 0..n-1 with
/// the root at index 0; `label` is empty for unlabeled trees, otherwise one
/// serialized label tuple per node.
struct RootedTree {
  std::vector<std::vector<int>> children;
  std::vector<std::string> label;

  int n() const { return static_cast<int>(children.size()); }
};

/// AHU canonical form: code(v) = [label](sorted child codes). Two trees get
/// the same string iff they are rooted-(labeled-)isomorphic.
std::string canonical_code(const RootedTree& t, bool labeled);

struct IsoClassEntry {
  std::string code;
  int multiplicity = 0;
  RootedTree example_tree;
  std::string example_root_id;  // forest id of the example's seed
};

struct IsoClassTable {
  std::vector<IsoClassEntry> entries;  // multiplicity desc, then code asc
  int tree_count = 0;
};

/// Extracts the tree rooted at forest node `root` (which must be a seed when
/// used for census purposes, but any node works). Node 0 of the result is
/// `root`; label_attrs values are joined per node when labeled.
RootedTree tree_from_forest(const ReferralForest& f, int root, bool labeled,
                            const std::vector<std::string>& label_attrs);

/// Groups the forest's trees by canonical code. Labeled mode requires every
/// node to carry all label_attrs; offenders are listed in the error.
IsoClassTable iso_census(const ReferralForest& f, bool labeled,
                         const std::vector<std::string>& label_attrs = {});

struct TreeDepthRow {
  std::string root_id;
  int size = 0;
  int depth = 0;  // max wave within the tree, relative to its root
};

struct WaveStats {
  int max_wave = 0;
  std::vector<int> wave_histogram;  // index = wave, sums to node count
  std::vector<TreeDepthRow> per_tree;
};

WaveStats wave_stats(const ReferralForest& f);

struct OutDegreeHistogram {
  std::vector<int> counts;  // index = out-degree; at least degrees 0..3
  double mean = 0.0;
};

OutDegreeHistogram referral_degree_distribution(const ReferralForest& f);

void save_census_csv(const IsoClassTable& table, const std::string& path);
/// Plot-ready JSON: class entries with parent arrays plus a square-ish grid
/// suggestion for small-multiple layout.
std::string census_grid_json(const IsoClassTable& table);

}  // namespace rdsnet
