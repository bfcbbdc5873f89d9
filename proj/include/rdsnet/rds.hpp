#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdsnet/graph.hpp"
#include "rdsnet/survey.hpp"

namespace rdsnet {

/// Directed recruiter->recruitee forest. Node order matches the dataset /
/// sample it was built from; seeds have no parent and wave 0.
struct ReferralForest {
  std::vector<std::string> ids;
  std::vector<std::optional<int>> parent;
  std::vector<int> wave;
  std::vector<std::vector<int>> children;
  // categorical attributes mirrored from the records (gender, race, ...)
  std::map<std::string, std::vector<std::optional<std::string>>> attrs;

  int n() const { return static_cast<int>(ids.size()); }
  bool is_seed(int i) const { return !parent[static_cast<std::size_t>(i)].has_value(); }
  int out_degree(int i) const {
    return static_cast<int>(children[static_cast<std::size_t>(i)].size());
  }
  std::vector<int> roots() const;
};

struct RdsConfig {
  enum class SeedSelection { uniform, degree_proportional };

  int n_seeds = 6;
  SeedSelection seed_selection = SeedSelection::degree_proportional;
  int coupons_per_respondent = 3;
  double acceptance_prob = 0.5;
  int target_sample = 500;
  int max_waves = std::numeric_limits<int>::max();
  std::uint64_t rng_seed = 0;
};

struct RdsResult {
  ReferralForest forest;
  SurveyDataset sample;
  std::vector<int> node_index;  // sampled graph node per respondent
  bool shortfall = false;       // frontier exhausted before target_sample
};

/// Coupon-protocol recruitment over g: without replacement, FIFO frontier,
/// coupon redemptions decided by the seeded RNG. acquaintance_degree in the
/// emitted records is the node's true graph degree.
RdsResult simulate_rds(const AttributedGraph& g, const RdsConfig& cfg);

/// Rebuilds the forest from coupon linkage; waves by BFS from seeds.
/// Throws DatasetError on cyclic linkage.
ReferralForest forest_from_dataset(const SurveyDataset& ds);

struct TrajectoryRow {
  int wave;
  int n;            // records contributing up to this wave
  double estimate;  // RDS-II estimate restricted to waves <= wave
};

/// Per-wave running RDS-II estimate of `variable`, a simple convergence
/// diagnostic. Throws if no wave has a usable observation.
std::vector<TrajectoryRow> wave_trajectory(const ReferralForest& f,
                                           const SurveyDataset& ds,
                                           const std::string& variable,
                                           const std::string& weight_degree =
                                               "acquaintance_degree");

void save_forest_csv(const ReferralForest& f, const std::string& path);
ReferralForest load_forest_csv(const std::string& path);

}  // namespace rdsnet
