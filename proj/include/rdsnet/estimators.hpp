#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdsnet/rds.hpp"

namespace rdsnet {

struct RdsEstimate {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> se;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<double> design_effect;
  int n = 0;  // records surviving listwise deletion
};

/// Inverse-degree weighted (RDS-II) point estimate of a numeric variable.
/// Zero/missing weights are imputed to the median positive weight among the
/// contributing records. Throws when no record has both values usable.
RdsEstimate rds2_mean(const SurveyDataset& ds, const std::string& y,
                      const std::string& weight_degree = "acquaintance_degree",
                      bool include_seeds = true);

/// Same estimator applied to a 0/1 indicator ("attr=level" or a flag name).
RdsEstimate rds2_proportion(const SurveyDataset& ds, const std::string& indicator,
                            const std::string& weight_degree = "acquaintance_degree",
                            bool include_seeds = true);

struct BootstrapResult {
  double se = 0.0;
  double design_effect = 0.0;
  int failures = 0;  // replicates where the statistic was undefined
};

/// Chain-respecting cluster bootstrap: recruitment trees are the sampling
/// units. Each replicate draws m trees with replacement from the m observed
/// trees and keeps every drawn tree intact; the variance is rescaled by
/// m/(m-1) to undo the with-replacement shrinkage (no-op when m == 1).
/// `statistic` receives the resampled row multiset (indices into the dataset
/// the forest was built from) and may return nullopt when undefined; more
/// than 10% undefined replicates is an error.
/// design_effect = bootstrap variance / srs_variance (0 when the bootstrap
/// variance is 0). Deterministic given rng_seed, independent of threads.
BootstrapResult bootstrap_se(
    const ReferralForest& f,
    const std::function<std::optional<double>(const std::vector<int>&)>& statistic,
    int B, std::uint64_t rng_seed, double srs_variance, int threads = 1);

/// Full table row: point estimate plus bootstrap SE, 95% CI (lower bound
/// truncated at 0 for nonnegative variables) and design effect.
RdsEstimate estimate_with_se(const SurveyDataset& ds, const ReferralForest& f,
                             const std::string& variable,
                             const std::string& weight_degree = "acquaintance_degree",
                             bool include_seeds = true, int B = 1000,
                             std::uint64_t rng_seed = 0, int threads = 1);

struct SubgroupCell {
  std::string level;
  std::string network;                // degree variable estimated in the cell
  std::optional<RdsEstimate> est;     // absent when the cell has no records
};

/// One estimate per (attribute level, network variable) with per-cell
/// listwise deletion. Cells with a single record carry no SE.
std::vector<SubgroupCell> subgroup_table(
    const SurveyDataset& ds, const ReferralForest& f, const std::string& by,
    const std::vector<std::string>& networks,
    const std::string& weight_degree = "acquaintance_degree",
    bool include_seeds = true, int B = 1000, std::uint64_t rng_seed = 0,
    int threads = 1);

struct MixingMatrix {
  std::vector<std::string> categories;
  std::vector<std::vector<long long>> counts;  // recruiter row -> recruitee col
  std::vector<std::vector<double>> rates;      // rows normalized where nonzero
};

/// Recruiter->recruitee transition counts over referral edges where both
/// endpoints carry the attribute; drop_levels removed from both axes first.
MixingMatrix mixing_matrix(const ReferralForest& f, const SurveyDataset& ds,
                           const std::string& attribute,
                           const std::vector<std::string>& drop_levels = {});

/// Builds the matrix straight from (recruiter level, recruitee level) pairs.
MixingMatrix mixing_from_pairs(
    const std::vector<std::string>& categories,
    const std::vector<std::pair<std::string, std::string>>& edges);

}  // namespace rdsnet
