#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdsnet/graph.hpp"
#include "rdsnet/rds.hpp"

namespace rdsnet {

/// P(G) ∝ exp(thetaᵀ s(G)) over n-node graphs; node attributes drawn i.i.d.
/// from attr_dists before the chain starts.
struct ErgmSpec {
  int n = 0;
  std::vector<StatisticSpec> statistics;
  std::vector<double> theta;
  std::map<std::string, std::vector<std::pair<std::string, double>>> attr_dists;
};

inline long long dyad_count(int n) {
  return static_cast<long long>(n) * (n - 1) / 2;
}

/// Metropolis-Hastings with uniform dyad toggles. burn_in/thin of -1 pick
/// the defaults 10*dyads and dyads (one expected sweep per retained sample).
std::vector<AttributedGraph> mcmc_sample(const ErgmSpec& spec, long long burn_in = -1,
                                         long long thin = -1, int n_samples = 1,
                                         std::uint64_t rng_seed = 0);

struct ErgmFitOptions {
  int phases = 3;
  double gain = 1.0;
  int steps_per_phase = 200;     // Robbins-Monro theta updates per phase
  int final_phase_steps = 6000;  // longer last phase; its Polyak average is theta-hat
  int samples_per_phase = 100;   // pilot/verification sample counts
  std::uint64_t rng_seed = 0;
};

struct ErgmFitResult {
  ErgmSpec spec;                  // fitted theta inside
  std::vector<double> achieved;   // verification-run mean statistics
  std::vector<double> mc_se;      // batch-means MC standard errors
  bool converged = false;         // every |achieved-target| <= 2 mc_se
  std::vector<std::vector<double>> trajectory;  // theta after each update
};

/// Moment matching by stochastic approximation: theta steps against
/// (s - target) scaled by pilot variances, gain decaying per phase, then a
/// verification run measures how close the simulated means landed.
ErgmFitResult fit_from_targets(const std::vector<StatisticSpec>& statistics,
                               const std::vector<double>& targets, int n,
                               const std::map<std::string, std::vector<std::pair<std::string, double>>>& attr_dists,
                               const ErgmFitOptions& opts = {});

struct PowerRow {
  int target_sample = 0;
  int replicates = 0;
  double bias = 0.0;
  double rmse = 0.0;
  double ci_width = 0.0;       // mean 95% CI width over replicates
  double coverage = 0.0;       // fraction of CIs containing the truth
  double shortfall_rate = 0.0; // replicates that exhausted the frontier
  bool flagged = false;        // shortfall_rate > 0.5
};

struct PowerOptions {
  int replicates = 200;
  std::uint64_t rng_seed = 0;
  int threads = 1;
  int bootstrap_B = 200;
  /// false: one population graph is drawn per run and every replicate
  /// samples from it; true: each replicate regenerates the population.
  bool regenerate_population = false;
};

/// For each RDS design, repeatedly samples the ERGM population, runs the
/// recruitment simulation and the RDS-II estimator, and aggregates accuracy
/// against `truth` (pass NaN to target the realized population value).
std::vector<PowerRow> power_analysis(const ErgmSpec& spec,
                                     const std::vector<RdsConfig>& grid,
                                     const std::string& estimand, double truth,
                                     const PowerOptions& opts = {});

}  // namespace rdsnet
