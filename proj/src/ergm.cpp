#include "rdsnet/ergm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "rdsnet/estimators.hpp"
#include "rdsnet/rng.hpp"

namespace rdsnet {

namespace {

constexpr std::uint64_t kChainStream = 0xE26C4A11;
constexpr std::uint64_t kAttrStream = 0xA77281B;
constexpr std::uint64_t kPowerStream = 0x9012E2;

void validate_spec(const ErgmSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("ERGM needs at least 2 nodes");
  if (spec.statistics.empty()) throw std::invalid_argument("statistics must be non-empty");
  for (std::size_t i = 0; i < spec.statistics.size(); ++i)
    for (std::size_t j = i + 1; j < spec.statistics.size(); ++j)
      if (spec.statistics[i] == spec.statistics[j])
        throw std::invalid_argument("duplicate statistic '" + spec.statistics[i].name() + "'");
  if (spec.theta.size() != spec.statistics.size())
    throw std::invalid_argument("theta length must match statistics");
  for (double t : spec.theta)
    if (!std::isfinite(t)) throw std::invalid_argument("theta must be finite");
}

AttributedGraph labeled_empty_graph(int n,
                                    const std::map<std::string, std::vector<std::pair<std::string, double>>>& dists,
                                    std::uint64_t rng_seed) {
  AttributedGraph g = AttributedGraph::with_nodes(n);
  std::uint64_t k = 0;
  for (const auto& [attr, dist] : dists)
    assign_attributes(g, attr, dist, substream_seed(rng_seed, kAttrStream, k++));
  return g;
}

struct Chain {
  AttributedGraph g;
  const std::vector<StatisticSpec>& stats;
  std::vector<double> s;
  Rng rng;

  Chain(AttributedGraph graph, const std::vector<StatisticSpec>& spec, Rng r)
      : g(std::move(graph)), stats(spec), s(statistic_vector(g, spec)), rng(r) {}

  void step(const std::vector<double>& theta) {
    int i = uniform_int(rng, g.n());
    int j = uniform_int(rng, g.n() - 1);
    if (j >= i) ++j;
    std::vector<double> delta = toggle_edge_delta(g, i, j, stats);
    double log_ratio = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) log_ratio += theta[k] * delta[k];
    if (log_ratio >= 0.0 || uniform01(rng) < std::exp(log_ratio)) {
      g.toggle_edge(i, j);
      for (std::size_t k = 0; k < delta.size(); ++k) s[k] += delta[k];
    }
  }
};

}  // namespace

std::vector<AttributedGraph> mcmc_sample(const ErgmSpec& spec, long long burn_in,
                                         long long thin, int n_samples,
                                         std::uint64_t rng_seed) {
  validate_spec(spec);
  long long dyads = dyad_count(spec.n);
  if (burn_in < 0) burn_in = 10 * dyads;
  if (thin < 0) thin = dyads;
  if (burn_in == 0 || thin == 0) throw std::invalid_argument("burn_in and thin must be positive");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be positive");

  Chain chain(labeled_empty_graph(spec.n, spec.attr_dists, rng_seed), spec.statistics,
              make_rng(substream_seed(rng_seed, kChainStream, 0)));
  for (long long t = 0; t < burn_in; ++t) chain.step(spec.theta);
  std::vector<AttributedGraph> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    for (long long t = 0; t < thin; ++t) chain.step(spec.theta);
    out.push_back(chain.g);
  }
  return out;
}

ErgmFitResult fit_from_targets(const std::vector<StatisticSpec>& statistics,
                               const std::vector<double>& targets, int n,
                               const std::map<std::string, std::vector<std::pair<std::string, double>>>& attr_dists,
                               const ErgmFitOptions& opts) {
  if (targets.size() != statistics.size())
    throw std::invalid_argument("targets length must match statistics");
  double dyads = static_cast<double>(dyad_count(n));
  double edges_target = -1.0;
  for (std::size_t k = 0; k < statistics.size(); ++k) {
    if (statistics[k].kind == StatisticSpec::Kind::edges) edges_target = targets[k];
  }
  if (edges_target >= 0.0 && (edges_target > dyads))
    throw std::invalid_argument("edges target exceeds the dyad count");
  for (std::size_t k = 0; k < statistics.size(); ++k) {
    if (targets[k] < 0.0) throw std::invalid_argument("targets must be nonnegative");
    if (statistics[k].kind == StatisticSpec::Kind::nodematch && edges_target >= 0.0 &&
        targets[k] > edges_target + 1e-9)
      throw std::invalid_argument("nodematch target exceeds the edges target");
  }

  ErgmFitResult res;
  res.spec.n = n;
  res.spec.statistics = statistics;
  res.spec.attr_dists = attr_dists;
  res.spec.theta.assign(statistics.size(), 0.0);
  // Warm start: an edges-only model with this density has theta = logit(p).
  if (edges_target >= 0.0) {
    double p = std::clamp(edges_target / dyads, 1e-6, 1.0 - 1e-6);
    for (std::size_t k = 0; k < statistics.size(); ++k)
      if (statistics[k].kind == StatisticSpec::Kind::edges)
        res.spec.theta[k] = std::log(p / (1.0 - p));
  }

  long long dyads_ll = dyad_count(n);
  Chain chain(labeled_empty_graph(n, attr_dists, opts.rng_seed), statistics,
              make_rng(substream_seed(opts.rng_seed, kChainStream, 1)));
  auto run = [&](long long proposals) {
    for (long long t = 0; t < proposals; ++t) chain.step(res.spec.theta);
  };

  // Robbins-Monro phases. In an exponential family dE[s]/dtheta is the
  // covariance of s, so each update solves against the sample covariance
  // estimated at the start of the phase (a stochastic Newton step); the
  // last phase is Polyak-averaged to shed the residual MCMC noise.
  std::size_t m = statistics.size();
  const long long between = std::max<long long>(1, dyads_ll / 2);
  Eigen::VectorXd tgt(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) tgt[static_cast<Eigen::Index>(k)] = targets[k];
  Eigen::VectorXd theta_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (int phase = 0; phase < opts.phases; ++phase) {
    run((phase == 0 ? 10 : 3) * dyads_ll);
    Eigen::MatrixXd draws(opts.samples_per_phase, static_cast<Eigen::Index>(m));
    for (int s = 0; s < opts.samples_per_phase; ++s) {
      run(dyads_ll);
      for (std::size_t k = 0; k < m; ++k)
        draws(s, static_cast<Eigen::Index>(k)) = chain.s[k];
    }
    Eigen::RowVectorXd mu = draws.colwise().mean();
    Eigen::MatrixXd centered = draws.rowwise() - mu;
    Eigen::MatrixXd cov =
        centered.transpose() * centered / std::max(1, opts.samples_per_phase - 1);
    double ridge = 1e-8 * std::max(1.0, cov.trace() / static_cast<double>(m));
    cov.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> solver(cov);

    double a = opts.gain / (phase + 1.0);
    bool last = phase == opts.phases - 1;
    // the final phase runs much longer so the Polyak average settles
    int phase_steps = last ? std::max(opts.final_phase_steps, opts.steps_per_phase)
                           : opts.steps_per_phase;
    int avg_from = phase_steps / 4;  // skip the averaging transient
    int averaged = 0;
    if (last) theta_sum.setZero();
    for (int step = 0; step < phase_steps; ++step) {
      run(between);
      Eigen::VectorXd s(static_cast<Eigen::Index>(m));
      for (std::size_t k = 0; k < m; ++k) s[static_cast<Eigen::Index>(k)] = chain.s[k];
      Eigen::VectorXd delta = solver.solve(s - tgt);
      // Polyak-Ruppert: anneal the gain inside the averaged phase so the
      // running average sheds the O(gain) bias of constant-step iterates.
      double a_step = last ? a / std::pow(1.0 + step, 0.6) : a;
      for (std::size_t k = 0; k < m; ++k) {
        double& th = res.spec.theta[k];
        th = std::clamp(th - a_step * delta[static_cast<Eigen::Index>(k)], -30.0, 30.0);
      }
      res.trajectory.push_back(res.spec.theta);
      if (last && step >= avg_from) {
        ++averaged;
        for (std::size_t k = 0; k < m; ++k)
          theta_sum[static_cast<Eigen::Index>(k)] += res.spec.theta[k];
      }
    }
    if (last && averaged > 0)
      for (std::size_t k = 0; k < m; ++k)
        res.spec.theta[k] = theta_sum[static_cast<Eigen::Index>(k)] / averaged;
  }

  // Verification run at the final theta: draws two sweeps apart are nearly
  // decorrelated for these dyad-independent models; batch means give the SE.
  run(10 * dyads_ll);
  int s_total = 2 * opts.samples_per_phase;
  std::vector<std::vector<double>> draws;
  for (int s = 0; s < s_total; ++s) {
    run(2 * dyads_ll);
    draws.push_back(chain.s);
  }
  res.achieved.assign(m, 0.0);
  res.mc_se.assign(m, 0.0);
  // Enough batches that the implied t statistic is near normal, while each
  // batch still spans several decorrelated draws.
  int n_batches = std::clamp(s_total / 8, 10, 25);
  int per_batch = std::max(1, s_total / n_batches);
  for (std::size_t k = 0; k < m; ++k) {
    for (const auto& d : draws) res.achieved[k] += d[k];
    res.achieved[k] /= draws.size();
    std::vector<double> batch_means;
    for (int b = 0; b + per_batch <= s_total; b += per_batch) {
      double bm = 0.0;
      for (int i = b; i < b + per_batch; ++i) bm += draws[static_cast<std::size_t>(i)][k];
      batch_means.push_back(bm / per_batch);
    }
    double mu = 0.0;
    for (double v : batch_means) mu += v;
    mu /= batch_means.size();
    double ss = 0.0;
    for (double v : batch_means) ss += (v - mu) * (v - mu);
    if (batch_means.size() > 1)
      res.mc_se[k] = std::sqrt(ss / (batch_means.size() - 1) /
                               static_cast<double>(batch_means.size()));
  }
  res.converged = true;
  for (std::size_t k = 0; k < m; ++k)
    if (std::abs(res.achieved[k] - targets[k]) > 2.0 * std::max(res.mc_se[k], 1e-12))
      res.converged = false;
  return res;
}

namespace {

double node_value(const AttributedGraph& g, const std::string& estimand, int node) {
  auto eq = estimand.find('=');
  if (eq != std::string::npos) {
    std::string attr = estimand.substr(0, eq);
    std::string level = estimand.substr(eq + 1);
    return g.attribute_value(attr, node) == level ? 1.0 : 0.0;
  }
  if (estimand == "degree" || estimand == "acquaintance_degree" || estimand == "acq_degree")
    return static_cast<double>(g.degree(node));
  throw std::invalid_argument("unsupported estimand '" + estimand +
                              "' (expected attr=level or degree)");
}

double population_value(const AttributedGraph& g, const std::string& estimand) {
  double total = 0.0;
  for (int i = 0; i < g.n(); ++i) total += node_value(g, estimand, i);
  return g.n() > 0 ? total / g.n() : 0.0;
}

}  // namespace

std::vector<PowerRow> power_analysis(const ErgmSpec& spec,
                                     const std::vector<RdsConfig>& grid,
                                     const std::string& estimand, double truth,
                                     const PowerOptions& opts) {
  validate_spec(spec);
  if (opts.replicates < 50) throw std::invalid_argument("power analysis needs >= 50 replicates");
  if (grid.empty()) throw std::invalid_argument("empty design grid");

  // confirm the estimand parses before spending time on replicates
  {
    AttributedGraph probe = AttributedGraph::with_nodes(2);
    for (const auto& [attr, dist] : spec.attr_dists)
      assign_attributes(probe, attr, dist, 0);
    (void)node_value(probe, estimand, 0);
  }
  // the simulator mirrors the true graph degree into acquaintance_degree
  const std::string sample_variable =
      estimand.find('=') == std::string::npos ? "acquaintance_degree" : estimand;

  std::vector<AttributedGraph> fixed_population;
  if (!opts.regenerate_population)
    fixed_population = mcmc_sample(spec, -1, -1, 1, substream_seed(opts.rng_seed, kPowerStream, 0));

  std::vector<PowerRow> rows;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const RdsConfig& base = grid[c];
    struct RepOutcome {
      double estimate = 0.0;
      double truth = 0.0;
      double ci_low = 0.0, ci_high = 0.0;
      bool has_ci = false;
      bool shortfall = false;
      bool usable = false;
    };
    std::vector<RepOutcome> reps(static_cast<std::size_t>(opts.replicates));

    parallel_for(opts.replicates, opts.threads, [&](int r) {
      std::uint64_t rep_seed =
          substream_seed(opts.rng_seed, kPowerStream + 1 + c, static_cast<std::uint64_t>(r));
      RepOutcome& out = reps[static_cast<std::size_t>(r)];
      const AttributedGraph* population = nullptr;
      std::vector<AttributedGraph> own;
      if (opts.regenerate_population) {
        own = mcmc_sample(spec, -1, -1, 1, substream_seed(rep_seed, 0x9E0, 0));
        population = &own[0];
      } else {
        population = &fixed_population[0];
      }
      out.truth = std::isnan(truth) ? population_value(*population, estimand) : truth;

      RdsConfig cfg = base;
      cfg.rng_seed = substream_seed(rep_seed, 0x5A3, 1);
      RdsResult rds = simulate_rds(*population, cfg);
      out.shortfall = rds.shortfall;
      if (rds.sample.n() == 0) return;
      try {
        RdsEstimate est = estimate_with_se(rds.sample, rds.forest, sample_variable,
                                           "acquaintance_degree", true, opts.bootstrap_B,
                                           substream_seed(rep_seed, 0xB00, 2), 1);
        out.estimate = est.estimate;
        out.usable = true;
        if (est.ci_low && est.ci_high) {
          out.ci_low = *est.ci_low;
          out.ci_high = *est.ci_high;
          out.has_ci = true;
        }
      } catch (const std::exception&) {
        // Degenerate replicate (e.g. every weight missing); leave unusable.
      }
    });

    PowerRow row;
    row.target_sample = base.target_sample;
    int usable = 0, with_ci = 0, covered = 0, shortfalls = 0;
    double bias_sum = 0.0, sq_sum = 0.0, width_sum = 0.0;
    for (const auto& rep : reps) {
      if (rep.shortfall) ++shortfalls;
      if (!rep.usable) continue;
      ++usable;
      double err = rep.estimate - rep.truth;
      bias_sum += err;
      sq_sum += err * err;
      if (rep.has_ci) {
        ++with_ci;
        width_sum += rep.ci_high - rep.ci_low;
        if (rep.truth >= rep.ci_low - 1e-12 && rep.truth <= rep.ci_high + 1e-12) ++covered;
      }
    }
    row.replicates = usable;
    if (usable == 0)
      throw std::runtime_error("no usable replicate at target_sample " +
                               std::to_string(base.target_sample));
    row.bias = bias_sum / usable;
    row.rmse = std::sqrt(sq_sum / usable);
    if (with_ci > 0) {
      row.ci_width = width_sum / with_ci;
      row.coverage = static_cast<double>(covered) / with_ci;
    }
    row.shortfall_rate = static_cast<double>(shortfalls) / opts.replicates;
    row.flagged = row.shortfall_rate > 0.5;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rdsnet
