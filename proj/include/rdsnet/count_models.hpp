#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdsnet/rng.hpp"
#include "rdsnet/survey.hpp"

namespace rdsnet {

enum class Family { poisson, negbin, zip, zinb };

std::string family_name(Family f);
Family parse_family(const std::string& name);
bool family_has_zero_component(Family f);
bool family_has_dispersion(Family f);

struct ModelSpec {
  Family family = Family::poisson;
  std::string response;
  std::vector<std::string> conditional_terms;  // log-link mean component
  std::vector<std::string> zero_terms;         // logit-link inflation component
};

/// Columns of the design matrix owned by one removable covariate term.
struct TermBlock {
  std::string name;
  std::vector<int> cols;
};

/// Design matrices with intercepts in column 0. Z is present (at least the
/// intercept) so zero-inflated families can always be fitted on the same
/// data object; Poisson/NB simply ignore it.
struct ModelData {
  std::vector<double> y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  std::vector<std::string> x_col_names;  // "(Intercept)", "gender=female", ...
  std::vector<std::string> z_col_names;
  std::vector<TermBlock> x_terms;  // removable terms (intercepts excluded)
  std::vector<TermBlock> z_terms;

  int n() const { return static_cast<int>(y.size()); }
};

/// Complete-case design matrix. Categorical covariates are dummy-coded
/// against reference_levels[attr] (first dictionary level when unset).
ModelData model_data_from_dataset(
    const SurveyDataset& ds, const ModelSpec& spec,
    const std::map<std::string, std::string>& reference_levels = {});

/// Parameter vector layout: [beta | gamma (zip/zinb) | log_alpha (nb/zinb)].
int n_params(Family fam, const ModelData& data);

/// Exact log-likelihood; zero masses use log-sum-exp so extreme logits and
/// dispersions stay finite. Returns -inf rather than NaN on overflow.
double loglik(Family fam, const Eigen::VectorXd& theta, const ModelData& data);
Eigen::VectorXd loglik_gradient(Family fam, const Eigen::VectorXd& theta,
                                const ModelData& data);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  std::optional<double> se;
  std::optional<double> z;
  std::optional<double> p_value;
  std::string stars;  // + .1  * .05  ** .01  *** .001
};

struct Criteria {
  double aic = 0.0;
  std::optional<double> aicc;  // absent when n <= k+1
  double bic = 0.0;
};

Criteria information_criteria(double loglik, int k, int n);

struct CountModelFit {
  Family family = Family::poisson;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::optional<double> log_alpha;
  std::vector<Coefficient> coefficients;
  double loglik = 0.0;
  Criteria criteria;
  double rmse = 0.0;
  int n = 0;
  int k = 0;
  bool converged = false;
  bool boundary = false;  // zero-inflation logit saturated
  int iterations = 0;
};

struct FitOptions {
  double tol = 1e-6;   // gradient max-norm
  int max_iter = 500;
  int n_starts = 3;
  std::uint64_t rng_seed = 0;
};

/// Quasi-Newton (BFGS + backtracking) maximum likelihood with a Poisson IRLS
/// warm start; extra starts jitter the initial point and the best optimum
/// wins. Non-convergence is reported, not thrown; rank deficiency throws.
CountModelFit fit(Family fam, const ModelData& data, const FitOptions& opts = {});

/// Convenience wrapper: builds the design from the dataset and fits.
CountModelFit fit_model(const SurveyDataset& ds, const ModelSpec& spec,
                        const FitOptions& opts = {},
                        const std::map<std::string, std::string>& reference_levels = {});

/// RMSE between y and the fitted unconditional mean (1-pi)*mu.
double rmse(const CountModelFit& fit, const ModelData& data);

/// P(Y = y); pi ignored unless zero-inflated, alpha ignored unless NB-type.
double count_pmf(Family fam, double mu, double pi, double alpha, long long y);

/// One draw from the family (Gamma-Poisson mixture for the NB branch).
long long draw_count(Family fam, double mu, double pi, double alpha, Rng& rng);

struct StepCandidate {
  std::string component;  // "conditional" or "zero"
  std::string term;
  std::optional<double> aicc;  // of the model with the term removed
  bool removed = false;
};

struct StepwiseResult {
  CountModelFit best;
  ModelData final_data;
  std::vector<StepCandidate> trace;
};

/// Backward elimination on AICc: each pass refits the model with every
/// single term removed and drops the one that lowers AICc the most.
StepwiseResult stepwise_backward(Family fam, const ModelData& data,
                                 const FitOptions& opts = {});

struct FamilyRow {
  Family family = Family::poisson;
  std::optional<CountModelFit> fit;  // absent when the fit failed to converge
};

/// Fits every candidate family to the same data, ranked by AICc ascending;
/// non-convergent rows are kept but marked absent and sort last.
std::vector<FamilyRow> family_selection(const ModelData& data,
                                        const std::vector<Family>& candidates,
                                        const FitOptions& opts = {});

}  // namespace rdsnet
