#include "rdsnet/count_models.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace rdsnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double lse2(double a, double b) {  // log(e^a + e^b)
  double m = std::max(a, b);
  if (m == -kInf) return -kInf;
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

struct Unpacked {
  Eigen::VectorXd eta, mu;  // conditional linear predictor and mean
  Eigen::VectorXd a;        // zero-component logit (zi families)
  double r = 0.0;           // 1/alpha (dispersion families)
};

Unpacked unpack(Family fam, const Eigen::VectorXd& theta, const ModelData& d) {
  Unpacked u;
  int p = static_cast<int>(d.X.cols());
  int q = family_has_zero_component(fam) ? static_cast<int>(d.Z.cols()) : 0;
  u.eta = d.X * theta.head(p);
  u.mu = u.eta.array().exp();
  if (q > 0) u.a = d.Z * theta.segment(p, q);
  if (family_has_dispersion(fam)) u.r = std::exp(-theta(p + q));
  return u;
}

// Shared likelihood/gradient evaluator. Gradient w.r.t. [beta|gamma|log_alpha];
// d loglik / d log_alpha = -r * d loglik / d r since r = exp(-log_alpha).
double evaluate(Family fam, const Eigen::VectorXd& theta, const ModelData& d,
                Eigen::VectorXd* grad) {
  const Unpacked u = unpack(fam, theta, d);
  const int n = d.n();
  const int p = static_cast<int>(d.X.cols());
  const bool zi = family_has_zero_component(fam);
  const bool disp = family_has_dispersion(fam);
  const int q = zi ? static_cast<int>(d.Z.cols()) : 0;
  const double r = u.r;
  // Reject points outside the representable domain (r must stay a positive
  // finite real or the digamma terms hit a pole) instead of evaluating them.
  if (!theta.allFinite() || (disp && !(r > 0.0 && std::isfinite(r)))) {
    if (grad)
      grad->setConstant(n_params(fam, d),
                        std::numeric_limits<double>::quiet_NaN());
    return -kInf;
  }

  double ll = 0.0;
  double gr = 0.0;  // d ll / d r
  Eigen::VectorXd cb, cg;
  if (grad) {
    cb = Eigen::VectorXd::Zero(n);
    if (zi) cg = Eigen::VectorXd::Zero(n);
  }

  for (int i = 0; i < n; ++i) {
    const double y = d.y[static_cast<std::size_t>(i)];
    const double mu = u.mu(i);
    const double eta = u.eta(i);
    const double a = zi ? u.a(i) : 0.0;
    double li = 0.0, dbeta = 0.0, dgamma = 0.0;

    switch (fam) {
      case Family::poisson:
        li = y * eta - mu - std::lgamma(y + 1.0);
        dbeta = y - mu;
        break;
      case Family::negbin: {
        li = std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) -
             r * std::log1p(mu / r) + y * (eta - std::log(r + mu));
        dbeta = (y - mu) * r / (r + mu);
        if (grad)
          gr += boost::math::digamma(y + r) - boost::math::digamma(r) -
                std::log1p(mu / r) + (mu - y) / (r + mu);
        break;
      }
      case Family::zip: {
        if (y == 0.0) {
          double l0 = lse2(a, -mu);
          li = l0 - softplus(a);
          double w = std::exp(-mu - l0);  // posterior Poisson-branch weight
          dbeta = -w * mu;
          dgamma = (1.0 - w) - sigmoid(a);
        } else {
          li = -softplus(a) + y * eta - mu - std::lgamma(y + 1.0);
          dbeta = y - mu;
          dgamma = -sigmoid(a);
        }
        break;
      }
      case Family::zinb: {
        double logp0 = -r * std::log1p(mu / r);
        if (y == 0.0) {
          double l0 = lse2(a, logp0);
          li = l0 - softplus(a);
          double w = std::exp(logp0 - l0);  // posterior NB-branch weight
          dbeta = -w * r * mu / (r + mu);
          dgamma = (1.0 - w) - sigmoid(a);
          if (grad) gr += w * (-std::log1p(mu / r) + mu / (r + mu));
        } else {
          li = -softplus(a) + std::lgamma(y + r) - std::lgamma(r) -
               std::lgamma(y + 1.0) - r * std::log1p(mu / r) +
               y * (eta - std::log(r + mu));
          dbeta = (y - mu) * r / (r + mu);
          dgamma = -sigmoid(a);
          if (grad)
            gr += boost::math::digamma(y + r) - boost::math::digamma(r) -
                  std::log1p(mu / r) + (mu - y) / (r + mu);
        }
        break;
      }
    }
    ll += li;
    if (grad) {
      cb(i) = dbeta;
      if (zi) cg(i) = dgamma;
    }
  }

  if (!std::isfinite(ll)) return -kInf;
  if (grad) {
    grad->resize(n_params(fam, d));
    grad->head(p) = d.X.transpose() * cb;
    if (zi) grad->segment(p, q) = d.Z.transpose() * cg;
    if (disp) (*grad)(p + q) = -r * gr;
  }
  return ll;
}

void check_full_rank(const Eigen::MatrixXd& m, const char* which) {
  if (m.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  if (qr.rank() < m.cols())
    throw std::runtime_error(std::string(which) + " design matrix is rank deficient");
}

Eigen::VectorXd poisson_irls(const ModelData& d) {
  const int p = static_cast<int>(d.X.cols());
  double ybar = 0.0;
  for (double v : d.y) ybar += v;
  ybar /= std::max<std::size_t>(1, d.y.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = std::log(ybar + 0.1);
  Eigen::Map<const Eigen::VectorXd> y(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::VectorXd eta = (d.X * beta).array().min(30.0).max(-30.0);
    Eigen::VectorXd mu = eta.array().exp();
    Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    Eigen::MatrixXd xw = d.X.array().colwise() * mu.array();
    Eigen::VectorXd next = (d.X.transpose() * xw).ldlt().solve(d.X.transpose() * (mu.asDiagonal() * z));
    if (!next.allFinite()) break;
    double step = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (step < 1e-9) break;
  }
  return beta;
}

Eigen::VectorXd initial_point(Family fam, const ModelData& d) {
  const int p = static_cast<int>(d.X.cols());
  const bool zi = family_has_zero_component(fam);
  const bool disp = family_has_dispersion(fam);
  const int q = zi ? static_cast<int>(d.Z.cols()) : 0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + q + (disp ? 1 : 0));
  theta.head(p) = poisson_irls(d);

  double ybar = 0.0, zeros = 0.0;
  for (double v : d.y) {
    ybar += v;
    zeros += v == 0.0 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(d.y.size());
  ybar /= n;
  if (zi) {
    Eigen::VectorXd mu = (d.X * theta.head(p)).array().min(30.0).exp();
    double p0_fit = (-mu.array()).exp().mean();
    double excess = std::clamp(zeros / n - p0_fit, 0.02, 0.95);
    theta(p) = std::log(excess / (1.0 - excess));
  }
  if (disp) {
    double s2 = 0.0;
    for (double v : d.y) s2 += (v - ybar) * (v - ybar);
    s2 /= std::max(1.0, n - 1.0);
    double alpha = std::max((s2 - ybar) / std::max(ybar * ybar, 1e-8), 0.01);
    theta(p + q) = std::log(alpha);
  }
  return theta;
}

struct OptResult {
  Eigen::VectorXd theta;
  double ll = -kInf;
  bool converged = false;
  int iterations = 0;
};

OptResult bfgs_maximize(Family fam, const ModelData& d, Eigen::VectorXd theta,
                        const FitOptions& opts) {
  OptResult res;
  const int m = static_cast<int>(theta.size());
  Eigen::VectorXd g;
  double ll = evaluate(fam, theta, d, &g);
  if (!std::isfinite(ll)) {
    res.theta = theta;
    return res;  // hopeless start
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m);  // inverse Hessian approx
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (g.cwiseAbs().maxCoeff() < opts.tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = h * g;  // ascent direction
    double slope = g.dot(dir);
    if (!(slope > 0.0)) {
      h.setIdentity();
      dir = g;
      slope = g.dot(dir);
      if (!(slope > 0.0)) break;
    }
    double t = 1.0;
    double ll_new = -kInf;
    Eigen::VectorXd trial;
    bool stepped = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      trial = theta + t * dir;
      ll_new = evaluate(fam, trial, d, nullptr);
      if (std::isfinite(ll_new) && ll_new >= ll + 1e-4 * t * slope) {
        stepped = true;
        break;
      }
      t *= 0.5;
    }
    if (!stepped) break;
    Eigen::VectorXd g_new;
    evaluate(fam, trial, d, &g_new);
    Eigen::VectorXd s = trial - theta;
    Eigen::VectorXd yv = g - g_new;  // gradient of -ll increases
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      Eigen::VectorXd hy = h * yv;
      double yhy = yv.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
           (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    theta = trial;
    ll = ll_new;
    g = std::move(g_new);
  }
  // Near the optimum the likelihood plateaus at double precision while the
  // gradient is still above tol, stalling the line search; Newton steps on
  // the score equation reach the root without needing measurable ll gains.
  if (!res.converged && std::isfinite(ll) && g.size() == m) {
    for (int polish = 0; polish < 8; ++polish) {
      double gmax = g.cwiseAbs().maxCoeff();
      if (gmax < opts.tol) break;
      Eigen::MatrixXd hess(m, m);
      Eigen::VectorXd gp, gm;
      bool fd_ok = true;
      for (int j = 0; j < m && fd_ok; ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        evaluate(fam, tp, d, &gp);
        evaluate(fam, tm, d, &gm);
        fd_ok = gp.allFinite() && gm.allFinite();
        if (fd_ok) hess.col(j) = (gp - gm) / (2.0 * h);
      }
      if (!fd_ok) break;
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(hess);
      if (!lu.isInvertible()) break;
      Eigen::VectorXd dir = lu.solve(-g);
      bool accepted = false;
      double t = 1.0;
      for (int halvings = 0; halvings < 6; ++halvings, t *= 0.5) {
        Eigen::VectorXd trial = theta + t * dir;
        Eigen::VectorXd g_new;
        double ll_new = evaluate(fam, trial, d, &g_new);
        if (std::isfinite(ll_new) && g_new.allFinite() &&
            g_new.cwiseAbs().maxCoeff() < gmax &&
            ll_new >= ll - 1e-8 * (1.0 + std::abs(ll))) {
          theta = std::move(trial);
          ll = ll_new;
          g = std::move(g_new);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }
  res.theta = std::move(theta);
  res.ll = ll;
  res.iterations = iter;
  if (!res.converged && g.size() == m && g.cwiseAbs().maxCoeff() < opts.tol)
    res.converged = true;
  return res;
}

std::string stars_for(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return "+";
  return "";
}

void attach_wald(Family fam, const ModelData& d, CountModelFit& out,
                 const Eigen::VectorXd& theta) {
  const int m = static_cast<int>(theta.size());
  Eigen::MatrixXd hess(m, m);
  Eigen::VectorXd gp, gm;
  for (int j = 0; j < m; ++j) {
    double h = 1e-5 * std::max(1.0, std::abs(theta(j)));
    Eigen::VectorXd tp = theta, tm = theta;
    tp(j) += h;
    tm(j) -= h;
    evaluate(fam, tp, d, &gp);
    evaluate(fam, tm, d, &gm);
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  Eigen::MatrixXd info = -0.5 * (hess + hess.transpose());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  Eigen::MatrixXd cov;
  bool have_cov = lu.isInvertible();
  if (have_cov) cov = lu.inverse();

  const int p = static_cast<int>(d.X.cols());
  const bool zi = family_has_zero_component(fam);
  const int q = zi ? static_cast<int>(d.Z.cols()) : 0;
  auto name_of = [&](int j) -> std::string {
    if (j < p) return d.x_col_names[static_cast<std::size_t>(j)];
    if (j < p + q) return "zero." + d.z_col_names[static_cast<std::size_t>(j - p)];
    return "log_alpha";
  };
  for (int j = 0; j < m; ++j) {
    Coefficient c;
    c.name = name_of(j);
    c.estimate = theta(j);
    if (have_cov && cov(j, j) > 0.0 && std::isfinite(cov(j, j))) {
      c.se = std::sqrt(cov(j, j));
      c.z = c.estimate / *c.se;
      c.p_value = std::erfc(std::abs(*c.z) / std::sqrt(2.0));
      c.stars = stars_for(*c.p_value);
    }
    out.coefficients.push_back(std::move(c));
  }
}

ModelData drop_term(const ModelData& d, bool zero_side, const std::string& term) {
  ModelData out;
  out.y = d.y;
  const Eigen::MatrixXd& src = zero_side ? d.Z : d.X;
  const auto& names = zero_side ? d.z_col_names : d.x_col_names;
  const auto& terms = zero_side ? d.z_terms : d.x_terms;
  std::vector<bool> keep(static_cast<std::size_t>(src.cols()), true);
  for (const auto& t : terms)
    if (t.name == term)
      for (int c : t.cols) keep[static_cast<std::size_t>(c)] = false;
  std::vector<int> remap(static_cast<std::size_t>(src.cols()), -1);
  int kept = 0;
  for (int c = 0; c < src.cols(); ++c)
    if (keep[static_cast<std::size_t>(c)]) remap[static_cast<std::size_t>(c)] = kept++;
  Eigen::MatrixXd reduced(src.rows(), kept);
  std::vector<std::string> reduced_names;
  for (int c = 0; c < src.cols(); ++c)
    if (keep[static_cast<std::size_t>(c)]) {
      reduced.col(remap[static_cast<std::size_t>(c)]) = src.col(c);
      reduced_names.push_back(names[static_cast<std::size_t>(c)]);
    }
  std::vector<TermBlock> reduced_terms;
  for (const auto& t : terms) {
    if (t.name == term) continue;
    TermBlock nb;
    nb.name = t.name;
    for (int c : t.cols) nb.cols.push_back(remap[static_cast<std::size_t>(c)]);
    reduced_terms.push_back(std::move(nb));
  }
  if (zero_side) {
    out.X = d.X;
    out.x_col_names = d.x_col_names;
    out.x_terms = d.x_terms;
    out.Z = std::move(reduced);
    out.z_col_names = std::move(reduced_names);
    out.z_terms = std::move(reduced_terms);
  } else {
    out.Z = d.Z;
    out.z_col_names = d.z_col_names;
    out.z_terms = d.z_terms;
    out.X = std::move(reduced);
    out.x_col_names = std::move(reduced_names);
    out.x_terms = std::move(reduced_terms);
  }
  return out;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::poisson: return "poisson";
    case Family::negbin: return "negbin";
    case Family::zip: return "zip";
    case Family::zinb: return "zinb";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "poisson") return Family::poisson;
  if (name == "negbin" || name == "nb") return Family::negbin;
  if (name == "zip") return Family::zip;
  if (name == "zinb") return Family::zinb;
  throw std::invalid_argument("unknown family '" + name +
                              "' (expected poisson|negbin|zip|zinb)");
}

bool family_has_zero_component(Family f) { return f == Family::zip || f == Family::zinb; }
bool family_has_dispersion(Family f) { return f == Family::negbin || f == Family::zinb; }

int n_params(Family fam, const ModelData& data) {
  int k = static_cast<int>(data.X.cols());
  if (family_has_zero_component(fam)) k += static_cast<int>(data.Z.cols());
  if (family_has_dispersion(fam)) k += 1;
  return k;
}

double loglik(Family fam, const Eigen::VectorXd& theta, const ModelData& data) {
  return evaluate(fam, theta, data, nullptr);
}

Eigen::VectorXd loglik_gradient(Family fam, const Eigen::VectorXd& theta,
                                const ModelData& data) {
  Eigen::VectorXd g;
  evaluate(fam, theta, data, &g);
  return g;
}

Criteria information_criteria(double loglik, int k, int n) {
  Criteria c;
  c.aic = -2.0 * loglik + 2.0 * k;
  c.bic = -2.0 * loglik + k * std::log(static_cast<double>(n));
  if (n > k + 1)
    c.aicc = c.aic + 2.0 * k * (k + 1.0) / (n - k - 1.0);
  return c;
}

CountModelFit fit(Family fam, const ModelData& data, const FitOptions& opts) {
  if (data.n() == 0) throw std::invalid_argument("empty data");
  for (double v : data.y)
    if (v < 0.0 || v != std::floor(v))
      throw std::invalid_argument("response must be nonnegative integers");
  check_full_rank(data.X, "conditional");
  if (family_has_zero_component(fam)) check_full_rank(data.Z, "zero-component");
  if (data.n() <= n_params(fam, data))
    throw std::invalid_argument("more parameters than observations");

  Eigen::VectorXd theta0 = initial_point(fam, data);
  OptResult best;
  for (int s = 0; s < std::max(1, opts.n_starts); ++s) {
    Eigen::VectorXd start = theta0;
    if (s > 0) {
      Rng rng = make_rng(substream_seed(opts.rng_seed, 0xF17A27,
                                        static_cast<std::uint64_t>(s)));
      for (int j = 0; j < start.size(); ++j) start(j) += 0.3 * normal(rng);
    }
    OptResult r = bfgs_maximize(fam, data, std::move(start), opts);
    bool better = r.ll > best.ll + 1e-9 ||
                  (r.converged && !best.converged && r.ll > best.ll - 1e-9);
    if (s == 0 || better) best = std::move(r);
  }

  CountModelFit out;
  out.family = fam;
  out.n = data.n();
  out.k = n_params(fam, data);
  out.loglik = best.ll;
  out.converged = best.converged;
  out.iterations = best.iterations;
  const int p = static_cast<int>(data.X.cols());
  const bool zi = family_has_zero_component(fam);
  const int q = zi ? static_cast<int>(data.Z.cols()) : 0;
  out.beta.assign(best.theta.data(), best.theta.data() + p);
  if (zi) out.gamma.assign(best.theta.data() + p, best.theta.data() + p + q);
  if (family_has_dispersion(fam)) out.log_alpha = best.theta(p + q);
  out.criteria = information_criteria(out.loglik, out.k, out.n);
  if (zi) {
    Eigen::VectorXd a = data.Z * best.theta.segment(p, q);
    out.boundary = a.cwiseAbs().maxCoeff() > 25.0;
  }
  attach_wald(fam, data, out, best.theta);
  out.rmse = rmse(out, data);
  return out;
}

CountModelFit fit_model(const SurveyDataset& ds, const ModelSpec& spec,
                        const FitOptions& opts,
                        const std::map<std::string, std::string>& reference_levels) {
  return fit(spec.family, model_data_from_dataset(ds, spec, reference_levels), opts);
}

double rmse(const CountModelFit& f, const ModelData& data) {
  Eigen::Map<const Eigen::VectorXd> beta(f.beta.data(),
                                         static_cast<Eigen::Index>(f.beta.size()));
  Eigen::VectorXd mu = (data.X * beta).array().exp();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(data.n());
  if (!f.gamma.empty()) {
    Eigen::Map<const Eigen::VectorXd> gamma(f.gamma.data(),
                                            static_cast<Eigen::Index>(f.gamma.size()));
    Eigen::VectorXd a = data.Z * gamma;
    for (int i = 0; i < a.size(); ++i) pi(i) = sigmoid(a(i));
  }
  double ss = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double fitted = (1.0 - pi(i)) * mu(i);
    double e = data.y[static_cast<std::size_t>(i)] - fitted;
    ss += e * e;
  }
  return std::sqrt(ss / data.n());
}

double count_pmf(Family fam, double mu, double pi, double alpha, long long y) {
  if (y < 0) return 0.0;
  double yy = static_cast<double>(y);
  auto poisson_pmf = [&]() {
    if (mu <= 0.0) return y == 0 ? 1.0 : 0.0;
    return std::exp(yy * std::log(mu) - mu - std::lgamma(yy + 1.0));
  };
  auto negbin_pmf = [&]() {
    if (mu <= 0.0) return y == 0 ? 1.0 : 0.0;
    double r = 1.0 / alpha;
    return std::exp(std::lgamma(yy + r) - std::lgamma(r) - std::lgamma(yy + 1.0) -
                    r * std::log1p(mu / r) + yy * (std::log(mu) - std::log(r + mu)));
  };
  switch (fam) {
    case Family::poisson: return poisson_pmf();
    case Family::negbin: return negbin_pmf();
    case Family::zip:
      return y == 0 ? pi + (1.0 - pi) * poisson_pmf() : (1.0 - pi) * poisson_pmf();
    case Family::zinb:
      return y == 0 ? pi + (1.0 - pi) * negbin_pmf() : (1.0 - pi) * negbin_pmf();
  }
  return 0.0;
}

long long draw_count(Family fam, double mu, double pi, double alpha, Rng& rng) {
  if (family_has_zero_component(fam) && bernoulli(rng, pi)) return 0;
  if (family_has_dispersion(fam)) {
    double r = 1.0 / alpha;
    double lambda = gamma_draw(rng, r, mu / r);
    return poisson(rng, lambda);
  }
  return poisson(rng, mu);
}

StepwiseResult stepwise_backward(Family fam, const ModelData& data,
                                 const FitOptions& opts) {
  StepwiseResult res;
  res.final_data = data;
  res.best = fit(fam, data, opts);
  if (!res.best.converged)
    throw std::runtime_error("full model failed to converge; cannot run stepwise");

  auto aicc_of = [](const CountModelFit& f) {
    return f.converged && f.criteria.aicc ? *f.criteria.aicc : kInf;
  };
  double current = aicc_of(res.best);

  while (true) {
    struct Candidate {
      bool zero_side;
      std::string term;
      ModelData data;
      CountModelFit fit;
      std::size_t trace_index;
    };
    std::optional<Candidate> best_cand;
    for (int side = 0; side < 2; ++side) {
      const auto& terms = side == 0 ? res.final_data.x_terms : res.final_data.z_terms;
      for (const auto& t : terms) {
        ModelData reduced = drop_term(res.final_data, side == 1, t.name);
        StepCandidate sc;
        sc.component = side == 0 ? "conditional" : "zero";
        sc.term = t.name;
        std::optional<CountModelFit> rf;
        try {
          rf = fit(fam, reduced, opts);
        } catch (const std::exception&) {
          rf.reset();
        }
        if (rf && rf->converged && rf->criteria.aicc) sc.aicc = rf->criteria.aicc;
        res.trace.push_back(sc);
        if (sc.aicc && *sc.aicc < current &&
            (!best_cand || *sc.aicc < aicc_of(best_cand->fit))) {
          best_cand = Candidate{side == 1, t.name, std::move(reduced), std::move(*rf),
                                res.trace.size() - 1};
        }
      }
    }
    if (!best_cand) break;
    res.trace[best_cand->trace_index].removed = true;
    res.final_data = std::move(best_cand->data);
    res.best = std::move(best_cand->fit);
    current = aicc_of(res.best);
  }
  return res;
}

std::vector<FamilyRow> family_selection(const ModelData& data,
                                        const std::vector<Family>& candidates,
                                        const FitOptions& opts) {
  if (candidates.size() < 2)
    throw std::invalid_argument("family selection needs at least 2 candidates");
  std::vector<FamilyRow> rows;
  int ok = 0;
  for (Family fam : candidates) {
    FamilyRow row;
    row.family = fam;
    try {
      CountModelFit f = fit(fam, data, opts);
      if (f.converged) {
        row.fit = std::move(f);
        ++ok;
      }
    } catch (const std::exception&) {
      // fit infeasible for this family; the row stays absent
    }
    rows.push_back(std::move(row));
  }
  if (ok == 0) throw std::runtime_error("no candidate family could be fitted");
  auto key = [](const FamilyRow& r) {
    if (!r.fit) return kInf;
    return r.fit->criteria.aicc ? *r.fit->criteria.aicc : kInf / 2.0;
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const FamilyRow& a, const FamilyRow& b) { return key(a) < key(b); });
  return rows;
}

ModelData model_data_from_dataset(
    const SurveyDataset& ds, const ModelSpec& spec,
    const std::map<std::string, std::string>& reference_levels) {
  if (!family_has_zero_component(spec.family) && !spec.zero_terms.empty())
    throw std::invalid_argument("zero-component terms require a zip or zinb family");

  struct TermInfo {
    std::string name;
    bool numeric = false;
    std::vector<std::string> dummy_levels;  // categorical: non-reference levels
  };
  auto classify = [&](const std::string& term) {
    TermInfo info;
    info.name = term;
    if (is_known_numeric_variable(term)) {
      info.numeric = true;
      return info;
    }
    if (ds.category_dictionaries.count(term) == 0)
      throw std::invalid_argument("unknown covariate '" + term + "'");
    return info;
  };

  std::vector<TermInfo> x_info, z_info;
  for (const auto& t : spec.conditional_terms) x_info.push_back(classify(t));
  for (const auto& t : spec.zero_terms) z_info.push_back(classify(t));

  auto row_complete = [&](const SurveyRecord& r) {
    if (!numeric_value(r, spec.response)) return false;
    for (const auto* infos : {&x_info, &z_info})
      for (const auto& t : *infos) {
        if (t.numeric) {
          if (!numeric_value(r, t.name)) return false;
        } else if (!categorical_value(r, t.name)) {
          return false;
        }
      }
    return true;
  };
  std::vector<int> rows;
  for (int i = 0; i < ds.n(); ++i)
    if (row_complete(ds.records[static_cast<std::size_t>(i)])) rows.push_back(i);
  if (rows.empty()) throw std::runtime_error("no complete-case rows for the model");

  // Dummy levels: observed levels in dictionary order, minus the reference.
  auto resolve_levels = [&](TermInfo& t) {
    if (t.numeric) return;
    const auto& dict = ds.category_dictionaries.at(t.name);
    auto ref_it = reference_levels.find(t.name);
    std::string ref = ref_it != reference_levels.end() ? ref_it->second : dict.front();
    std::set<std::string> observed;
    for (int i : rows)
      observed.insert(*categorical_value(ds.records[static_cast<std::size_t>(i)], t.name));
    for (const auto& level : dict)
      if (level != ref && observed.count(level) > 0) t.dummy_levels.push_back(level);
  };
  for (auto& t : x_info) resolve_levels(t);
  for (auto& t : z_info) resolve_levels(t);

  ModelData d;
  d.y.reserve(rows.size());
  for (int i : rows)
    d.y.push_back(*numeric_value(ds.records[static_cast<std::size_t>(i)], spec.response));

  auto build_side = [&](const std::vector<TermInfo>& infos, Eigen::MatrixXd& m,
                        std::vector<std::string>& names, std::vector<TermBlock>& blocks) {
    int cols = 1;
    for (const auto& t : infos)
      cols += t.numeric ? 1 : static_cast<int>(t.dummy_levels.size());
    m.resize(static_cast<Eigen::Index>(rows.size()), cols);
    m.col(0).setOnes();
    names.assign(1, "(Intercept)");
    int c = 1;
    for (const auto& t : infos) {
      TermBlock block;
      block.name = t.name;
      if (t.numeric) {
        for (std::size_t i = 0; i < rows.size(); ++i)
          m(static_cast<Eigen::Index>(i), c) =
              *numeric_value(ds.records[static_cast<std::size_t>(rows[i])], t.name);
        names.push_back(t.name);
        block.cols.push_back(c++);
      } else {
        for (const auto& level : t.dummy_levels) {
          for (std::size_t i = 0; i < rows.size(); ++i) {
            auto v = categorical_value(ds.records[static_cast<std::size_t>(rows[i])], t.name);
            m(static_cast<Eigen::Index>(i), c) = (*v == level) ? 1.0 : 0.0;
          }
          names.push_back(t.name + "=" + level);
          block.cols.push_back(c++);
        }
      }
      if (!block.cols.empty()) blocks.push_back(std::move(block));
    }
  };
  build_side(x_info, d.X, d.x_col_names, d.x_terms);
  build_side(z_info, d.Z, d.z_col_names, d.z_terms);
  return d;
}

}  // namespace rdsnet
