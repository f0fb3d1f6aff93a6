#ifndef BMMIX_BMA_HPP
#define BMMIX_BMA_HPP

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmmix/common.hpp"
#include "bmmix/dataset.hpp"
#include "bmmix/distributions.hpp"
#include "bmmix/rng.hpp"

namespace bmmix {

// Conjugate prior for one model's constant discrepancy: the precision
// lambda ~ Gamma(shape, rate) and delta | lambda ~ N(mu, 1/lambda). The
// default shape/rate approximate the moments of 1/sigma^2 when
// sigma ~ Gamma(5, 10).
struct PrecisionPrior {
  double mu = 0.0;
  double shape = 0.252;
  double rate = 0.030;

  void validate() const {
    require(shape > 0 && rate > 0, "precision prior needs positive shape and rate");
    require(std::isfinite(mu), "precision prior mean must be finite");
  }
};

// Independent priors used by the Monte Carlo and Laplace evidence routes:
// sigma ~ Gamma, delta ~ Normal. The delta scale defaults to the prior mean
// of sigma, mirroring the unit precision ratio of the conjugate setup.
struct IndependentPriors {
  DistSpec sigma = DistSpec::gamma(5.0, 10.0);
  DistSpec delta = DistSpec::normal(0.0, 0.5);

  void validate() const {
    require(sigma.family == DistFamily::Gamma, "sigma prior must be Gamma");
    require(delta.family == DistFamily::Normal, "delta prior must be Normal");
  }
};

enum class EvidenceMethod { Exact, Mc, Laplace };

inline const char* to_string(EvidenceMethod m) {
  switch (m) {
    case EvidenceMethod::Exact: return "exact";
    case EvidenceMethod::Mc: return "mc";
    case EvidenceMethod::Laplace: return "laplace";
  }
  return "?";
}

inline EvidenceMethod evidence_method_from_string(const std::string& s) {
  if (s == "exact") return EvidenceMethod::Exact;
  if (s == "mc") return EvidenceMethod::Mc;
  if (s == "laplace") return EvidenceMethod::Laplace;
  throw validation_error("unknown evidence method '" + s + "' (expected exact, mc, laplace)");
}

struct EvidenceResult {
  std::string model_name;
  EvidenceMethod method = EvidenceMethod::Exact;
  double log_evidence = neg_inf;
  std::optional<double> mc_se;
  long n_mc = 0;
  double hessian_condition = std::numeric_limits<double>::quiet_NaN();
  double mode_delta = std::numeric_limits<double>::quiet_NaN();
  double mode_sigma = std::numeric_limits<double>::quiet_NaN();
};

// Posterior of (delta, lambda) under the conjugate prior given residuals.
struct ConjugatePosterior {
  double mu_n = 0.0;
  double kappa_n = 0.0;
  double a_n = 0.0;
  double b_n = 0.0;

  static ConjugatePosterior from_residuals(const VectorXd& d, const PrecisionPrior& prior) {
    prior.validate();
    const Index n = d.size();
    require(n >= 1, "evidence requires at least one residual");
    require(all_finite(d), "residuals must be finite");
    const double dbar = d.mean();
    const double ssd = (d.array() - dbar).square().sum();
    ConjugatePosterior post;
    post.kappa_n = 1.0 + static_cast<double>(n);
    post.mu_n = (prior.mu + n * dbar) / post.kappa_n;
    post.a_n = prior.shape + 0.5 * n;
    post.b_n = prior.rate + 0.5 * ssd +
               n * (dbar - prior.mu) * (dbar - prior.mu) / (2.0 * (1.0 + n));
    return post;
  }

  // Draws (delta, lambda): lambda ~ Gamma(a_n, b_n), delta | lambda ~
  // N(mu_n, 1/(kappa_n * lambda)).
  std::pair<double, double> sample(RngStream& rng) const {
    const double lambda = rng.gamma(a_n, b_n);
    const double delta = mu_n + rng.normal() / std::sqrt(kappa_n * lambda);
    return {delta, lambda};
  }
};

inline EvidenceResult evidence_closed_form(const VectorXd& d, const PrecisionPrior& prior) {
  const ConjugatePosterior post = ConjugatePosterior::from_residuals(d, prior);
  const double n = static_cast<double>(d.size());
  EvidenceResult out;
  out.method = EvidenceMethod::Exact;
  out.log_evidence = std::lgamma(post.a_n) + prior.shape * std::log(prior.rate) -
                     std::lgamma(prior.shape) - post.a_n * std::log(post.b_n) -
                     0.5 * std::log(post.kappa_n) - 0.5 * n * log_2pi;
  require(std::isfinite(out.log_evidence), "closed-form evidence is not finite");
  return out;
}

namespace detail {

inline double gaussian_loglik(const VectorXd& d, double delta, double sigma) {
  const double n = static_cast<double>(d.size());
  return -0.5 * n * log_2pi - n * std::log(sigma) -
         (d.array() - delta).square().sum() / (2.0 * sigma * sigma);
}

// Turns per-draw log likelihoods into a log-mean-exp estimate with a
// delta-method standard error on the log scale.
inline EvidenceResult mc_from_logliks(const std::vector<double>& logliks) {
  const long m = static_cast<long>(logliks.size());
  double lmax = neg_inf;
  for (double l : logliks) lmax = std::max(lmax, l);
  if (!std::isfinite(lmax))
    throw numerical_error(
        "all Monte Carlo likelihood draws underflowed; rescale the priors or "
        "evaluate the evidence in log space with a narrower prior");
  double sw = 0.0, sw2 = 0.0;
  for (double l : logliks) {
    const double w = std::exp(l - lmax);
    sw += w;
    sw2 += w * w;
  }
  const double mean_w = sw / m;
  EvidenceResult out;
  out.method = EvidenceMethod::Mc;
  out.n_mc = m;
  out.log_evidence = lmax + std::log(mean_w);
  if (m > 1) {
    const double var_w = std::max(0.0, (sw2 - m * mean_w * mean_w) / (m - 1.0));
    out.mc_se = std::sqrt(var_w / m) / mean_w;
  }
  return out;
}

}  // namespace detail

// Monte Carlo evidence under the conjugate prior: draws (delta, lambda)
// from the prior and averages the likelihood.
inline EvidenceResult evidence_mc(const VectorXd& d, const PrecisionPrior& prior, long n_mc,
                                  RngStream& rng) {
  prior.validate();
  require(n_mc >= 1, "n_mc must be positive");
  require(d.size() >= 1 && all_finite(d), "residuals must be non-empty and finite");
  std::vector<double> logliks(static_cast<std::size_t>(n_mc));
  for (long m = 0; m < n_mc; ++m) {
    const double lambda = rng.gamma(prior.shape, prior.rate);
    const double delta = prior.mu + rng.normal() / std::sqrt(lambda);
    logliks[static_cast<std::size_t>(m)] =
        detail::gaussian_loglik(d, delta, 1.0 / std::sqrt(lambda));
  }
  return detail::mc_from_logliks(logliks);
}

// Monte Carlo evidence under the independent priors.
inline EvidenceResult evidence_mc(const VectorXd& d, const IndependentPriors& prior, long n_mc,
                                  RngStream& rng) {
  prior.validate();
  require(n_mc >= 1, "n_mc must be positive");
  require(d.size() >= 1 && all_finite(d), "residuals must be non-empty and finite");
  std::vector<double> logliks(static_cast<std::size_t>(n_mc));
  for (long m = 0; m < n_mc; ++m) {
    const double sigma = sample(prior.sigma, rng);
    const double delta = sample(prior.delta, rng);
    logliks[static_cast<std::size_t>(m)] = detail::gaussian_loglik(d, delta, sigma);
  }
  return detail::mc_from_logliks(logliks);
}

// Log joint l(delta, sigma) = log p(d | delta, sigma) + log priors, the
// objective whose mode anchors the Laplace approximation.
inline double laplace_objective(const VectorXd& d, const IndependentPriors& prior, double delta,
                                double sigma) {
  if (!(sigma > 0)) return neg_inf;
  return detail::gaussian_loglik(d, delta, sigma) + logpdf(prior.sigma, sigma) +
         logpdf(prior.delta, delta);
}

inline void laplace_gradient(const VectorXd& d, const IndependentPriors& prior, double delta,
                             double sigma, double& g_delta, double& g_sigma) {
  const double n = static_cast<double>(d.size());
  const double a = prior.sigma.p1, b = prior.sigma.p2;
  const double mu = prior.delta.p1, s = prior.delta.p2;
  const double sum_r = (d.array() - delta).sum();
  const double ssr = (d.array() - delta).square().sum();
  g_delta = sum_r / (sigma * sigma) - (delta - mu) / (s * s);
  g_sigma = (a - 1.0 - n) / sigma + ssr / (sigma * sigma * sigma) - b;
}

// Second derivatives of l. The sigma-delta cross term is the derivative of
// sum(d_i - delta)/sigma^2 with respect to sigma; the delta prior does not
// depend on sigma and contributes nothing there.
inline void laplace_hessian(const VectorXd& d, const IndependentPriors& prior, double delta,
                            double sigma, double& l_ss, double& l_sd, double& l_dd) {
  const double n = static_cast<double>(d.size());
  const double a = prior.sigma.p1;
  const double s = prior.delta.p2;
  const double sum_r = (d.array() - delta).sum();
  const double ssr = (d.array() - delta).square().sum();
  const double s2 = sigma * sigma;
  l_ss = (n - a + 1.0) / s2 - 3.0 * ssr / (s2 * s2);
  l_sd = -2.0 * sum_r / (s2 * sigma);
  l_dd = -n / s2 - 1.0 / (s * s);
}

inline EvidenceResult evidence_laplace(const VectorXd& d, const IndependentPriors& prior) {
  prior.validate();
  const Index n = d.size();
  require(n >= 1 && all_finite(d), "residuals must be non-empty and finite");

  // Maximize l over (delta, log sigma) with BFGS and a backtracking line
  // search, from three starts to guard against ridge geometry.
  const double dbar = d.mean();
  const double sd_d = std::sqrt((d.array() - dbar).square().sum() / std::max<Index>(n, 1) + 1e-12);
  const double start_sigmas[3] = {std::max(sd_d, 1e-3), prior.sigma.mean(),
                                  2.0 * std::max(sd_d, 1e-3)};
  const double start_deltas[3] = {dbar, 0.0, dbar};

  double best_l = neg_inf, best_delta = 0.0, best_sigma = 1.0;
  for (int s0 = 0; s0 < 3; ++s0) {
    double x0 = start_deltas[s0], x1 = std::log(start_sigmas[s0]);
    Eigen::Matrix2d Hinv = Eigen::Matrix2d::Identity();
    auto grad_at = [&](double de, double ls, double& g0, double& g1) {
      double gd, gs;
      const double sg = std::exp(ls);
      laplace_gradient(d, prior, de, sg, gd, gs);
      g0 = gd;
      g1 = gs * sg;  // chain rule for the log-sigma coordinate
    };
    double f = laplace_objective(d, prior, x0, std::exp(x1));
    double g0, g1;
    grad_at(x0, x1, g0, g1);
    for (int it = 0; it < 200; ++it) {
      if (std::hypot(g0, g1) < 1e-11) break;
      Eigen::Vector2d g(g0, g1);
      Eigen::Vector2d step = Hinv * g;
      if (!step.allFinite() || step.dot(g) <= 0) {
        Hinv = Eigen::Matrix2d::Identity();
        step = g;
      }
      double t = 1.0;
      double nf = neg_inf, nx0 = x0, nx1 = x1;
      for (int ls = 0; ls < 40; ++ls) {
        nx0 = x0 + t * step[0];
        nx1 = x1 + t * step[1];
        nf = laplace_objective(d, prior, nx0, std::exp(nx1));
        if (nf > f + 1e-4 * t * step.dot(g)) break;
        t *= 0.5;
      }
      if (!(nf > f)) break;
      double ng0, ng1;
      grad_at(nx0, nx1, ng0, ng1);
      const Eigen::Vector2d sk(nx0 - x0, nx1 - x1);
      const Eigen::Vector2d yk(g0 - ng0, g1 - ng1);  // gradient of -l increases
      const double sy = sk.dot(yk);
      if (sy > 1e-12) {
        const Eigen::Vector2d hy = Hinv * yk;
        Hinv += ((sy + yk.dot(hy)) / (sy * sy)) * (sk * sk.transpose()) -
                (hy * sk.transpose() + sk * hy.transpose()) / sy;
      }
      x0 = nx0;
      x1 = nx1;
      f = nf;
      g0 = ng0;
      g1 = ng1;
    }
    if (f > best_l) {
      best_l = f;
      best_delta = x0;
      best_sigma = std::exp(x1);
    }
  }
  require(std::isfinite(best_l), "Laplace mode search failed to find a finite objective");

  double l_ss, l_sd, l_dd;
  laplace_hessian(d, prior, best_delta, best_sigma, l_ss, l_sd, l_dd);
  const double det_negH = l_ss * l_dd - l_sd * l_sd;  // det(-H) = det(H) in 2-D
  const double tr_negH = -(l_ss + l_dd);
  const double disc = std::sqrt(std::max(0.0, tr_negH * tr_negH - 4.0 * det_negH));
  const double ev_min = 0.5 * (tr_negH - disc), ev_max = 0.5 * (tr_negH + disc);
  if (!(det_negH > 0.0) || !(tr_negH > 0.0))
    throw numerical_error(
        "Laplace Hessian is not negative definite at the mode (eigenvalues of -H: " +
        std::to_string(ev_min) + ", " + std::to_string(ev_max) + ")");

  EvidenceResult out;
  out.method = EvidenceMethod::Laplace;
  out.log_evidence = log_2pi - 0.5 * std::log(det_negH) + best_l;
  out.hessian_condition = ev_max / ev_min;
  out.mode_delta = best_delta;
  out.mode_sigma = best_sigma;
  require(std::isfinite(out.log_evidence), "Laplace evidence is not finite");
  return out;
}

// Evidence for the discrepancy-free model y_i = f_k(x_i) + sigma eps_i,
// whose only parameter is sigma.
inline EvidenceResult evidence_sigma_only_quadrature(const VectorXd& d, const DistSpec& sigma_prior) {
  require(sigma_prior.family == DistFamily::Gamma, "sigma prior must be Gamma");
  require(d.size() >= 1 && all_finite(d), "residuals must be non-empty and finite");
  const double lshift = detail::gaussian_loglik(d, 0.0, std::sqrt(d.squaredNorm() / d.size() + 1e-12));
  auto integrand = [&](double sigma) {
    if (!(sigma > 0)) return 0.0;
    const double l = detail::gaussian_loglik(d, 0.0, sigma) + logpdf(sigma_prior, sigma);
    return std::exp(l - lshift);
  };
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double val = gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 12, 1e-10, &err);
  require(val > 0.0 && std::isfinite(val), "sigma-only quadrature failed to converge");
  EvidenceResult out;
  out.method = EvidenceMethod::Exact;
  out.log_evidence = lshift + std::log(val);
  return out;
}

inline EvidenceResult evidence_sigma_only_mc(const VectorXd& d, const DistSpec& sigma_prior,
                                             long n_mc, RngStream& rng) {
  require(n_mc >= 1, "n_mc must be positive");
  require(d.size() >= 1 && all_finite(d), "residuals must be non-empty and finite");
  std::vector<double> logliks(static_cast<std::size_t>(n_mc));
  for (long m = 0; m < n_mc; ++m)
    logliks[static_cast<std::size_t>(m)] =
        detail::gaussian_loglik(d, 0.0, sample(sigma_prior, rng));
  return detail::mc_from_logliks(logliks);
}

inline EvidenceResult evidence_sigma_only_laplace(const VectorXd& d, const DistSpec& sigma_prior) {
  require(sigma_prior.family == DistFamily::Gamma, "sigma prior must be Gamma");
  require(d.size() >= 1 && all_finite(d), "residuals must be non-empty and finite");
  const double n = static_cast<double>(d.size());
  const double a = sigma_prior.p1, b = sigma_prior.p2;
  const double s0 = d.squaredNorm();
  double sigma = std::sqrt(s0 / n + 1e-12);
  for (int it = 0; it < 100; ++it) {
    const double g = (a - 1.0 - n) / sigma + s0 / (sigma * sigma * sigma) - b;
    const double h = (n + 1.0 - a) / (sigma * sigma) - 3.0 * s0 / std::pow(sigma, 4);
    if (!(h < 0)) break;
    const double step = g / h;
    double next = sigma - step;
    if (!(next > 0)) next = 0.5 * sigma;
    if (std::abs(next - sigma) < 1e-13 * sigma) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  const double l = detail::gaussian_loglik(d, 0.0, sigma) + logpdf(sigma_prior, sigma);
  const double h = (n + 1.0 - a) / (sigma * sigma) - 3.0 * s0 / std::pow(sigma, 4);
  if (!(h < 0))
    throw numerical_error("sigma-only Laplace curvature is not negative at the mode");
  EvidenceResult out;
  out.method = EvidenceMethod::Laplace;
  out.log_evidence = 0.5 * log_2pi - 0.5 * std::log(-h) + l;
  out.mode_sigma = sigma;
  return out;
}

struct BmaWeights {
  VectorXd weights;
  VectorXd prior_probs;
};

inline BmaWeights bma_weights(const std::vector<EvidenceResult>& evidences,
                              VectorXd prior_probs = VectorXd()) {
  const Index p = static_cast<Index>(evidences.size());
  require(p >= 1, "bma_weights needs at least one evidence result");
  for (const EvidenceResult& e : evidences)
    require(e.method == evidences.front().method,
            "mixing evidence methods in one weight computation");
  if (prior_probs.size() == 0)
    prior_probs = VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  require(prior_probs.size() == p, "prior probability vector length mismatch");
  require((prior_probs.array() >= 0).all() && std::abs(prior_probs.sum() - 1.0) < 1e-8,
          "prior model probabilities must lie on the simplex");
  VectorXd lw(p);
  for (Index k = 0; k < p; ++k) {
    require(prior_probs[k] > 0 || std::isfinite(evidences[static_cast<std::size_t>(k)].log_evidence),
            "zero prior with non-finite evidence");
    lw[k] = evidences[static_cast<std::size_t>(k)].log_evidence +
            (prior_probs[k] > 0 ? std::log(prior_probs[k]) : neg_inf);
  }
  const double norm = log_sum_exp(lw);
  require(std::isfinite(norm), "all posterior model weights vanished");
  BmaWeights out;
  out.prior_probs = prior_probs;
  out.weights = (lw.array() - norm).exp();
  out.weights /= out.weights.sum();
  return out;
}

// Mixture sampling: each output draw picks a model by weight, then one of
// that model's predictive draws (a full row, preserving cross-location
// structure within the draw).
inline MatrixXd bma_predict(const BmaWeights& w, const std::vector<MatrixXd>& per_model_draws,
                            long n_out, RngStream& rng) {
  const Index p = static_cast<Index>(per_model_draws.size());
  require(p >= 1 && w.weights.size() == p, "per-model draw count does not match weights");
  const Index m = per_model_draws.front().cols();
  for (const MatrixXd& dk : per_model_draws)
    require(dk.cols() == m && dk.rows() >= 1, "per-model predictive draws have mismatched shapes");
  MatrixXd out(n_out, m);
  for (long j = 0; j < n_out; ++j) {
    const Index k = rng.categorical(w.weights);
    const MatrixXd& dk = per_model_draws[static_cast<std::size_t>(k)];
    const Index row = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(dk.rows()));
    out.row(j) = dk.row(row);
  }
  return out;
}

// Posterior predictive draws for one model under the conjugate setup:
// y = f_k(x) + delta + eps/sqrt(lambda), with fresh noise per location.
inline MatrixXd conjugate_predictive_draws(const ConjugatePosterior& post, const VectorXd& f_at_locs,
                                           long n_draws, RngStream& rng) {
  require(n_draws >= 1, "need at least one predictive draw");
  MatrixXd out(n_draws, f_at_locs.size());
  for (long j = 0; j < n_draws; ++j) {
    const auto [delta, lambda] = post.sample(rng);
    const double sd = 1.0 / std::sqrt(lambda);
    for (Index i = 0; i < f_at_locs.size(); ++i)
      out(j, i) = f_at_locs[i] + delta + sd * rng.normal();
  }
  return out;
}

// Evidence for every model of an aligned dataset, evaluated concurrently.
// Residuals are y - f_k (or y - f_k - delta_f,k when corrections are on).
inline std::vector<EvidenceResult> bma_evidence_table(const AlignedDataset& data,
                                                      bool use_corrections, EvidenceMethod method,
                                                      const PrecisionPrior& conj_prior,
                                                      const IndependentPriors& indep_prior,
                                                      long n_mc, const RngStream& rng_base) {
  const MatrixXd fe = data.effective_predictions(use_corrections);
  std::vector<std::future<EvidenceResult>> futs;
  for (Index k = 0; k < data.p(); ++k) {
    futs.push_back(std::async(std::launch::async, [&, k]() {
      const VectorXd d = data.y - fe.col(k);
      EvidenceResult r;
      switch (method) {
        case EvidenceMethod::Exact:
          r = evidence_closed_form(d, conj_prior);
          break;
        case EvidenceMethod::Mc: {
          RngStream rng = rng_base.split(static_cast<std::uint64_t>(k) + 1);
          r = evidence_mc(d, indep_prior, n_mc, rng);
          break;
        }
        case EvidenceMethod::Laplace:
          r = evidence_laplace(d, indep_prior);
          break;
      }
      r.model_name = data.model_names[static_cast<std::size_t>(k)];
      return r;
    }));
  }
  std::vector<EvidenceResult> out;
  out.reserve(futs.size());
  for (auto& f : futs) out.push_back(f.get());
  return out;
}

}  // namespace bmmix

#endif  // BMMIX_BMA_HPP
