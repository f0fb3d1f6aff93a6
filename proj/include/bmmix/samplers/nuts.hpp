#ifndef BMMIX_SAMPLERS_NUTS_HPP
#define BMMIX_SAMPLERS_NUTS_HPP

#include <cmath>
#include <future>
#include <sstream>
#include <vector>

#include "bmmix/rng.hpp"
#include "bmmix/samplers/posterior_samples.hpp"
#include "bmmix/samplers/sampler_config.hpp"

namespace bmmix {

inline constexpr double nuts_divergence_threshold = 1000.0;

namespace detail {

struct PhasePoint {
  VectorXd theta;
  VectorXd r;
  VectorXd grad;
  double logpost = neg_inf;

  double hamiltonian(const VectorXd& inv_mass) const {
    return -logpost + 0.5 * (r.array().square() * inv_mass.array()).sum();
  }
};

// One leapfrog step; returns false when the new state is unusable (treated
// as a divergence by the caller).
inline bool leapfrog_step(const TargetDensity& target, const VectorXd& inv_mass, double eps,
                          PhasePoint& z) {
  z.r += 0.5 * eps * z.grad;
  z.theta.array() += eps * inv_mass.array() * z.r.array();
  if (!z.theta.allFinite()) return false;
  VectorXd grad;
  const double lp = target.eval(z.theta, &grad);
  if (!std::isfinite(lp) || !grad.allFinite()) return false;
  z.logpost = lp;
  z.grad = std::move(grad);
  z.r += 0.5 * eps * z.grad;
  return true;
}

inline bool uturn(const VectorXd& theta_plus, const VectorXd& theta_minus, const VectorXd& r_plus,
                  const VectorXd& r_minus, const VectorXd& inv_mass) {
  const VectorXd dx = theta_plus - theta_minus;
  return dx.dot((inv_mass.array() * r_plus.array()).matrix()) < 0.0 ||
         dx.dot((inv_mass.array() * r_minus.array()).matrix()) < 0.0;
}

struct NutsTree {
  PhasePoint left, right;
  VectorXd sample_theta;
  VectorXd sample_grad;
  double sample_logpost = neg_inf;
  double log_sum_weight = neg_inf;
  double sum_accept = 0.0;
  long n_accept = 0;
  bool divergent = false;
  bool turned = false;
};

// Recursive doubling with multinomial sampling within the subtree.
inline NutsTree build_tree(const TargetDensity& target, const VectorXd& inv_mass, double eps,
                           int depth, int direction, const PhasePoint& from, double h0,
                           RngStream& rng) {
  if (depth == 0) {
    NutsTree t;
    PhasePoint z = from;
    if (!leapfrog_step(target, inv_mass, direction * eps, z)) {
      t.divergent = true;
      t.left = t.right = from;
      return t;
    }
    const double h = z.hamiltonian(inv_mass);
    const double dh = h - h0;
    if (!std::isfinite(dh) || dh > nuts_divergence_threshold) {
      t.divergent = true;
      t.left = t.right = z;
      return t;
    }
    t.left = t.right = z;
    t.sample_theta = z.theta;
    t.sample_grad = z.grad;
    t.sample_logpost = z.logpost;
    t.log_sum_weight = -dh;
    t.sum_accept = std::min(1.0, std::exp(-dh));
    t.n_accept = 1;
    return t;
  }

  NutsTree first = build_tree(target, inv_mass, eps, depth - 1, direction, from, h0, rng);
  if (first.divergent || first.turned) return first;
  const PhasePoint& grow_from = direction == 1 ? first.right : first.left;
  NutsTree second = build_tree(target, inv_mass, eps, depth - 1, direction, grow_from, h0, rng);

  NutsTree t;
  t.left = direction == 1 ? first.left : second.left;
  t.right = direction == 1 ? second.right : first.right;
  t.sum_accept = first.sum_accept + second.sum_accept;
  t.n_accept = first.n_accept + second.n_accept;
  t.divergent = second.divergent;
  t.log_sum_weight = log_sum_exp(first.log_sum_weight, second.log_sum_weight);
  if (t.divergent) return t;
  if (std::log(rng.uniform()) < second.log_sum_weight - t.log_sum_weight) {
    t.sample_theta = second.sample_theta;
    t.sample_grad = second.sample_grad;
    t.sample_logpost = second.sample_logpost;
  } else {
    t.sample_theta = first.sample_theta;
    t.sample_grad = first.sample_grad;
    t.sample_logpost = first.sample_logpost;
  }
  t.turned = uturn(t.right.theta, t.left.theta, t.right.r, t.left.r, inv_mass);
  return t;
}

struct NutsTransitionResult {
  double accept_stat = 0.0;
  int depth = 0;
  bool divergent = false;
};

inline NutsTransitionResult nuts_transition(const TargetDensity& target, const VectorXd& inv_mass,
                                            double eps, int max_depth, PhasePoint& z,
                                            RngStream& rng) {
  for (Index i = 0; i < z.r.size(); ++i) z.r[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = z.hamiltonian(inv_mass);

  NutsTree whole;
  whole.left = whole.right = z;
  whole.sample_theta = z.theta;
  whole.sample_grad = z.grad;
  whole.sample_logpost = z.logpost;
  whole.log_sum_weight = 0.0;

  NutsTransitionResult out;
  double sum_accept = 0.0;
  long n_accept = 0;
  int depth = 0;
  for (; depth < max_depth; ++depth) {
    const int direction = rng.uniform() < 0.5 ? -1 : 1;
    const PhasePoint& from = direction == 1 ? whole.right : whole.left;
    NutsTree sub = build_tree(target, inv_mass, eps, depth, direction, from, h0, rng);
    sum_accept += sub.sum_accept;
    n_accept += sub.n_accept;
    if (sub.divergent) {
      out.divergent = true;
      break;
    }
    // Progressive sampling biased toward the fresh subtree.
    const double accept_sub = std::exp(sub.log_sum_weight - whole.log_sum_weight);
    if (rng.uniform() < accept_sub) {
      whole.sample_theta = sub.sample_theta;
      whole.sample_grad = sub.sample_grad;
      whole.sample_logpost = sub.sample_logpost;
    }
    whole.log_sum_weight = log_sum_exp(whole.log_sum_weight, sub.log_sum_weight);
    if (direction == 1)
      whole.right = sub.right;
    else
      whole.left = sub.left;
    if (sub.turned ||
        uturn(whole.right.theta, whole.left.theta, whole.right.r, whole.left.r, inv_mass)) {
      ++depth;
      break;
    }
  }
  out.depth = depth;
  out.accept_stat = n_accept > 0 ? sum_accept / static_cast<double>(n_accept) : 0.0;

  z.theta = whole.sample_theta;
  z.grad = whole.sample_grad;
  z.logpost = whole.sample_logpost;
  return out;
}

inline double find_reasonable_epsilon(const TargetDensity& target, const VectorXd& inv_mass,
                                      const PhasePoint& start, RngStream& rng) {
  double eps = 1.0;
  PhasePoint z = start;
  for (Index i = 0; i < z.r.size(); ++i) z.r[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = z.hamiltonian(inv_mass);
  PhasePoint trial = z;
  bool ok = leapfrog_step(target, inv_mass, eps, trial);
  double ratio = ok ? std::exp(h0 - trial.hamiltonian(inv_mass)) : 0.0;
  const double dir = ratio > 0.5 ? 1.0 : -1.0;
  for (int it = 0; it < 60; ++it) {
    eps *= dir > 0 ? 2.0 : 0.5;
    trial = z;
    ok = leapfrog_step(target, inv_mass, eps, trial);
    ratio = ok ? std::exp(h0 - trial.hamiltonian(inv_mass)) : 0.0;
    if ((dir > 0 && ratio <= 0.5) || (dir < 0 && ratio > 0.5)) break;
    if (eps < 1e-10 || eps > 1e6) break;
  }
  return std::min(std::max(eps, 1e-10), 1e6);
}

// Nesterov dual averaging of the log step size.
struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  long m = 0;
  static constexpr double gamma = 0.05;
  static constexpr double t0 = 10.0;
  static constexpr double kappa = 0.75;

  void restart(double eps0) {
    mu = std::log(10.0 * eps0);
    log_eps = std::log(eps0);
    log_eps_bar = std::log(eps0);
    h_bar = 0.0;
    m = 0;
  }

  double update(double accept_stat, double target_accept) {
    ++m;
    const double md = static_cast<double>(m);
    h_bar = (1.0 - 1.0 / (md + t0)) * h_bar + (target_accept - accept_stat) / (md + t0);
    log_eps = mu - std::sqrt(md) / gamma * h_bar;
    const double w = std::pow(md, -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
    return std::exp(log_eps);
  }
};

struct NutsChainOutput {
  MatrixXd draws;
  ChainStats stats;
};

inline NutsChainOutput run_nuts_chain(const TargetDensity& target, const SamplerConfig& cfg,
                                      int chain_idx) {
  RngStream rng(cfg.seed, static_cast<std::uint64_t>(chain_idx));
  const Index d = target.dim;
  const long warmup = cfg.warmup();
  const long kept = cfg.kept_per_chain();

  PhasePoint z;
  z.theta = target.init;
  for (Index i = 0; i < d; ++i) z.theta[i] += cfg.init_jitter * rng.normal();
  z.r = VectorXd::Zero(d);
  {
    VectorXd grad;
    const double lp = target.eval(z.theta, &grad);
    if (!std::isfinite(lp) || !grad.allFinite()) {
      std::ostringstream os;
      os << "non-finite log posterior or gradient at the initial point of chain " << chain_idx
         << "; theta = [";
      for (Index i = 0; i < std::min<Index>(d, 12); ++i) os << (i ? ", " : "") << z.theta[i];
      if (d > 12) os << ", ...";
      os << "]";
      throw numerical_error(os.str());
    }
    z.logpost = lp;
    z.grad = grad;
  }

  VectorXd inv_mass = VectorXd::Ones(d);
  double eps = find_reasonable_epsilon(target, inv_mass, z, rng);
  DualAveraging da;
  da.restart(eps);

  const long window_begin = std::lround(0.5 * static_cast<double>(warmup));
  const long window_end = std::lround(0.9 * static_cast<double>(warmup));
  OnlineMomentsVec window_moments(d);

  NutsChainOutput out;
  out.draws.resize(kept, d);
  out.stats.tree_depth_hist.assign(static_cast<std::size_t>(cfg.max_tree_depth) + 1, 0);
  double sum_accept = 0.0;

  for (long m = 0; m < cfg.total_draws; ++m) {
    const NutsTransitionResult res =
        nuts_transition(target, inv_mass, eps, cfg.max_tree_depth, z, rng);
    if (m < warmup) {
      eps = da.update(res.accept_stat, cfg.target_accept);
      if (m >= window_begin && m < window_end) window_moments.add(z.theta);
      if (m + 1 == window_end && window_moments.count() >= 10) {
        const VectorXd var = window_moments.variance();
        const double nw = static_cast<double>(window_moments.count());
        inv_mass = (var.array() * (nw / (nw + 5.0)) + 1e-3 * (5.0 / (nw + 5.0)))
                       .max(1e-10)
                       .matrix();
        eps = find_reasonable_epsilon(target, inv_mass, z, rng);
        da.restart(eps);
      }
      if (m + 1 == warmup) eps = std::exp(da.log_eps_bar);
    } else {
      out.draws.row(m - warmup) = z.theta.transpose();
      if (res.divergent) ++out.stats.divergences;
      ++out.stats.tree_depth_hist[static_cast<std::size_t>(res.depth)];
      sum_accept += res.accept_stat;
    }
  }
  out.stats.step_size = eps;
  out.stats.mean_accept = kept > 0 ? sum_accept / static_cast<double>(kept) : 0.0;
  return out;
}

}  // namespace detail

inline PosteriorSamples nuts_sample(const TargetDensity& target, const SamplerConfig& cfg) {
  cfg.validate();
  require(target.dim >= 1 && target.init.size() == target.dim,
          "target dimension and initial point disagree");

  std::vector<std::future<detail::NutsChainOutput>> futs;
  for (int c = 0; c < cfg.chains; ++c)
    futs.push_back(std::async(std::launch::async,
                              [&target, &cfg, c]() { return detail::run_nuts_chain(target, cfg, c); }));

  PosteriorSamples s;
  s.packing = target.packing;
  s.algorithm = Algorithm::Nuts;
  s.total_draws_per_chain = cfg.total_draws;
  s.warmup_per_chain = cfg.warmup();
  s.seed = cfg.seed;
  const long kept = cfg.kept_per_chain();
  s.draws.resize(static_cast<Index>(cfg.chains) * kept, target.dim);
  for (int c = 0; c < cfg.chains; ++c) {
    detail::NutsChainOutput co = futs[static_cast<std::size_t>(c)].get();
    s.draws.block(static_cast<Index>(c) * kept, 0, kept, target.dim) = co.draws;
    s.chain_stats.push_back(std::move(co.stats));
  }
  const long divergences = s.total_divergences();
  const long post_total = static_cast<long>(cfg.chains) * kept;
  if (divergences * 4 > post_total)
    s.warnings.push_back("more than 25% of post-warmup transitions diverged (" +
                         std::to_string(divergences) + " of " + std::to_string(post_total) +
                         "); results are unreliable");
  s.validate();
  return s;
}

inline PosteriorSamples nuts_sample(const ModelSpec& spec, const SamplerConfig& cfg) {
  PosteriorSamples s = nuts_sample(target_from_model(spec), cfg);
  s.clamp_events = spec.clamp_events();
  return s;
}

}  // namespace bmmix

#endif  // BMMIX_SAMPLERS_NUTS_HPP
