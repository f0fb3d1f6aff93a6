#ifndef BMMIX_PREDICT_HPP
#define BMMIX_PREDICT_HPP

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "bmmix/gp.hpp"
#include "bmmix/mixtures/gbmm_d.hpp"
#include "bmmix/mixtures/gbmm_l.hpp"
#include "bmmix/mixtures/lbmm_gld.hpp"
#include "bmmix/mixtures/lbmm_gpd.hpp"
#include "bmmix/rng.hpp"
#include "bmmix/samplers/posterior_samples.hpp"

namespace bmmix {

struct PredictOptions {
  // Cap on posterior draws pushed through the predictive (thinned evenly).
  long max_draws = 4000;
  // GBMM+D: redraw omega ~ Dirichlet(alpha) per draw instead of using the
  // sampled omega.
  bool resample_global_weights = false;
  // Local variants: at a location that exactly matches a training point,
  // reuse that draw's sampled per-location weights rather than redrawing
  // from the Dirichlet hierarchy.
  bool use_sampled_local_weights = true;
};

namespace detail {

inline std::vector<Index> thin_indices(Index kept, long max_draws) {
  require(kept >= 1, "no posterior draws to predict from");
  require(max_draws >= 1, "max_draws must be positive");
  const Index stride = std::max<Index>(1, (kept + max_draws - 1) / max_draws);
  std::vector<Index> idx;
  for (Index j = 0; j < kept; j += stride) idx.push_back(j);
  return idx;
}

// Effective predictions (f_k, optionally + delta_k) for arbitrary
// locations, with errors naming the model and location that is missing.
inline MatrixXd model_matrix_at(const std::vector<ModelTable>& models,
                                const std::vector<std::string>& expected_names,
                                const std::vector<Location>& locs, bool use_corrections) {
  require(models.size() == expected_names.size(),
          "model table count does not match the fitted model set");
  const Index m = static_cast<Index>(locs.size());
  const Index p = static_cast<Index>(models.size());
  MatrixXd out(m, p);
  for (Index k = 0; k < p; ++k) {
    const ModelTable& t = models[static_cast<std::size_t>(k)];
    require(t.model_name == expected_names[static_cast<std::size_t>(k)],
            "model table order mismatch: expected " + expected_names[static_cast<std::size_t>(k)] +
                ", found " + t.model_name);
    if (use_corrections)
      require(t.corrections.has_value(),
              t.model_name + " has no corrections but use_corrections is on");
    for (Index i = 0; i < m; ++i) {
      const Location& loc = locs[static_cast<std::size_t>(i)];
      const auto it = t.predictions.find(loc);
      if (it == t.predictions.end())
        throw validation_error(t.model_name + " missing " + loc.str());
      double v = it->second;
      if (use_corrections) {
        const auto ic = t.corrections->find(loc);
        if (ic == t.corrections->end())
          throw validation_error(t.model_name + " missing correction at " + loc.str());
        v += ic->second;
      }
      out(i, k) = v;
    }
  }
  return out;
}

inline std::unordered_map<Location, Index, LocationHash> train_index(
    const std::vector<Location>& train_locs) {
  std::unordered_map<Location, Index, LocationHash> idx;
  for (std::size_t i = 0; i < train_locs.size(); ++i)
    idx.emplace(train_locs[i], static_cast<Index>(i));
  return idx;
}

inline VectorXd clamp_alpha_vec(const VectorXd& gamma) {
  VectorXd a(gamma.size());
  for (Index k = 0; k < gamma.size(); ++k)
    a[k] = std::min(std::max(std::exp(gamma[k]), alpha_clamp_lo), alpha_clamp_hi);
  return a;
}

// Per-draw local weights at the requested locations for the two local
// variants; shared by the predictive and the weight-field summary.
inline MatrixXd local_weights_for_draw(const LbmmGld& spec, const VectorXd& theta,
                                       const std::vector<Location>& locs,
                                       const std::vector<std::optional<Index>>& train_match,
                                       const MatrixXd& design_new, bool use_sampled,
                                       RngStream& rng) {
  const Index m = static_cast<Index>(locs.size());
  const Index p = spec.data().p();
  const LbmmGldValues v = spec.values(theta);
  MatrixXd omega(m, p);
  const MatrixXd gamma_new = design_new * v.beta;
  for (Index i = 0; i < m; ++i) {
    const auto& match = train_match[static_cast<std::size_t>(i)];
    if (use_sampled && match)
      omega.row(i) = v.omega.row(*match);
    else
      omega.row(i) = rng.dirichlet(clamp_alpha_vec(gamma_new.row(i).transpose())).transpose();
  }
  return omega;
}

inline MatrixXd local_weights_for_draw(const LbmmGpd& spec, const VectorXd& theta,
                                       const std::vector<Location>& locs,
                                       const std::vector<std::optional<Index>>& train_match,
                                       bool use_sampled, RngStream& rng) {
  const Index m = static_cast<Index>(locs.size());
  const Index p = spec.data().p();
  const LbmmGpdValues v = spec.values(theta);
  MatrixXd omega(m, p);

  std::vector<Index> free_rows;
  std::vector<Location> free_locs;
  for (Index i = 0; i < m; ++i) {
    const auto& match = train_match[static_cast<std::size_t>(i)];
    if (use_sampled && match)
      omega.row(i) = v.omega.row(*match);
    else {
      free_rows.push_back(i);
      free_locs.push_back(locs[static_cast<std::size_t>(i)]);
    }
  }
  if (!free_rows.empty()) {
    const KernelParams kp{v.eta, v.rho_z, v.rho_n};
    MatrixXd gamma_new(static_cast<Index>(free_rows.size()), p);
    for (Index k = 0; k < p; ++k) {
      const GpConditional cond = gp_conditional(spec.data().locations, v.gamma.col(k), free_locs,
                                                v.gamma_inf[k], kp, k);
      for (Index r = 0; r < gamma_new.rows(); ++r) {
        const double sd = std::sqrt(std::max(0.0, cond.cov(r, r)));
        gamma_new(r, k) = cond.mean[r] + sd * rng.normal();
      }
    }
    for (Index r = 0; r < gamma_new.rows(); ++r)
      omega.row(free_rows[static_cast<std::size_t>(r)]) =
          rng.dirichlet(clamp_alpha_vec(gamma_new.row(r).transpose())).transpose();
  }
  return omega;
}

}  // namespace detail

// Posterior predictive draws of y at the requested locations; one output
// row per retained posterior draw.
inline MatrixXd posterior_predictive(const ModelSpec& spec, const PosteriorSamples& samples,
                                     const std::vector<ModelTable>& models,
                                     const std::vector<Location>& new_locs,
                                     const RngStream& rng_base, PredictOptions opt = {}) {
  samples.validate();
  require(!new_locs.empty(), "no prediction locations given");
  require(samples.draws.cols() == spec.dim(), "samples do not match the model dimension");
  const MatrixXd fstar =
      detail::model_matrix_at(models, spec.data().model_names, new_locs, spec.use_corrections());
  const std::vector<Index> idx = detail::thin_indices(samples.draws.rows(), opt.max_draws);
  const Index m = static_cast<Index>(new_locs.size());
  MatrixXd out(static_cast<Index>(idx.size()), m);

  const auto* gl = dynamic_cast<const GbmmL*>(&spec);
  const auto* gd = dynamic_cast<const GbmmD*>(&spec);
  const auto* gld = dynamic_cast<const LbmmGld*>(&spec);
  const auto* gpd = dynamic_cast<const LbmmGpd*>(&spec);
  require(gl || gd || gld || gpd, "unsupported model variant for posterior prediction");

  std::vector<std::optional<Index>> train_match(new_locs.size());
  if (gld || gpd) {
    const auto tidx = detail::train_index(spec.data().locations);
    for (std::size_t i = 0; i < new_locs.size(); ++i) {
      const auto it = tidx.find(new_locs[i]);
      if (it != tidx.end()) train_match[i] = it->second;
    }
  }
  MatrixXd design_new;
  if (gld) design_new = gld->scaler().design(new_locs);

  for (std::size_t j = 0; j < idx.size(); ++j) {
    RngStream rng = rng_base.split(static_cast<std::uint64_t>(j));
    const VectorXd theta = samples.draws.row(idx[j]).transpose();
    VectorXd mu(m);
    double sigma = 0.0;
    if (gl) {
      const GbmmLValues v = gl->values(theta);
      sigma = v.sigma;
      mu = fstar * v.omega;
    } else if (gd) {
      const GbmmDValues v = gd->values(theta);
      sigma = v.sigma;
      const VectorXd omega = opt.resample_global_weights ? rng.dirichlet(v.alpha) : v.omega;
      mu = fstar * omega;
    } else if (gld) {
      const MatrixXd omega = detail::local_weights_for_draw(
          *gld, theta, new_locs, train_match, design_new, opt.use_sampled_local_weights, rng);
      sigma = gld->values(theta).sigma;
      mu = (omega.array() * fstar.array()).rowwise().sum();
    } else {
      const MatrixXd omega = detail::local_weights_for_draw(*gpd, theta, new_locs, train_match,
                                                            opt.use_sampled_local_weights, rng);
      sigma = gpd->values(theta).sigma;
      mu = (omega.array() * fstar.array()).rowwise().sum();
    }
    for (Index i = 0; i < m; ++i) out(static_cast<Index>(j), i) = mu[i] + sigma * rng.normal();
  }
  return out;
}

inline double rms(const VectorXd& pred, const VectorXd& obs) {
  require(pred.size() == obs.size(), "rms: length mismatch (" + std::to_string(pred.size()) +
                                         " vs " + std::to_string(obs.size()) + ")");
  require(pred.size() >= 1, "rms: empty input");
  return std::sqrt((pred - obs).squaredNorm() / static_cast<double>(pred.size()));
}

namespace detail {

// Linear-interpolation empirical quantile on a pre-sorted vector.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - std::floor(h);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace detail

struct ECPCurve {
  VectorXd levels;
  VectorXd coverage;
  Index n_test = 0;
};

// Empirical coverage of equal-tailed predictive intervals.
inline ECPCurve ecp(const MatrixXd& draws, const VectorXd& obs, const VectorXd& levels) {
  const Index n_draws = draws.rows();
  const Index m = draws.cols();
  require(m == obs.size(), "ecp: draws and observations cover different location counts");
  require(n_draws >= 100, "ecp needs at least 100 predictive draws per location");
  for (Index l = 0; l < levels.size(); ++l) {
    require(levels[l] > 0.0 && levels[l] < 1.0, "ecp: levels must lie in (0, 1)");
    const double tail = 0.5 * (1.0 - levels[l]);
    if (static_cast<double>(n_draws) * tail < 1.0)
      throw validation_error("ecp: level " + std::to_string(levels[l]) +
                             " needs more than " + std::to_string(n_draws) +
                             " draws to resolve its tail quantiles");
  }
  ECPCurve out;
  out.levels = levels;
  out.coverage = VectorXd::Zero(levels.size());
  out.n_test = m;
  std::vector<double> col(static_cast<std::size_t>(n_draws));
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n_draws; ++j) col[static_cast<std::size_t>(j)] = draws(j, i);
    std::sort(col.begin(), col.end());
    for (Index l = 0; l < levels.size(); ++l) {
      const double tail = 0.5 * (1.0 - levels[l]);
      const double lo = detail::sorted_quantile(col, tail);
      const double hi = detail::sorted_quantile(col, 1.0 - tail);
      if (obs[i] >= lo && obs[i] <= hi) out.coverage[l] += 1.0;
    }
  }
  out.coverage /= static_cast<double>(m);
  return out;
}

struct PredictiveSummary {
  std::vector<Location> locations;
  VectorXd mean;
  VectorXd sd;
  VectorXd quantile_levels;
  MatrixXd quantiles;  // locations x levels
};

inline PredictiveSummary summarize_predictive(const MatrixXd& draws,
                                              const std::vector<Location>& locs,
                                              VectorXd quantile_levels = VectorXd()) {
  if (quantile_levels.size() == 0) {
    quantile_levels.resize(5);
    quantile_levels << 0.05, 0.16, 0.50, 0.84, 0.95;
  }
  const Index m = draws.cols();
  require(static_cast<Index>(locs.size()) == m, "summary: draws and locations disagree");
  require(draws.rows() >= 2, "summary needs at least two draws");
  PredictiveSummary s;
  s.locations = locs;
  s.mean.resize(m);
  s.sd.resize(m);
  s.quantile_levels = quantile_levels;
  s.quantiles.resize(m, quantile_levels.size());
  std::vector<double> col(static_cast<std::size_t>(draws.rows()));
  for (Index i = 0; i < m; ++i) {
    s.mean[i] = draws.col(i).mean();
    s.sd[i] = std::sqrt((draws.col(i).array() - s.mean[i]).square().sum() /
                        static_cast<double>(draws.rows() - 1));
    for (Index j = 0; j < draws.rows(); ++j) col[static_cast<std::size_t>(j)] = draws(j, i);
    std::sort(col.begin(), col.end());
    for (Index l = 0; l < quantile_levels.size(); ++l)
      s.quantiles(i, l) = detail::sorted_quantile(col, quantile_levels[l]);
  }
  return s;
}

struct WeightField {
  std::vector<Location> grid;
  std::vector<std::string> model_names;
  MatrixXd mean;  // grid x p
  MatrixXd sd;    // grid x p
  std::string note;
};

// Posterior mean/sd of the model weights over a grid of locations, using
// the same hierarchy propagation as the predictive.
inline WeightField weight_field(const ModelSpec& spec, const PosteriorSamples& samples,
                                const std::vector<Location>& grid, const RngStream& rng_base,
                                PredictOptions opt = {}) {
  samples.validate();
  require(!grid.empty(), "weight field needs a non-empty grid");
  require(samples.draws.cols() == spec.dim(), "samples do not match the model dimension");
  const Index m = static_cast<Index>(grid.size());
  const Index p = spec.data().p();
  const std::vector<Index> idx = detail::thin_indices(samples.draws.rows(), opt.max_draws);

  WeightField f;
  f.grid = grid;
  f.model_names = spec.data().model_names;
  MatrixXd sum = MatrixXd::Zero(m, p), sumsq = MatrixXd::Zero(m, p);

  const auto* gl = dynamic_cast<const GbmmL*>(&spec);
  const auto* gd = dynamic_cast<const GbmmD*>(&spec);
  const auto* gld = dynamic_cast<const LbmmGld*>(&spec);
  const auto* gpd = dynamic_cast<const LbmmGpd*>(&spec);
  require(gl || gd || gld || gpd, "unsupported model variant for weight fields");

  std::vector<std::optional<Index>> train_match(grid.size());
  if (gld || gpd) {
    const auto tidx = detail::train_index(spec.data().locations);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto it = tidx.find(grid[i]);
      if (it != tidx.end()) train_match[i] = it->second;
    }
  }
  MatrixXd design_new;
  if (gld) design_new = gld->scaler().design(grid);

  for (std::size_t j = 0; j < idx.size(); ++j) {
    RngStream rng = rng_base.split(static_cast<std::uint64_t>(j));
    const VectorXd theta = samples.draws.row(idx[j]).transpose();
    MatrixXd omega;
    if (gl) {
      omega = gl->values(theta).omega.transpose().replicate(m, 1);
    } else if (gd) {
      const GbmmDValues v = gd->values(theta);
      const VectorXd w = opt.resample_global_weights ? rng.dirichlet(v.alpha) : v.omega;
      omega = w.transpose().replicate(m, 1);
    } else if (gld) {
      omega = detail::local_weights_for_draw(*gld, theta, grid, train_match, design_new,
                                             opt.use_sampled_local_weights, rng);
    } else {
      omega = detail::local_weights_for_draw(*gpd, theta, grid, train_match,
                                             opt.use_sampled_local_weights, rng);
    }
    sum += omega;
    sumsq += omega.array().square().matrix();
  }
  const double nd = static_cast<double>(idx.size());
  f.mean = sum / nd;
  f.sd = ((sumsq / nd - f.mean.array().square().matrix()).array().max(0.0)).sqrt().matrix();
  if (gl)
    f.note = "weights are global and unnormalized (independent uniform priors); "
             "field is constant over the grid";
  else if (gd)
    f.note = "weights are global; field is constant over the grid";
  return f;
}

}  // namespace bmmix

#endif  // BMMIX_PREDICT_HPP
