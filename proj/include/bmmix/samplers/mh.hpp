#ifndef BMMIX_SAMPLERS_MH_HPP
#define BMMIX_SAMPLERS_MH_HPP

#include <cmath>
#include <future>
#include <vector>

#include "bmmix/rng.hpp"
#include "bmmix/samplers/nuts.hpp"
#include "bmmix/samplers/posterior_samples.hpp"
#include "bmmix/samplers/sampler_config.hpp"

namespace bmmix {

namespace detail {

struct MhChainOutput {
  MatrixXd draws;
  ChainStats stats;
};

inline MhChainOutput run_mh_chain(const TargetDensity& target, const SamplerConfig& cfg,
                                  int chain_idx) {
  RngStream rng(cfg.seed, static_cast<std::uint64_t>(chain_idx));
  const Index d = target.dim;
  const long warmup = cfg.warmup();
  const long kept = cfg.kept_per_chain();
  const std::vector<ThetaBlock>& blocks = target.packing.blocks();
  require(!blocks.empty(), "mh sampling needs at least one parameter block");

  VectorXd theta = target.init;
  for (Index i = 0; i < d; ++i) theta[i] += cfg.init_jitter * rng.normal();
  double lp = target.eval(theta, nullptr);
  require(std::isfinite(lp), "non-finite log posterior at the Metropolis-Hastings start");

  std::vector<double> scale(blocks.size(), cfg.mh_proposal_scale);
  std::vector<long> tranche_acc(blocks.size(), 0), tranche_tot(blocks.size(), 0);
  std::vector<long> adapt_step(blocks.size(), 0);
  constexpr long tranche = 50;

  long consecutive_rejects = 0;
  long post_accepts = 0, post_proposals = 0;

  MhChainOutput out;
  out.draws.resize(kept, d);

  for (long m = 0; m < cfg.total_draws; ++m) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      VectorXd prop = theta;
      for (Index i = 0; i < blocks[b].length; ++i)
        prop[blocks[b].offset + i] += scale[b] * rng.normal();
      const double lp_prop = prop.allFinite() ? target.eval(prop, nullptr) : neg_inf;
      const bool accept = std::isfinite(lp_prop) && std::log(rng.uniform()) < lp_prop - lp;
      if (accept) {
        theta = std::move(prop);
        lp = lp_prop;
        consecutive_rejects = 0;
      } else {
        ++consecutive_rejects;
        if (consecutive_rejects >= 10000)
          throw numerical_error(
              "Metropolis-Hastings rejected 10000 consecutive proposals; the chain is stuck "
              "(try a smaller mh_proposal_scale or the NUTS sampler)");
      }
      if (m < warmup) {
        tranche_acc[b] += accept ? 1 : 0;
        ++tranche_tot[b];
        if (tranche_tot[b] == tranche) {
          const double acc = static_cast<double>(tranche_acc[b]) / tranche;
          ++adapt_step[b];
          scale[b] *= std::exp((acc - 0.234) / std::sqrt(static_cast<double>(adapt_step[b])));
          scale[b] = std::min(std::max(scale[b], 1e-8), 1e4);
          tranche_acc[b] = 0;
          tranche_tot[b] = 0;
        }
      } else {
        post_accepts += accept ? 1 : 0;
        ++post_proposals;
      }
    }
    if (m >= warmup) out.draws.row(m - warmup) = theta.transpose();
  }
  double mean_scale = 0.0;
  for (double s : scale) mean_scale += s;
  out.stats.step_size = mean_scale / static_cast<double>(scale.size());
  out.stats.mean_accept =
      post_proposals > 0 ? static_cast<double>(post_accepts) / post_proposals : 0.0;
  return out;
}

}  // namespace detail

// Block-wise Gaussian random-walk Metropolis-Hastings: one sweep over the
// packing blocks per draw, per-block proposal scales adapted toward 0.234
// acceptance during burn-in.
inline PosteriorSamples mh_sample(const TargetDensity& target, const SamplerConfig& cfg) {
  cfg.validate();
  require(target.dim >= 1 && target.init.size() == target.dim,
          "target dimension and initial point disagree");

  std::vector<std::future<detail::MhChainOutput>> futs;
  for (int c = 0; c < cfg.chains; ++c)
    futs.push_back(std::async(std::launch::async,
                              [&target, &cfg, c]() { return detail::run_mh_chain(target, cfg, c); }));

  PosteriorSamples s;
  s.packing = target.packing;
  s.algorithm = Algorithm::Mh;
  s.total_draws_per_chain = cfg.total_draws;
  s.warmup_per_chain = cfg.warmup();
  s.seed = cfg.seed;
  const long kept = cfg.kept_per_chain();
  s.draws.resize(static_cast<Index>(cfg.chains) * kept, target.dim);
  for (int c = 0; c < cfg.chains; ++c) {
    detail::MhChainOutput co = futs[static_cast<std::size_t>(c)].get();
    s.draws.block(static_cast<Index>(c) * kept, 0, kept, target.dim) = co.draws;
    s.chain_stats.push_back(std::move(co.stats));
  }
  s.validate();
  return s;
}

inline PosteriorSamples mh_sample(const ModelSpec& spec, const SamplerConfig& cfg) {
  PosteriorSamples s = mh_sample(target_from_model(spec), cfg);
  s.clamp_events = spec.clamp_events();
  return s;
}

// Dispatch helper used by the CLI.
inline PosteriorSamples sample_posterior(const ModelSpec& spec, const SamplerConfig& cfg) {
  return cfg.algorithm == Algorithm::Nuts ? nuts_sample(spec, cfg) : mh_sample(spec, cfg);
}

}  // namespace bmmix

#endif  // BMMIX_SAMPLERS_MH_HPP
