#ifndef BMMIX_SAMPLERS_POSTERIOR_SAMPLES_HPP
#define BMMIX_SAMPLERS_POSTERIOR_SAMPLES_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bmmix/model_spec.hpp"
#include "bmmix/packing.hpp"
#include "bmmix/samplers/sampler_config.hpp"

namespace bmmix {

// Minimal interface the samplers need: a log density with optional gradient
// over an unconstrained vector, plus a packing for block structure and
// labeling. Wraps either a ModelSpec or a free-standing function, so the
// samplers can be exercised on analytic targets.
struct TargetDensity {
  // Returns log density; when grad is non-null it must be filled (resized
  // by the callee) with the gradient.
  std::function<double(const VectorXd&, VectorXd*)> eval;
  Index dim = 0;
  VectorXd init;
  ThetaPacking packing;
};

inline TargetDensity target_from_model(const ModelSpec& spec) {
  TargetDensity t;
  t.dim = spec.dim();
  t.init = spec.init();
  t.packing = spec.packing();
  t.eval = [&spec](const VectorXd& theta, VectorXd* grad) {
    if (!grad) return spec.log_posterior(theta);
    return spec.log_posterior_grad(theta, *grad);
  };
  return t;
}

inline TargetDensity target_from_function(
    std::function<double(const VectorXd&, VectorXd*)> eval, Index dim,
    const std::string& block_name = "theta") {
  TargetDensity t;
  t.eval = std::move(eval);
  t.dim = dim;
  t.init = VectorXd::Zero(dim);
  t.packing.add(block_name, BlockRole::GammaLatents, BlockTransform::Identity, dim);
  return t;
}

struct ChainStats {
  double step_size = 0.0;
  long divergences = 0;           // post-warmup
  double mean_accept = 0.0;       // post-warmup acceptance statistic
  std::vector<long> tree_depth_hist;  // post-warmup, index = depth (NUTS only)
};

struct PosteriorSamples {
  MatrixXd draws;  // (chains * kept_per_chain) x d, chains stacked in order
  ThetaPacking packing;
  Algorithm algorithm = Algorithm::Nuts;
  long total_draws_per_chain = 0;
  long warmup_per_chain = 0;
  std::vector<ChainStats> chain_stats;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;
  std::uint64_t clamp_events = 0;

  int chains() const { return static_cast<int>(chain_stats.size()); }
  Index kept_per_chain() const {
    return chains() == 0 ? 0 : draws.rows() / static_cast<Index>(chains());
  }
  Eigen::Block<const MatrixXd> chain(int c) const {
    const Index k = kept_per_chain();
    return draws.block(static_cast<Index>(c) * k, 0, k, draws.cols());
  }
  long total_divergences() const {
    long s = 0;
    for (const ChainStats& cs : chain_stats) s += cs.divergences;
    return s;
  }

  void validate() const {
    require(chains() >= 1, "posterior samples need at least one chain");
    require(draws.rows() == static_cast<Index>(chains()) * kept_per_chain() && draws.rows() > 0,
            "draw matrix rows inconsistent with chain count");
    require(draws.allFinite(), "posterior draws contain non-finite values");
  }
};

}  // namespace bmmix

#endif  // BMMIX_SAMPLERS_POSTERIOR_SAMPLES_HPP
