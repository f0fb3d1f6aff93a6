#ifndef BMMIX_SAMPLERS_SAMPLER_CONFIG_HPP
#define BMMIX_SAMPLERS_SAMPLER_CONFIG_HPP

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "bmmix/common.hpp"

namespace bmmix {

enum class Algorithm { Nuts, Mh };

inline const char* to_string(Algorithm a) { return a == Algorithm::Nuts ? "nuts" : "mh"; }

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "nuts") return Algorithm::Nuts;
  if (s == "mh") return Algorithm::Mh;
  throw validation_error("unknown sampler algorithm '" + s + "' (expected nuts or mh)");
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::Nuts;
  long total_draws = 50000;  // per chain, warmup included
  double burn_in = 0.5;      // fraction of total_draws discarded and used for adaptation
  int chains = 4;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double mh_proposal_scale = 0.1;
  double init_jitter = 0.1;
  std::uint64_t seed = 0;

  long warmup() const { return std::lround(burn_in * static_cast<double>(total_draws)); }
  long kept_per_chain() const { return total_draws - warmup(); }

  void validate() const {
    require(total_draws >= 2, "total_draws must be at least 2");
    require(burn_in > 0.0 && burn_in < 1.0, "burn_in fraction must lie in (0, 1)");
    require(chains >= 1, "need at least one chain");
    require(target_accept > 0.0 && target_accept < 1.0, "target_accept must lie in (0, 1)");
    require(max_tree_depth >= 1 && max_tree_depth <= 14, "max_tree_depth must lie in [1, 14]");
    require(mh_proposal_scale > 0.0, "mh_proposal_scale must be positive");
    require(init_jitter >= 0.0, "init_jitter must be non-negative");
    require(kept_per_chain() >= 1, "no draws kept after burn-in");
  }

  // Small configuration meant for laptop-scale runs and the test suite.
  static SamplerConfig desk_default() {
    SamplerConfig c;
    c.total_draws = 2000;
    c.chains = 4;
    return c;
  }

  nlohmann::json to_json() const {
    return {{"algorithm", to_string(algorithm)},
            {"total_draws", total_draws},
            {"burn_in", burn_in},
            {"chains", chains},
            {"target_accept", target_accept},
            {"max_tree_depth", max_tree_depth},
            {"mh_proposal_scale", mh_proposal_scale},
            {"init_jitter", init_jitter},
            {"seed", seed}};
  }

  static SamplerConfig from_json(const nlohmann::json& j) {
    SamplerConfig c;
    if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j.at("algorithm"));
    if (j.contains("total_draws")) c.total_draws = j.at("total_draws").get<long>();
    if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<double>();
    if (j.contains("chains")) c.chains = j.at("chains").get<int>();
    if (j.contains("target_accept")) c.target_accept = j.at("target_accept").get<double>();
    if (j.contains("max_tree_depth")) c.max_tree_depth = j.at("max_tree_depth").get<int>();
    if (j.contains("mh_proposal_scale"))
      c.mh_proposal_scale = j.at("mh_proposal_scale").get<double>();
    if (j.contains("init_jitter")) c.init_jitter = j.at("init_jitter").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  }
};

}  // namespace bmmix

#endif  // BMMIX_SAMPLERS_SAMPLER_CONFIG_HPP
