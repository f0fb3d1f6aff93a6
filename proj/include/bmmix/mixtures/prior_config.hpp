#ifndef BMMIX_MIXTURES_PRIOR_CONFIG_HPP
#define BMMIX_MIXTURES_PRIOR_CONFIG_HPP

#include <nlohmann/json.hpp>

#include "bmmix/distributions.hpp"

namespace bmmix {

// Priors shared by the mixing variants. Defaults follow the nuclear case
// study configuration; any entry can be overridden from the run config.
struct PriorConfig {
  DistSpec sigma = DistSpec::gamma(5.0, 10.0);
  DistSpec omega = DistSpec::uniform(0.0, 1.0);      // GBMM+L, iid per weight
  DistSpec alpha = DistSpec::half_normal(2.0);       // GBMM+D concentrations
  DistSpec beta = DistSpec::normal(0.0, 1.0);        // GLD regression coefficients
  DistSpec gamma_inf = DistSpec::normal(0.0, 1.0);   // GPD long-range level
  DistSpec eta = DistSpec::gamma(10.0, 2.0);         // GP marginal variance
  DistSpec rho_z = DistSpec::gamma(5.0, 2.0);        // GP length scales
  DistSpec rho_n = DistSpec::gamma(5.0, 2.0);
};

inline DistSpec dist_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "normal") return DistSpec::normal(j.at("mu"), j.at("sd"));
  if (family == "gamma") return DistSpec::gamma(j.at("shape"), j.at("rate"));
  if (family == "half_normal") return DistSpec::half_normal(j.at("sd"));
  if (family == "uniform") return DistSpec::uniform(j.at("lo"), j.at("hi"));
  throw validation_error("unknown prior family '" + family + "'");
}

inline nlohmann::json dist_to_json(const DistSpec& d) {
  switch (d.family) {
    case DistFamily::Normal: return {{"family", "normal"}, {"mu", d.p1}, {"sd", d.p2}};
    case DistFamily::Gamma: return {{"family", "gamma"}, {"shape", d.p1}, {"rate", d.p2}};
    case DistFamily::HalfNormal: return {{"family", "half_normal"}, {"sd", d.p1}};
    case DistFamily::Uniform: return {{"family", "uniform"}, {"lo", d.p1}, {"hi", d.p2}};
    case DistFamily::Dirichlet: break;
  }
  throw validation_error("dist_to_json: unsupported family");
}

inline void apply_prior_overrides(PriorConfig& cfg, const nlohmann::json& j) {
  auto set = [&](const char* key, DistSpec& slot) {
    if (j.contains(key)) slot = dist_from_json(j.at(key));
  };
  set("sigma", cfg.sigma);
  set("omega", cfg.omega);
  set("alpha", cfg.alpha);
  set("beta", cfg.beta);
  set("gamma_inf", cfg.gamma_inf);
  set("eta", cfg.eta);
  set("rho_z", cfg.rho_z);
  set("rho_n", cfg.rho_n);
}

inline nlohmann::json priors_to_json(const PriorConfig& cfg) {
  return {{"sigma", dist_to_json(cfg.sigma)},       {"omega", dist_to_json(cfg.omega)},
          {"alpha", dist_to_json(cfg.alpha)},       {"beta", dist_to_json(cfg.beta)},
          {"gamma_inf", dist_to_json(cfg.gamma_inf)}, {"eta", dist_to_json(cfg.eta)},
          {"rho_z", dist_to_json(cfg.rho_z)},       {"rho_n", dist_to_json(cfg.rho_n)}};
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_PRIOR_CONFIG_HPP
