#ifndef BMMIX_MIXTURES_BUILD_HPP
#define BMMIX_MIXTURES_BUILD_HPP

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "bmmix/mixtures/gbmm_d.hpp"
#include "bmmix/mixtures/gbmm_l.hpp"
#include "bmmix/mixtures/lbmm_gld.hpp"
#include "bmmix/mixtures/lbmm_gpd.hpp"

namespace bmmix {

inline bool is_mixture_variant(const std::string& v) {
  return v == "gbmm-l" || v == "gbmm-d" || v == "lbmm-gld" || v == "lbmm-gpd";
}

inline bool is_bma_variant(const std::string& v) {
  return v == "bma-ex" || v == "bma-mc" || v == "bma-laplace";
}

// Constructs a mixture ModelSpec from its CLI-facing variant name. The
// options object carries variant-specific switches: "intercept" for
// lbmm-gld, "kernel_init" {eta, rho_z, rho_n} for lbmm-gpd.
inline std::unique_ptr<ModelSpec> build_variant(const std::string& variant, AlignedDataset data,
                                                PriorConfig priors = {},
                                                bool use_corrections = false,
                                                const nlohmann::json& options = nlohmann::json::object()) {
  if (variant == "gbmm-l")
    return build_gbmm_l(std::move(data), std::move(priors), use_corrections);
  if (variant == "gbmm-d")
    return build_gbmm_d(std::move(data), std::move(priors), use_corrections);
  if (variant == "lbmm-gld") {
    GldOptions opt;
    if (options.contains("intercept")) opt.intercept = options.at("intercept").get<bool>();
    return build_lbmm_gld(std::move(data), std::move(priors), use_corrections, opt);
  }
  if (variant == "lbmm-gpd") {
    KernelInit init;
    if (options.contains("kernel_init")) {
      const nlohmann::json& k = options.at("kernel_init");
      if (k.contains("eta")) init.eta = k.at("eta").get<double>();
      if (k.contains("rho_z")) init.rho_z = k.at("rho_z").get<double>();
      if (k.contains("rho_n")) init.rho_n = k.at("rho_n").get<double>();
    }
    return build_lbmm_gpd(std::move(data), std::move(priors), use_corrections, init);
  }
  throw validation_error("unknown mixture variant '" + variant +
                         "' (expected gbmm-l, gbmm-d, lbmm-gld, lbmm-gpd)");
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_BUILD_HPP
