#ifndef BMMIX_MIXTURES_GBMM_L_HPP
#define BMMIX_MIXTURES_GBMM_L_HPP

#include <memory>

#include "bmmix/model_spec.hpp"
#include "bmmix/simplex.hpp"

namespace bmmix {

// Global mixing with independent logit-transformed weights. The weights are
// not tied to the simplex while sampling; project_simplex is available for
// reporting a normalized version on request.
struct GbmmLValues {
  VectorXd omega;  // componentwise in (0,1)
  double sigma = 0.0;
};

class GbmmL final : public ModelSpec {
 public:
  GbmmL(AlignedDataset data, PriorConfig priors, bool use_corrections)
      : ModelSpec(std::move(data), std::move(priors), use_corrections) {
    require(priors_.omega.family == DistFamily::Uniform && priors_.omega.p1 == 0.0 &&
                priors_.omega.p2 == 1.0,
            "gbmm_l requires Uniform(0,1) weight priors");
    packing_.add("omega", BlockRole::WeightsZ, BlockTransform::Logit, data_.p());
    packing_.add("sigma", BlockRole::Sigma, BlockTransform::Log, 1);
    init_ = VectorXd::Zero(packing_.dim());
    init_[packing_.block("sigma").offset] = std::log(0.5);
  }

  std::string variant() const override { return "gbmm_l"; }

  GbmmLValues values(const VectorXd& theta) const {
    check_theta(theta);
    GbmmLValues v;
    v.omega = VectorXd(data_.p());
    for (Index k = 0; k < data_.p(); ++k) v.omega[k] = logistic(theta[k]);
    v.sigma = std::exp(theta[data_.p()]);
    return v;
  }

  double log_likelihood(const VectorXd& theta) const override {
    const GbmmLValues v = values(theta);
    const VectorXd r = data_.y - feff_ * v.omega;
    const double n = static_cast<double>(data_.n());
    return -0.5 * n * log_2pi - n * std::log(v.sigma) -
           r.squaredNorm() / (2.0 * v.sigma * v.sigma);
  }

 protected:
  double eval(const VectorXd& theta, VectorXd* grad) const override {
    const Index p = data_.p();
    const Index n = data_.n();
    VectorXd omega(p);
    for (Index k = 0; k < p; ++k) omega[k] = logistic(theta[k]);
    const double sigma = std::exp(theta[p]);
    const double s2 = sigma * sigma;
    const VectorXd r = data_.y - feff_ * omega;
    const double ssr = r.squaredNorm();

    double lp = -0.5 * n * log_2pi - n * std::log(sigma) - ssr / (2.0 * s2);
    // Uniform(0,1) weight priors contribute only the logit jacobian,
    // log w + log(1-w), written in a form that stays finite for large |theta|.
    for (Index k = 0; k < p; ++k) lp -= log1p_exp(-theta[k]) + log1p_exp(theta[k]);
    double gsig = 0.0;
    lp += gamma_log_prior_logscale(priors_.sigma, theta[p], sigma, grad ? &gsig : nullptr);

    if (grad) {
      const VectorXd g_omega = feff_.transpose() * r / s2;
      for (Index k = 0; k < p; ++k)
        (*grad)[k] = g_omega[k] * omega[k] * (1.0 - omega[k]) + (1.0 - 2.0 * omega[k]);
      (*grad)[p] = -static_cast<double>(n) + ssr / s2 + gsig;
    }
    return lp;
  }
};

inline std::unique_ptr<GbmmL> build_gbmm_l(AlignedDataset data, PriorConfig priors = {},
                                           bool use_corrections = false) {
  return std::make_unique<GbmmL>(std::move(data), std::move(priors), use_corrections);
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_GBMM_L_HPP
