#ifndef BMMIX_MIXTURES_GBMM_D_HPP
#define BMMIX_MIXTURES_GBMM_D_HPP

#include <memory>

#include "bmmix/distributions.hpp"
#include "bmmix/model_spec.hpp"
#include "bmmix/simplex.hpp"

namespace bmmix {

// Global mixing on the simplex: stick-breaking weights with a Dirichlet
// prior whose concentrations are themselves sampled on the log scale.
struct GbmmDValues {
  VectorXd omega;  // on the simplex
  VectorXd alpha;
  double sigma = 0.0;
};

class GbmmD final : public ModelSpec {
 public:
  GbmmD(AlignedDataset data, PriorConfig priors, bool use_corrections)
      : ModelSpec(std::move(data), std::move(priors), use_corrections) {
    require(priors_.alpha.family == DistFamily::HalfNormal,
            "gbmm_d requires a half-normal prior on the concentrations");
    packing_.add("z", BlockRole::WeightsZ, BlockTransform::StickBreaking, data_.p() - 1);
    packing_.add("alpha", BlockRole::Alpha, BlockTransform::Log, data_.p());
    packing_.add("sigma", BlockRole::Sigma, BlockTransform::Log, 1);
    init_ = VectorXd::Zero(packing_.dim());
    init_[packing_.block("sigma").offset] = std::log(0.5);
  }

  std::string variant() const override { return "gbmm_d"; }

  GbmmDValues values(const VectorXd& theta) const {
    check_theta(theta);
    const Index p = data_.p();
    GbmmDValues v;
    v.omega = stick_breaking_forward(theta.head(p - 1)).omega;
    v.alpha = VectorXd(p);
    for (Index k = 0; k < p; ++k) v.alpha[k] = clamp_alpha(std::exp(theta[p - 1 + k]));
    v.sigma = std::exp(theta[2 * p - 1]);
    return v;
  }

  double log_likelihood(const VectorXd& theta) const override {
    const GbmmDValues v = values(theta);
    const VectorXd r = data_.y - feff_ * v.omega;
    const double n = static_cast<double>(data_.n());
    return -0.5 * n * log_2pi - n * std::log(v.sigma) -
           r.squaredNorm() / (2.0 * v.sigma * v.sigma);
  }

 protected:
  double eval(const VectorXd& theta, VectorXd* grad) const override {
    const Index p = data_.p();
    const Index n = data_.n();
    const StickBreaking sb = stick_breaking_forward(theta.head(p - 1));
    VectorXd alpha(p);
    std::vector<bool> clamped(static_cast<std::size_t>(p), false);
    for (Index k = 0; k < p; ++k) {
      bool c = false;
      alpha[k] = clamp_alpha(std::exp(theta[p - 1 + k]), &c);
      clamped[static_cast<std::size_t>(k)] = c;
    }
    const double sigma = std::exp(theta[2 * p - 1]);
    const double s2 = sigma * sigma;
    const VectorXd r = data_.y - feff_ * sb.omega;
    const double ssr = r.squaredNorm();

    double lp = -0.5 * n * log_2pi - n * std::log(sigma) - ssr / (2.0 * s2);
    lp += dirichlet_logpdf_from_log(alpha, sb.log_omega);
    lp += sb.log_jac;
    for (Index k = 0; k < p; ++k)
      lp += logpdf(priors_.alpha, alpha[k]) + theta[p - 1 + k];
    double gsig = 0.0;
    lp += gamma_log_prior_logscale(priors_.sigma, theta[2 * p - 1], sigma,
                                   grad ? &gsig : nullptr);

    if (grad) {
      const VectorXd g_omega = feff_.transpose() * r / s2;
      VectorXd gz = stick_breaking_pullback(sb, g_omega);
      gz += dirichlet_exponent_zgrad(alpha, sb);
      gz += stick_breaking_log_jac_grad(sb);
      grad->head(p - 1) = gz;

      const VectorXd ga = dirichlet_logpdf_alpha_grad(alpha, sb.log_omega);
      const double s_alpha = priors_.alpha.p1;
      for (Index k = 0; k < p; ++k) {
        double g = 1.0;  // jacobian of the log transform
        if (!clamped[static_cast<std::size_t>(k)])
          g += alpha[k] * (ga[k] - alpha[k] / (s_alpha * s_alpha));
        (*grad)[p - 1 + k] = g;
      }
      (*grad)[2 * p - 1] = -static_cast<double>(n) + ssr / s2 + gsig;
    }
    return lp;
  }
};

inline std::unique_ptr<GbmmD> build_gbmm_d(AlignedDataset data, PriorConfig priors = {},
                                           bool use_corrections = false) {
  return std::make_unique<GbmmD>(std::move(data), std::move(priors), use_corrections);
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_GBMM_D_HPP
