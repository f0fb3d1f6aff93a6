#ifndef BMMIX_MIXTURES_LBMM_GPD_HPP
#define BMMIX_MIXTURES_LBMM_GPD_HPP

#include <memory>
#include <vector>

#include "bmmix/kernels.hpp"
#include "bmmix/mixtures/local_common.hpp"
#include "bmmix/model_spec.hpp"

namespace bmmix {

struct KernelInit {
  double eta = 1.0;
  double rho_z = 2.5;
  double rho_n = 2.5;
};

struct LbmmGpdValues {
  MatrixXd omega;      // n x p, rows on the simplex
  MatrixXd gamma;      // n x p, latent log-concentration fields
  VectorXd gamma_inf;  // p
  VectorXd eta;        // p
  double rho_z = 0.0;
  double rho_n = 0.0;
  double sigma = 0.0;
};

// Local mixing with Dirichlet weights whose log concentrations follow
// Gaussian processes over (Z, N). The latent fields are parameterized
// non-centrally: gamma_k = gamma_inf_k + sqrt(eta_k) * L * u_k with L the
// Cholesky factor of the shared correlation matrix, so a single
// factorization serves every model at each evaluation.
class LbmmGpd final : public ModelSpec {
 public:
  LbmmGpd(AlignedDataset data, PriorConfig priors, bool use_corrections, KernelInit init)
      : ModelSpec(std::move(data), std::move(priors), use_corrections), kernel_init_(init) {
    require(!data_.locations.empty() && data_.locations.front().coords.size() == 2,
            "lbmm_gpd requires two-coordinate (Z, N) locations");
    require(init.eta > 0 && init.rho_z > 0 && init.rho_n > 0,
            "kernel initial values must be positive");
    const Index p = data_.p();
    const Index n = data_.n();
    packing_.add("z", BlockRole::WeightsZ, BlockTransform::StickBreaking, (p - 1) * n);
    packing_.add("u", BlockRole::GammaLatents, BlockTransform::Identity, p * n);
    packing_.add("gamma_inf", BlockRole::GammaLatents, BlockTransform::Identity, p);
    packing_.add("eta", BlockRole::Kernel, BlockTransform::Log, p);
    packing_.add("rho_z", BlockRole::Kernel, BlockTransform::Log, 1);
    packing_.add("rho_n", BlockRole::Kernel, BlockTransform::Log, 1);
    packing_.add("sigma", BlockRole::Sigma, BlockTransform::Log, 1);
    init_ = VectorXd::Zero(packing_.dim());
    init_.segment(packing_.block("eta").offset, p).setConstant(std::log(init.eta));
    init_[packing_.block("rho_z").offset] = std::log(init.rho_z);
    init_[packing_.block("rho_n").offset] = std::log(init.rho_n);
    init_[packing_.block("sigma").offset] = std::log(0.5);
  }

  std::string variant() const override { return "lbmm_gpd"; }

  const KernelInit& kernel_init() const { return kernel_init_; }

  LbmmGpdValues values(const VectorXd& theta) const {
    check_theta(theta);
    const Index p = data_.p();
    const Index n = data_.n();
    LbmmGpdValues v;
    v.omega = local_sticks(theta.head((p - 1) * n), n, p).omega;
    v.gamma_inf = theta.segment(packing_.block("gamma_inf").offset, p);
    v.eta = theta.segment(packing_.block("eta").offset, p).array().exp();
    v.rho_z = std::exp(theta[packing_.block("rho_z").offset]);
    v.rho_n = std::exp(theta[packing_.block("rho_n").offset]);
    v.sigma = std::exp(theta[packing_.block("sigma").offset]);
    const MatrixXd C = correlation_gram(data_.locations, v.rho_z, v.rho_n);
    const CholFactor F = CholFactor::compute(C, variant() + " correlation matrix");
    v.gamma.resize(n, p);
    const Index u_off = packing_.block("u").offset;
    for (Index k = 0; k < p; ++k)
      v.gamma.col(k) = VectorXd::Constant(n, v.gamma_inf[k]) +
                       std::sqrt(v.eta[k]) * (F.L * theta.segment(u_off + k * n, n));
    return v;
  }

  double log_likelihood(const VectorXd& theta) const override {
    const Index p = data_.p();
    const Index n = data_.n();
    const MatrixXd omega = local_sticks(theta.head((p - 1) * n), n, p).omega;
    const double sigma = std::exp(theta[packing_.block("sigma").offset]);
    const VectorXd mu = (omega.array() * feff_.array()).rowwise().sum();
    const VectorXd r = data_.y - mu;
    const double dn = static_cast<double>(n);
    return -0.5 * dn * log_2pi - dn * std::log(sigma) - r.squaredNorm() / (2.0 * sigma * sigma);
  }

 protected:
  double eval(const VectorXd& theta, VectorXd* grad) const override {
    const Index p = data_.p();
    const Index n = data_.n();
    const Index u_off = packing_.block("u").offset;
    const Index ginf_off = packing_.block("gamma_inf").offset;
    const Index eta_off = packing_.block("eta").offset;
    const Index rz_off = packing_.block("rho_z").offset;
    const Index rn_off = packing_.block("rho_n").offset;
    const Index sigma_off = packing_.block("sigma").offset;

    const LocalSticks sticks = local_sticks(theta.head((p - 1) * n), n, p);
    const VectorXd gamma_inf = theta.segment(ginf_off, p);
    const VectorXd eta = theta.segment(eta_off, p).array().exp();
    const double rho_z = std::exp(theta[rz_off]);
    const double rho_n = std::exp(theta[rn_off]);
    const double sigma = std::exp(theta[sigma_off]);
    const double s2 = sigma * sigma;

    const MatrixXd C = correlation_gram(data_.locations, rho_z, rho_n);
    const CholFactor F = CholFactor::compute(C, variant() + " correlation matrix");
    MatrixXd U(n, p), Lu(n, p), gamma(n, p);
    for (Index k = 0; k < p; ++k) {
      U.col(k) = theta.segment(u_off + k * n, n);
      Lu.col(k) = F.L * U.col(k);
      gamma.col(k) = VectorXd::Constant(n, gamma_inf[k]) + std::sqrt(eta[k]) * Lu.col(k);
    }
    MatrixXd alpha(n, p);
    std::vector<bool> clamped(static_cast<std::size_t>(n * p), false);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < p; ++k) {
        bool c = false;
        alpha(i, k) = clamp_alpha(std::exp(gamma(i, k)), &c);
        clamped[static_cast<std::size_t>(i * p + k)] = c;
      }

    const VectorXd mu = (sticks.omega.array() * feff_.array()).rowwise().sum();
    const VectorXd r = data_.y - mu;
    const double ssr = r.squaredNorm();

    double lp = -0.5 * n * log_2pi - n * std::log(sigma) - ssr / (2.0 * s2);
    MatrixXd g_omega_lik;
    if (grad) g_omega_lik = (feff_.array().colwise() * r.array()).matrix() / s2;
    const LocalDirichletEval layer =
        local_dirichlet_layer(sticks, alpha, clamped, grad ? &g_omega_lik : nullptr);
    lp += layer.lp;
    lp += -0.5 * U.squaredNorm() - 0.5 * p * n * log_2pi;  // whitened latents
    lp += -0.5 * gamma_inf.squaredNorm() - 0.5 * p * log_2pi;
    VectorXd g_log_eta = VectorXd::Zero(p);
    for (Index k = 0; k < p; ++k)
      lp += gamma_log_prior_logscale(priors_.eta, theta[eta_off + k], eta[k],
                                     grad ? &g_log_eta[k] : nullptr);
    double g_log_rz = 0.0, g_log_rn = 0.0, gsig = 0.0;
    lp += gamma_log_prior_logscale(priors_.rho_z, theta[rz_off], rho_z, grad ? &g_log_rz : nullptr);
    lp += gamma_log_prior_logscale(priors_.rho_n, theta[rn_off], rho_n, grad ? &g_log_rn : nullptr);
    lp += gamma_log_prior_logscale(priors_.sigma, theta[sigma_off], sigma, grad ? &gsig : nullptr);

    if (grad) {
      grad->head((p - 1) * n) = layer.gz;
      for (Index k = 0; k < p; ++k) {
        const VectorXd gg = layer.ggamma.col(k);
        grad->segment(u_off + k * n, n) =
            std::sqrt(eta[k]) * (F.L.transpose() * gg) - U.col(k);
        (*grad)[ginf_off + k] = gg.sum() - gamma_inf[k];
        (*grad)[eta_off + k] = 0.5 * std::sqrt(eta[k]) * Lu.col(k).dot(gg) + g_log_eta[k];
      }
      for (int coord = 0; coord < 2; ++coord) {
        const double rho = coord == 0 ? rho_z : rho_n;
        const MatrixXd Cdot = correlation_gram_rho_grad(data_.locations, C, rho, coord);
        const MatrixXd dL = chol_directional_derivative(F.L, Cdot);
        double s = 0.0;
        for (Index k = 0; k < p; ++k)
          s += std::sqrt(eta[k]) * layer.ggamma.col(k).dot(dL * U.col(k));
        const double g = rho * s + (coord == 0 ? g_log_rz : g_log_rn);
        (*grad)[coord == 0 ? rz_off : rn_off] = g;
      }
      (*grad)[sigma_off] = -static_cast<double>(n) + ssr / s2 + gsig;
    }
    return lp;
  }

  KernelInit kernel_init_;
};

inline std::unique_ptr<LbmmGpd> build_lbmm_gpd(AlignedDataset data, PriorConfig priors = {},
                                               bool use_corrections = false,
                                               KernelInit init = {}) {
  return std::make_unique<LbmmGpd>(std::move(data), std::move(priors), use_corrections, init);
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_LBMM_GPD_HPP
