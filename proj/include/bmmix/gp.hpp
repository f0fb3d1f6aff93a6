#ifndef BMMIX_GP_HPP
#define BMMIX_GP_HPP

#include <vector>

#include "bmmix/kernels.hpp"

namespace bmmix {

struct GpConditional {
  VectorXd mean;
  MatrixXd cov;
};

// Gaussian conditional of model k's latent field at new_pts given exact
// latent values at train_pts, under a constant-mean GP with the
// squared-exponential kernel.
inline GpConditional gp_conditional(const std::vector<Location>& train_pts,
                                    const VectorXd& train_vals, const std::vector<Location>& new_pts,
                                    double mean_inf, const KernelParams& kp, Index k) {
  kp.validate();
  require(static_cast<Index>(train_pts.size()) == train_vals.size(),
          "gp_conditional: train size mismatch");
  require(k >= 0 && k < kp.eta.size(), "gp_conditional: model index out of range");
  const double eta = kp.eta[k];

  const MatrixXd c_tt = correlation_gram(train_pts, kp.rho_z, kp.rho_n);
  CholFactor chol;
  try {
    chol = CholFactor::compute(c_tt);
  } catch (const numerical_error& e) {
    throw numerical_error(std::string(e.what()) + " for model index " + std::to_string(k));
  }

  const MatrixXd c_st = cross_correlation(new_pts, train_pts, kp.rho_z, kp.rho_n);
  const VectorXd resid = train_vals.array() - mean_inf;
  // eta cancels in the mean (K_st K_tt^-1 = C_st C_tt^-1).
  GpConditional out;
  out.mean = VectorXd::Constant(static_cast<Index>(new_pts.size()), mean_inf) +
             c_st * chol.solve(resid);
  const MatrixXd c_ss = correlation_gram(new_pts, kp.rho_z, kp.rho_n);
  const MatrixXd c_ts = c_st.transpose();
  out.cov = eta * (c_ss - c_st * chol.solve(c_ts));
  // clamp tiny negative diagonal noise from cancellation
  for (Index i = 0; i < out.cov.rows(); ++i)
    if (out.cov(i, i) < 0.0) out.cov(i, i) = 0.0;
  return out;
}

}  // namespace bmmix

#endif  // BMMIX_GP_HPP
