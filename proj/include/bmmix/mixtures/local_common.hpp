#ifndef BMMIX_MIXTURES_LOCAL_COMMON_HPP
#define BMMIX_MIXTURES_LOCAL_COMMON_HPP

#include <vector>

#include "bmmix/distributions.hpp"
#include "bmmix/simplex.hpp"

namespace bmmix {

// Per-location stick-breaking state for the local variants. The z block is
// location-major: entries [i*(p-1), (i+1)*(p-1)) belong to location i.
struct LocalSticks {
  std::vector<StickBreaking> sb;
  MatrixXd omega;      // n x p
  MatrixXd log_omega;  // n x p
};

inline LocalSticks local_sticks(const VectorXd& z_block, Index n, Index p) {
  require(z_block.size() == (p - 1) * n, "z block has the wrong length");
  LocalSticks s;
  s.sb.reserve(static_cast<std::size_t>(n));
  s.omega.resize(n, p);
  s.log_omega.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    s.sb.push_back(stick_breaking_forward(z_block.segment(i * (p - 1), p - 1)));
    s.omega.row(i) = s.sb.back().omega.transpose();
    s.log_omega.row(i) = s.sb.back().log_omega.transpose();
  }
  return s;
}

// Dirichlet layer shared by the local variants: sum over locations of
// log Dir(omega_i | alpha_i) plus the stick-breaking jacobian. When
// gradients are requested, ggamma holds d/d gamma_ki (zero where the
// concentration was clamped) and gz the full z-block gradient including the
// likelihood pullback supplied through g_omega_lik.
struct LocalDirichletEval {
  double lp = 0.0;
  MatrixXd ggamma;  // n x p
  VectorXd gz;      // (p-1)*n
};

inline LocalDirichletEval local_dirichlet_layer(
    const LocalSticks& sticks, const MatrixXd& alpha,
    const std::vector<bool>& clamped, const MatrixXd* g_omega_lik) {
  const Index n = sticks.omega.rows();
  const Index p = sticks.omega.cols();
  LocalDirichletEval out;
  const bool want_grad = g_omega_lik != nullptr;
  if (want_grad) {
    out.ggamma = MatrixXd::Zero(n, p);
    out.gz = VectorXd::Zero((p - 1) * n);
  }
  for (Index i = 0; i < n; ++i) {
    const StickBreaking& sb = sticks.sb[static_cast<std::size_t>(i)];
    const VectorXd alpha_i = alpha.row(i).transpose();
    const VectorXd log_omega_i = sticks.log_omega.row(i).transpose();
    out.lp += dirichlet_logpdf_from_log(alpha_i, log_omega_i) + sb.log_jac;
    if (!want_grad) continue;
    const VectorXd ga = dirichlet_logpdf_alpha_grad(alpha_i, log_omega_i);
    for (Index k = 0; k < p; ++k)
      if (!clamped[static_cast<std::size_t>(i * p + k)])
        out.ggamma(i, k) = alpha_i[k] * ga[k];
    VectorXd gz_i = stick_breaking_pullback(sb, g_omega_lik->row(i).transpose());
    gz_i += dirichlet_exponent_zgrad(alpha_i, sb);
    gz_i += stick_breaking_log_jac_grad(sb);
    out.gz.segment(i * (p - 1), p - 1) = gz_i;
  }
  return out;
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_LOCAL_COMMON_HPP
