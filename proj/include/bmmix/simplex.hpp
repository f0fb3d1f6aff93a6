#ifndef BMMIX_SIMPLEX_HPP
#define BMMIX_SIMPLEX_HPP

#include <cmath>

#include "bmmix/common.hpp"

namespace bmmix {

// Centered stick-breaking bijection between R^{p-1} and the open simplex.
// The offsets -log(p-k) make z = 0 map to the uniform weight vector. The
// log-Jacobian is that of the (p-1)-dimensional map z -> (w_1..w_{p-1}).
struct StickBreaking {
  VectorXd omega;      // length p, interior simplex point
  VectorXd log_omega;  // computed in log space, safe for extreme z
  VectorXd v;          // stick fractions, length p-1
  VectorXd r;          // remaining stick before each step, length p (r[0] = 1)
  double log_jac = 0.0;
};

inline StickBreaking stick_breaking_forward(const VectorXd& z) {
  const Index pm1 = z.size();
  require(pm1 >= 1, "stick_breaking_forward: need at least 1 coordinate");
  const Index p = pm1 + 1;
  StickBreaking sb;
  sb.omega.resize(p);
  sb.log_omega.resize(p);
  sb.v.resize(pm1);
  sb.r.resize(p);
  double log_r = 0.0;
  sb.r[0] = 1.0;
  sb.log_jac = 0.0;
  for (Index k = 0; k < pm1; ++k) {
    const double t = z[k] - std::log(static_cast<double>(p - 1 - k));
    const double log_v = -log1p_exp(-t);
    const double log_1mv = -log1p_exp(t);
    sb.v[k] = std::exp(log_v);
    sb.log_omega[k] = log_v + log_r;
    sb.omega[k] = std::exp(sb.log_omega[k]);
    sb.log_jac += log_v + log_1mv + log_r;
    log_r += log_1mv;
    sb.r[k + 1] = std::exp(log_r);
  }
  sb.log_omega[p - 1] = log_r;
  sb.omega[p - 1] = sb.r[p - 1];
  return sb;
}

inline VectorXd stick_breaking_inverse(const VectorXd& omega) {
  const Index p = omega.size();
  require(p >= 2, "stick_breaking_inverse: need at least 2 components");
  require((omega.array() > 0.0).all(), "stick_breaking_inverse: interior point required");
  // logit(v_k) = log(omega_k) - log(sum_{j>k} omega_j); suffix sums from
  // the tail avoid the cancellation of a running remainder.
  VectorXd suffix(p);
  suffix[p - 1] = omega[p - 1];
  for (Index k = p - 2; k >= 0; --k) suffix[k] = suffix[k + 1] + omega[k];
  require(std::abs(suffix[0] - 1.0) < 1e-8, "stick_breaking_inverse: weights must sum to one");
  VectorXd z(p - 1);
  for (Index k = 0; k < p - 1; ++k)
    z[k] = std::log(omega[k]) - std::log(suffix[k + 1]) +
           std::log(static_cast<double>(p - 1 - k));
  return z;
}

// d(log_jac)/dz_k = 1 - v_k * (p + 1 - (k+1)) in 1-based indexing.
inline VectorXd stick_breaking_log_jac_grad(const StickBreaking& sb) {
  const Index pm1 = sb.v.size();
  VectorXd g(pm1);
  for (Index k = 0; k < pm1; ++k)
    g[k] = 1.0 - sb.v[k] * static_cast<double>(pm1 + 1 - k);
  return g;
}

// Pull a gradient with respect to omega (all p components) back to z.
inline VectorXd stick_breaking_pullback(const StickBreaking& sb, const VectorXd& g_omega) {
  const Index pm1 = sb.v.size();
  require(g_omega.size() == pm1 + 1, "stick_breaking_pullback: gradient size mismatch");
  VectorXd g_z(pm1);
  double adj_r = g_omega[pm1];  // adjoint of r_p
  for (Index k = pm1 - 1; k >= 0; --k) {
    const double adj_v = sb.r[k] * (g_omega[k] - adj_r);
    adj_r = sb.v[k] * g_omega[k] + (1.0 - sb.v[k]) * adj_r;
    g_z[k] = adj_v * sb.v[k] * (1.0 - sb.v[k]);
  }
  return g_z;
}

// Gradient with respect to z of sum_j (alpha_j - 1) log omega_j(z).
// Direct form with suffix sums; bounded even when omega underflows.
inline VectorXd dirichlet_exponent_zgrad(const VectorXd& alpha, const StickBreaking& sb) {
  const Index pm1 = sb.v.size();
  require(alpha.size() == pm1 + 1, "dirichlet_exponent_zgrad: alpha size mismatch");
  VectorXd g(pm1);
  double suffix = alpha[pm1] - 1.0;  // sum_{j>k} (alpha_j - 1)
  for (Index k = pm1 - 1; k >= 0; --k) {
    const double here = alpha[k] - 1.0;
    g[k] = here - sb.v[k] * (here + suffix);
    suffix += here;
  }
  return g;
}

// Non-negative clipping followed by renormalization onto the simplex.
inline VectorXd project_simplex(const VectorXd& omega) {
  VectorXd clipped = omega.cwiseMax(0.0);
  const double total = clipped.sum();
  if (!(total > 0.0)) throw validation_error("project_simplex: all components non-positive");
  return clipped / total;
}

}  // namespace bmmix

#endif  // BMMIX_SIMPLEX_HPP
