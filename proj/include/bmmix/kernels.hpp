#ifndef BMMIX_KERNELS_HPP
#define BMMIX_KERNELS_HPP

#include <string>
#include <vector>

#include "bmmix/location.hpp"

namespace bmmix {

// Squared-exponential kernel family: per-model marginal variance eta_k with
// length scales shared across models (one per input coordinate; for the
// nuclear case rho_z acts on Z and rho_n on N).
struct KernelParams {
  VectorXd eta;
  double rho_z = 1.0;
  double rho_n = 1.0;

  void validate() const {
    require(eta.size() >= 1 && (eta.array() > 0.0).all(),
            "KernelParams: eta must be positive");
    require(rho_z > 0.0 && rho_n > 0.0, "KernelParams: length scales must be positive");
  }
};

inline double se_correlation(const Location& a, const Location& b, double rho_z, double rho_n) {
  const double dz = a.z() - b.z();
  const double dn = a.n() - b.n();
  return std::exp(-dz * dz / (2.0 * rho_z * rho_z) - dn * dn / (2.0 * rho_n * rho_n));
}

inline double se_kernel(const Location& a, const Location& b, const KernelParams& kp, Index k) {
  require(k >= 0 && k < kp.eta.size(), "se_kernel: model index out of range");
  return kp.eta[k] * se_correlation(a, b, kp.rho_z, kp.rho_n);
}

// Unit-variance gram matrix shared by all models.
inline MatrixXd correlation_gram(const std::vector<Location>& pts, double rho_z, double rho_n) {
  const auto n = static_cast<Index>(pts.size());
  MatrixXd c(n, n);
  for (Index i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      const double v = se_correlation(pts[static_cast<std::size_t>(i)],
                                      pts[static_cast<std::size_t>(j)], rho_z, rho_n);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

inline MatrixXd cross_correlation(const std::vector<Location>& a, const std::vector<Location>& b,
                                  double rho_z, double rho_n) {
  MatrixXd c(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j)
      c(i, j) = se_correlation(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)],
                               rho_z, rho_n);
  return c;
}

// Elementwise derivative of the correlation gram with respect to one length
// scale (coordinate 0 for rho_z, 1 for rho_n): dC_ij = C_ij * dcoord^2 / rho^3.
inline MatrixXd correlation_gram_rho_grad(const std::vector<Location>& pts, const MatrixXd& c,
                                          double rho, std::size_t coord) {
  const auto n = static_cast<Index>(pts.size());
  MatrixXd g = MatrixXd::Zero(n, n);
  const double inv_rho3 = 1.0 / (rho * rho * rho);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < i; ++j) {
      const double d2 = sq_distance_coord(pts[static_cast<std::size_t>(i)],
                                          pts[static_cast<std::size_t>(j)], coord);
      const double v = c(i, j) * d2 * inv_rho3;
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

// Cholesky factor of K + jitter * I. The jitter starts at 1e-8 of the mean
// diagonal and escalates tenfold up to 1e-2 of it before giving up.
struct CholFactor {
  MatrixXd L;
  double jitter = 0.0;

  static CholFactor compute(const MatrixXd& K, const std::string& context = "") {
    require(K.rows() == K.cols() && K.rows() > 0, "CholFactor: square matrix required");
    const double scale = K.diagonal().mean();
    CholFactor out;
    for (double mult = 1e-8; mult <= 1e-2 * 1.0000001; mult *= 10.0) {
      const double j = mult * scale;
      Eigen::LLT<MatrixXd> llt(K + j * MatrixXd::Identity(K.rows(), K.cols()));
      if (llt.info() == Eigen::Success) {
        out.L = llt.matrixL();
        out.jitter = j;
        return out;
      }
    }
    throw numerical_error("Cholesky failed after jitter escalation" +
                          (context.empty() ? "" : " (" + context + ")"));
  }

  VectorXd solve(const VectorXd& b) const {
    VectorXd x = L.triangularView<Eigen::Lower>().solve(b);
    return L.transpose().triangularView<Eigen::Upper>().solve(x);
  }

  MatrixXd solve(const MatrixXd& b) const {
    MatrixXd x = L.triangularView<Eigen::Lower>().solve(b);
    return L.transpose().triangularView<Eigen::Upper>().solve(x);
  }

  double log_det() const { return 2.0 * L.diagonal().array().log().sum(); }
};

// Lower half with halved diagonal; the Phi operator of Cholesky
// differentiation.
inline MatrixXd phi_lower(const MatrixXd& m) {
  MatrixXd out = m.triangularView<Eigen::StrictlyLower>();
  out.diagonal() = 0.5 * m.diagonal();
  return out;
}

// Forward directional derivative of the Cholesky factor: given L with
// L L^T = K and a symmetric perturbation dK, returns L * Phi(L^-1 dK L^-T).
inline MatrixXd chol_directional_derivative(const MatrixXd& L, const MatrixXd& dK) {
  MatrixXd s = L.triangularView<Eigen::Lower>().solve(dK);
  s = L.triangularView<Eigen::Lower>().solve(s.transpose()).transpose();
  return L.triangularView<Eigen::Lower>() * phi_lower(s);
}

}  // namespace bmmix

#endif  // BMMIX_KERNELS_HPP
