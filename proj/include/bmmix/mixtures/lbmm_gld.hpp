#ifndef BMMIX_MIXTURES_LBMM_GLD_HPP
#define BMMIX_MIXTURES_LBMM_GLD_HPP

#include <memory>
#include <vector>

#include "bmmix/location.hpp"
#include "bmmix/mixtures/local_common.hpp"
#include "bmmix/model_spec.hpp"

namespace bmmix {

// Standardizes location coordinates to zero mean and unit spread, with an
// optional leading intercept column. The fitted scaler is reused verbatim
// when building design rows at prediction locations.
struct CovariateScaler {
  bool intercept = true;
  VectorXd mean;
  VectorXd sd;

  static CovariateScaler fit(const std::vector<Location>& locs, bool intercept) {
    require(!locs.empty(), "cannot standardize an empty location set");
    const Index q = static_cast<Index>(locs.front().coords.size());
    CovariateScaler s;
    s.intercept = intercept;
    s.mean = VectorXd::Zero(q);
    s.sd = VectorXd::Zero(q);
    for (const Location& l : locs)
      for (Index j = 0; j < q; ++j) s.mean[j] += l.coords[static_cast<std::size_t>(j)];
    s.mean /= static_cast<double>(locs.size());
    for (const Location& l : locs)
      for (Index j = 0; j < q; ++j) {
        const double d = l.coords[static_cast<std::size_t>(j)] - s.mean[j];
        s.sd[j] += d * d;
      }
    for (Index j = 0; j < q; ++j) {
      s.sd[j] = std::sqrt(s.sd[j] / static_cast<double>(locs.size()));
      if (!(s.sd[j] > 0.0) || !std::isfinite(s.sd[j])) s.sd[j] = 1.0;
    }
    return s;
  }

  Index cols() const { return mean.size() + (intercept ? 1 : 0); }

  MatrixXd design(const std::vector<Location>& locs) const {
    MatrixXd X(static_cast<Index>(locs.size()), cols());
    for (Index i = 0; i < X.rows(); ++i) {
      const Location& l = locs[static_cast<std::size_t>(i)];
      require(static_cast<Index>(l.coords.size()) == mean.size(),
              "location dimension does not match the fitted covariates");
      Index c = 0;
      if (intercept) X(i, c++) = 1.0;
      for (Index j = 0; j < mean.size(); ++j)
        X(i, c++) = (l.coords[static_cast<std::size_t>(j)] - mean[j]) / sd[j];
    }
    return X;
  }
};

struct GldOptions {
  bool intercept = true;
};

struct LbmmGldValues {
  MatrixXd omega;  // n x p, rows on the simplex
  MatrixXd gamma;  // n x p
  MatrixXd beta;   // q x p, one column per model
  double sigma = 0.0;
};

// Local mixing with Dirichlet weights whose log concentrations are linear
// in the standardized coordinates.
class LbmmGld final : public ModelSpec {
 public:
  LbmmGld(AlignedDataset data, PriorConfig priors, bool use_corrections, GldOptions options)
      : ModelSpec(std::move(data), std::move(priors), use_corrections),
        scaler_(CovariateScaler::fit(data_.locations, options.intercept)),
        X_(scaler_.design(data_.locations)) {
    const Index p = data_.p();
    const Index n = data_.n();
    packing_.add("z", BlockRole::WeightsZ, BlockTransform::StickBreaking, (p - 1) * n);
    packing_.add("beta", BlockRole::Beta, BlockTransform::Identity, p * q());
    packing_.add("sigma", BlockRole::Sigma, BlockTransform::Log, 1);
    init_ = VectorXd::Zero(packing_.dim());
    init_[packing_.block("sigma").offset] = std::log(0.5);
  }

  std::string variant() const override { return "lbmm_gld"; }

  Index q() const { return scaler_.cols(); }
  const CovariateScaler& scaler() const { return scaler_; }
  const MatrixXd& design() const { return X_; }

  // Beta block is model-major: column k of the returned matrix sits at
  // offset + k*q in theta.
  MatrixXd beta_matrix(const VectorXd& theta) const {
    const Index p = data_.p();
    MatrixXd B(q(), p);
    const Index off = packing_.block("beta").offset;
    for (Index k = 0; k < p; ++k) B.col(k) = theta.segment(off + k * q(), q());
    return B;
  }

  LbmmGldValues values(const VectorXd& theta) const {
    check_theta(theta);
    const Index p = data_.p();
    const Index n = data_.n();
    LbmmGldValues v;
    v.omega = local_sticks(theta.head((p - 1) * n), n, p).omega;
    v.beta = beta_matrix(theta);
    v.gamma = X_ * v.beta;
    v.sigma = std::exp(theta[packing_.block("sigma").offset]);
    return v;
  }

  double log_likelihood(const VectorXd& theta) const override {
    const LbmmGldValues v = values(theta);
    const VectorXd mu = (v.omega.array() * feff_.array()).rowwise().sum();
    const VectorXd r = data_.y - mu;
    const double n = static_cast<double>(data_.n());
    return -0.5 * n * log_2pi - n * std::log(v.sigma) -
           r.squaredNorm() / (2.0 * v.sigma * v.sigma);
  }

 protected:
  double eval(const VectorXd& theta, VectorXd* grad) const override {
    const Index p = data_.p();
    const Index n = data_.n();
    const Index nq = q();
    const Index beta_off = packing_.block("beta").offset;
    const Index sigma_off = packing_.block("sigma").offset;

    const LocalSticks sticks = local_sticks(theta.head((p - 1) * n), n, p);
    const MatrixXd B = beta_matrix(theta);
    const MatrixXd gamma = X_ * B;
    MatrixXd alpha(n, p);
    std::vector<bool> clamped(static_cast<std::size_t>(n * p), false);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < p; ++k) {
        bool c = false;
        alpha(i, k) = clamp_alpha(std::exp(gamma(i, k)), &c);
        clamped[static_cast<std::size_t>(i * p + k)] = c;
      }
    const double sigma = std::exp(theta[sigma_off]);
    const double s2 = sigma * sigma;
    const VectorXd mu = (sticks.omega.array() * feff_.array()).rowwise().sum();
    const VectorXd r = data_.y - mu;
    const double ssr = r.squaredNorm();

    double lp = -0.5 * n * log_2pi - n * std::log(sigma) - ssr / (2.0 * s2);
    MatrixXd g_omega_lik;
    if (grad) g_omega_lik = (feff_.array().colwise() * r.array()).matrix() / s2;
    const LocalDirichletEval layer =
        local_dirichlet_layer(sticks, alpha, clamped, grad ? &g_omega_lik : nullptr);
    lp += layer.lp;
    for (Index k = 0; k < p; ++k)
      for (Index j = 0; j < nq; ++j)
        lp += logpdf(priors_.beta, B(j, k));
    double gsig = 0.0;
    lp += gamma_log_prior_logscale(priors_.sigma, theta[sigma_off], sigma,
                                   grad ? &gsig : nullptr);

    if (grad) {
      grad->head((p - 1) * n) = layer.gz;
      const MatrixXd gB = X_.transpose() * layer.ggamma;  // q x p
      for (Index k = 0; k < p; ++k)
        for (Index j = 0; j < nq; ++j)
          (*grad)[beta_off + k * nq + j] = gB(j, k) + grad_logpdf(priors_.beta, B(j, k));
      (*grad)[sigma_off] = -static_cast<double>(n) + ssr / s2 + gsig;
    }
    return lp;
  }

  CovariateScaler scaler_;
  MatrixXd X_;
};

inline std::unique_ptr<LbmmGld> build_lbmm_gld(AlignedDataset data, PriorConfig priors = {},
                                               bool use_corrections = false,
                                               GldOptions options = {}) {
  return std::make_unique<LbmmGld>(std::move(data), std::move(priors), use_corrections, options);
}

}  // namespace bmmix

#endif  // BMMIX_MIXTURES_LBMM_GLD_HPP
