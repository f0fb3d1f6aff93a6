#ifndef BMMIX_DISTRIBUTIONS_HPP
#define BMMIX_DISTRIBUTIONS_HPP

#include <cmath>
#include <optional>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "bmmix/common.hpp"
#include "bmmix/rng.hpp"

namespace bmmix {

inline double digamma(double x) { return boost::math::digamma(x); }

enum class DistFamily { Normal, Gamma, HalfNormal, Uniform, Dirichlet };

// A distribution family with fixed parameters. Scalar families use p1/p2;
// Dirichlet carries its concentration vector.
struct DistSpec {
  DistFamily family = DistFamily::Normal;
  double p1 = 0.0;  // Normal mu | Gamma shape | HalfNormal sd | Uniform lo
  double p2 = 1.0;  // Normal sd | Gamma rate  | (unused)      | Uniform hi
  VectorXd alpha;   // Dirichlet only

  static DistSpec normal(double mu, double sd) {
    require(sd > 0.0, "Normal: sd must be positive");
    return {DistFamily::Normal, mu, sd, {}};
  }
  static DistSpec gamma(double shape, double rate) {
    require(shape > 0.0 && rate > 0.0, "Gamma: shape and rate must be positive");
    return {DistFamily::Gamma, shape, rate, {}};
  }
  static DistSpec half_normal(double sd) {
    require(sd > 0.0, "HalfNormal: sd must be positive");
    return {DistFamily::HalfNormal, sd, 0.0, {}};
  }
  static DistSpec uniform(double lo, double hi) {
    require(lo < hi, "Uniform: lo must be < hi");
    return {DistFamily::Uniform, lo, hi, {}};
  }
  static DistSpec dirichlet(VectorXd a) {
    require(a.size() >= 2, "Dirichlet: needs at least 2 components");
    require((a.array() > 0.0).all(), "Dirichlet: all alpha must be positive");
    return {DistFamily::Dirichlet, 0.0, 0.0, std::move(a)};
  }

  double mean() const {
    switch (family) {
      case DistFamily::Normal: return p1;
      case DistFamily::Gamma: return p1 / p2;
      case DistFamily::HalfNormal: return p1 * std::sqrt(2.0 / std::numbers::pi);
      case DistFamily::Uniform: return 0.5 * (p1 + p2);
      case DistFamily::Dirichlet: throw validation_error("mean(): scalar families only");
    }
    return 0.0;
  }
};

// Exact log density with normalizing constant. Outside the support the
// result is -inf; *in_support (when given) is cleared so callers can
// distinguish a flagged zero gradient from a true zero.
inline double logpdf(const DistSpec& d, double x, bool* in_support = nullptr) {
  if (in_support) *in_support = true;
  switch (d.family) {
    case DistFamily::Normal: {
      const double z = (x - d.p1) / d.p2;
      return -0.5 * z * z - std::log(d.p2) - 0.5 * log_2pi;
    }
    case DistFamily::Gamma: {
      if (x <= 0.0) {
        if (in_support) *in_support = false;
        return neg_inf;
      }
      return d.p1 * std::log(d.p2) - std::lgamma(d.p1) + (d.p1 - 1.0) * std::log(x) - d.p2 * x;
    }
    case DistFamily::HalfNormal: {
      if (x < 0.0) {
        if (in_support) *in_support = false;
        return neg_inf;
      }
      return 0.5 * std::log(2.0) - 0.5 * std::log(std::numbers::pi) - std::log(d.p1) -
             0.5 * (x / d.p1) * (x / d.p1);
    }
    case DistFamily::Uniform: {
      if (x < d.p1 || x > d.p2) {
        if (in_support) *in_support = false;
        return neg_inf;
      }
      return -std::log(d.p2 - d.p1);
    }
    case DistFamily::Dirichlet:
      throw validation_error("logpdf: Dirichlet takes a vector argument");
  }
  return neg_inf;
}

inline double grad_logpdf(const DistSpec& d, double x, bool* in_support = nullptr) {
  if (in_support) *in_support = true;
  switch (d.family) {
    case DistFamily::Normal:
      return -(x - d.p1) / (d.p2 * d.p2);
    case DistFamily::Gamma:
      if (x <= 0.0) {
        if (in_support) *in_support = false;
        return 0.0;
      }
      return (d.p1 - 1.0) / x - d.p2;
    case DistFamily::HalfNormal:
      if (x < 0.0) {
        if (in_support) *in_support = false;
        return 0.0;
      }
      return -x / (d.p1 * d.p1);
    case DistFamily::Uniform:
      if (x < d.p1 || x > d.p2) {
        if (in_support) *in_support = false;
      }
      return 0.0;
    case DistFamily::Dirichlet:
      throw validation_error("grad_logpdf: Dirichlet takes a vector argument");
  }
  return 0.0;
}

// Dirichlet log density evaluated at x > 0. The unit-sum constraint is the
// caller's responsibility (the stick-breaking transform guarantees it); the
// density formula itself is evaluated as a function of all p coordinates so
// that coordinate-wise gradients are well defined.
inline double logpdf(const DistSpec& d, const VectorXd& x, bool* in_support = nullptr) {
  require(d.family == DistFamily::Dirichlet, "vector logpdf: Dirichlet only");
  require(x.size() == d.alpha.size(), "Dirichlet logpdf: dimension mismatch");
  if (in_support) *in_support = true;
  if (!(x.array() > 0.0).all()) {
    if (in_support) *in_support = false;
    return neg_inf;
  }
  double lp = std::lgamma(d.alpha.sum());
  for (Index k = 0; k < x.size(); ++k)
    lp += -std::lgamma(d.alpha[k]) + (d.alpha[k] - 1.0) * std::log(x[k]);
  return lp;
}

inline VectorXd grad_logpdf(const DistSpec& d, const VectorXd& x, bool* in_support = nullptr) {
  require(d.family == DistFamily::Dirichlet, "vector grad_logpdf: Dirichlet only");
  require(x.size() == d.alpha.size(), "Dirichlet grad_logpdf: dimension mismatch");
  if (in_support) *in_support = true;
  if (!(x.array() > 0.0).all()) {
    if (in_support) *in_support = false;
    return VectorXd::Zero(x.size());
  }
  return (d.alpha.array() - 1.0) / x.array();
}

// Dirichlet log density given log(x), bypassing the exp/log round trip for
// stick-breaking outputs near the simplex boundary.
inline double dirichlet_logpdf_from_log(const VectorXd& alpha, const VectorXd& log_x) {
  double lp = std::lgamma(alpha.sum());
  for (Index k = 0; k < alpha.size(); ++k)
    lp += -std::lgamma(alpha[k]) + (alpha[k] - 1.0) * log_x[k];
  return lp;
}

// d/d alpha_k of the Dirichlet log density.
inline VectorXd dirichlet_logpdf_alpha_grad(const VectorXd& alpha, const VectorXd& log_x) {
  const double psi_sum = digamma(alpha.sum());
  VectorXd g(alpha.size());
  for (Index k = 0; k < alpha.size(); ++k) g[k] = psi_sum - digamma(alpha[k]) + log_x[k];
  return g;
}

inline double sample(const DistSpec& d, RngStream& rng) {
  switch (d.family) {
    case DistFamily::Normal: return rng.normal(d.p1, d.p2);
    case DistFamily::Gamma: return rng.gamma(d.p1, d.p2);
    case DistFamily::HalfNormal: return std::abs(rng.normal(0.0, d.p1));
    case DistFamily::Uniform: return rng.uniform(d.p1, d.p2);
    case DistFamily::Dirichlet:
      throw validation_error("sample: use sample_vec for Dirichlet");
  }
  return 0.0;
}

inline VectorXd sample_vec(const DistSpec& d, RngStream& rng) {
  require(d.family == DistFamily::Dirichlet, "sample_vec: Dirichlet only");
  return rng.dirichlet(d.alpha);
}

}  // namespace bmmix

#endif  // BMMIX_DISTRIBUTIONS_HPP
