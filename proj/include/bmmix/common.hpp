#ifndef BMMIX_COMMON_HPP
#define BMMIX_COMMON_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bmmix {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
using Index = Eigen::Index;

inline constexpr double log_2pi = 1.8378770664093454836;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Base error for everything thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (carries row/column context in the message).
class parse_error : public error {
 public:
  using error::error;
};

// Violated preconditions or invariants on otherwise well-formed data.
class validation_error : public error {
 public:
  using error::error;
};

// Numerical failures (Cholesky breakdown, underflow, singular Hessians).
class numerical_error : public error {
 public:
  using error::error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw validation_error(msg);
}

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  if (x > 35.0) return x + std::exp(-x);
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = neg_inf;
  for (double x : xs) m = std::max(m, x);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const VectorXd& xs) {
  return log_sum_exp(std::span<const double>(xs.data(), static_cast<size_t>(xs.size())));
}

// Welford running mean/variance, used for mass-matrix estimation and
// plain summary statistics.
class OnlineMoments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Vector-valued Welford accumulator.
class OnlineMomentsVec {
 public:
  explicit OnlineMomentsVec(Index dim) : mean_(VectorXd::Zero(dim)), m2_(VectorXd::Zero(dim)) {}
  void add(const VectorXd& x) {
    ++n_;
    const VectorXd d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d.cwiseProduct(x - mean_);
  }
  long count() const { return n_; }
  const VectorXd& mean() const { return mean_; }
  VectorXd variance() const {
    if (n_ < 2) return VectorXd::Zero(mean_.size());
    return m2_ / static_cast<double>(n_ - 1);
  }

 private:
  long n_ = 0;
  VectorXd mean_;
  VectorXd m2_;
};

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace bmmix

#endif  // BMMIX_COMMON_HPP
