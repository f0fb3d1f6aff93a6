#include <catch2/catch_amalgamated.hpp>

#include "bmmix/mixtures/lbmm_gld.hpp"
#include "bmmix/mixtures/lbmm_gpd.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace bmmix;

TEST_CASE("covariate scaler standardizes the design", "[lbmm]") {
  const auto ds = synthetic::random_dataset(30, 2, 211);
  const auto m = build_lbmm_gld(ds);
  const MatrixXd& x = m->design();
  REQUIRE(x.cols() == 3);  // intercept + Z + N
  CHECK((x.col(0).array() == 1.0).all());
  for (Index c = 1; c < 3; ++c) {
    CHECK(std::abs(x.col(c).mean()) < 1e-12);
    const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(x.rows()));
    CHECK(sd == Catch::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("intercept can be disabled", "[lbbm]") {
  GldOptions opt;
  opt.intercept = false;
  const auto m = build_lbmm_gld(synthetic::random_dataset(20, 2, 213), {}, false, opt);
  CHECK(m->design().cols() == 2);
  CHECK(m->dim() == (2 - 1) * 20 + 2 * 2 + 1);
}

TEST_CASE("linear-concentration gradient matches finite differences", "[lbmm]") {
  const auto m = build_lbmm_gld(synthetic::random_dataset(14, 3, 217));
  RngStream rng(61);
  auto f = [&](const VectorXd& t) { return m->log_posterior(t); };
  for (int rep = 0; rep < 15; ++rep) {
    const VectorXd theta = rng.normal_vec(m->dim(), 0.0, 0.8);
    const VectorXd g = m->log_posterior_grad(theta);
    const VectorXd fd = oracles::fd_gradient(f, theta);
    CHECK((g - fd).lpNorm<Eigen::Infinity>() / (1.0 + fd.lpNorm<Eigen::Infinity>()) < 1e-6);
  }
}

TEST_CASE("linear-concentration weights are per-location simplices", "[lbmm]") {
  const auto m = build_lbmm_gld(synthetic::random_dataset(12, 3, 219));
  RngStream rng(62);
  const auto v = m->values(rng.normal_vec(m->dim(), 0.0, 1.0));
  REQUIRE(v.omega.rows() == 12);
  for (Index i = 0; i < v.omega.rows(); ++i) {
    CHECK(v.omega.row(i).sum() == Catch::Approx(1.0).margin(1e-12));
    CHECK((v.omega.row(i).array() > 0.0).all());
  }
  // concentrations follow the linear predictor through the exp link
  const MatrixXd gamma_direct = m->design() * m->beta_matrix(rng.normal_vec(m->dim()));
  CHECK(gamma_direct.rows() == 12);
}

TEST_CASE("gp-concentration gradient matches finite differences", "[lbmm]") {
  const auto m = build_lbmm_gpd(synthetic::random_dataset(12, 2, 223));
  RngStream rng(63);
  auto f = [&](const VectorXd& t) { return m->log_posterior(t); };
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd theta = rng.normal_vec(m->dim(), 0.0, 0.5);
    const VectorXd g = m->log_posterior_grad(theta);
    const VectorXd fd = oracles::fd_gradient(f, theta);
    CHECK((g - fd).lpNorm<Eigen::Infinity>() / (1.0 + fd.lpNorm<Eigen::Infinity>()) < 1e-5);
  }
}

TEST_CASE("gp-concentration dimension follows the documented layout", "[lbmm]") {
  const Index n = 10, p = 3;
  const auto m = build_lbmm_gpd(synthetic::random_dataset(n, p, 227));
  CHECK(m->dim() == (2 * p - 1) * n + 2 * p + 3);
  const auto& pk = m->packing();
  CHECK(pk.block("z").length == (p - 1) * n);
  CHECK(pk.block("u").length == p * n);
  CHECK(pk.block("eta").length == p);
  CHECK(pk.block("rho_z").length == 1);
  CHECK(pk.block("sigma").length == 1);
}

TEST_CASE("gp-concentration values reconstruct the latent field", "[lbmm]") {
  const Index n = 8, p = 2;
  const auto m = build_lbmm_gpd(synthetic::random_dataset(n, p, 229));
  RngStream rng(64);
  const VectorXd theta = rng.normal_vec(m->dim(), 0.0, 0.7);
  const auto v = m->values(theta);
  REQUIRE(v.gamma.rows() == n);
  REQUIRE(v.gamma.cols() == p);
  CHECK((v.eta.array() > 0.0).all());
  CHECK(v.rho_z > 0.0);
  CHECK(v.rho_n > 0.0);

  // reconstruct gamma directly: gamma_k = gamma_inf_k + sqrt(eta_k) L u_k
  const MatrixXd c = correlation_gram(m->data().locations, v.rho_z, v.rho_n);
  const CholFactor f = CholFactor::compute(c);
  const auto& ub = m->packing().block("u");
  for (Index k = 0; k < p; ++k) {
    const VectorXd uk = theta.segment(ub.offset + k * n, n);
    const VectorXd gk = VectorXd::Constant(n, v.gamma_inf[k]) +
                        std::sqrt(v.eta[k]) * (MatrixXd(f.L) * uk);
    CHECK((v.gamma.col(k) - gk).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  for (Index i = 0; i < n; ++i)
    CHECK(v.omega.row(i).sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("gp-concentration variant needs two coordinates and positive inits", "[lbmm]") {
  AlignedDataset ds = synthetic::random_dataset(6, 2, 233);
  KernelInit bad;
  bad.eta = -1.0;
  CHECK_THROWS_AS(build_lbmm_gpd(ds, {}, false, bad), validation_error);

  AlignedDataset one_coord;
  one_coord.model_names = {"a", "b"};
  one_coord.y.resize(3);
  one_coord.y << 1, 2, 3;
  one_coord.F.resize(3, 2);
  one_coord.F.setOnes();
  for (int i = 0; i < 3; ++i) one_coord.locations.push_back(Location{1.0 + i});
  CHECK_THROWS_AS(build_lbmm_gpd(one_coord), validation_error);
}
