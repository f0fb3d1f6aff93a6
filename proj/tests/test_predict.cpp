#include <catch2/catch_amalgamated.hpp>

#include "bmmix/predict.hpp"
#include "bmmix/samplers/nuts.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace bmmix;

namespace {

std::vector<ModelTable> tables_from_dataset(const AlignedDataset& ds) {
  std::vector<ModelTable> out(static_cast<std::size_t>(ds.p()));
  for (Index k = 0; k < ds.p(); ++k) {
    auto& t = out[static_cast<std::size_t>(k)];
    t.model_name = ds.model_names[static_cast<std::size_t>(k)];
    if (ds.D) t.corrections = LocationMap{};
    for (Index i = 0; i < ds.n(); ++i) {
      t.predictions[ds.locations[static_cast<std::size_t>(i)]] = ds.F(i, k);
      if (ds.D) (*t.corrections)[ds.locations[static_cast<std::size_t>(i)]] = (*ds.D)(i, k);
    }
  }
  return out;
}

PosteriorSamples frozen_samples(const ModelSpec& spec, const VectorXd& theta, Index n_draws) {
  PosteriorSamples s;
  s.packing = spec.packing();
  s.draws = theta.transpose().replicate(n_draws, 1);
  s.chain_stats.resize(1);
  s.total_draws_per_chain = n_draws;
  return s;
}

}  // namespace

TEST_CASE("frozen logit-weight draw gives the exact mixture", "[predict]") {
  AlignedDataset ds;
  ds.model_names = {"a", "b"};
  ds.locations = {Location::zn(10, 10), Location::zn(10, 12)};
  ds.y.resize(2);
  ds.y << 1.7, 1.7;
  ds.F.resize(2, 2);
  ds.F << 1.0, 2.0, 1.0, 2.0;
  const auto spec = build_gbmm_l(ds);

  VectorXd theta(3);
  theta << std::log(0.3 / 0.7), std::log(0.7 / 0.3), -600.0;  // omega=(0.3,0.7), sigma ~ 0
  const auto samples = frozen_samples(*spec, theta, 4);
  RngStream rng(501);
  const MatrixXd draws =
      posterior_predictive(*spec, samples, tables_from_dataset(ds), ds.locations, rng);
  REQUIRE(draws.rows() == 4);
  CHECK((draws.array() == 1.7).all());
}

TEST_CASE("rms handles the textbook cases", "[predict]") {
  VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 1.0, 2.0;
  CHECK(rms(a, b) == 0.0);
  b << 2.0, 1.0;
  CHECK(rms(a, b) == 1.0);
  // permutation invariance and linear scaling
  VectorXd ap(2), bp(2);
  ap << 2.0, 1.0;
  bp << 1.0, 2.0;
  CHECK(rms(ap, bp) == rms(a, b));
  CHECK(rms(3.0 * a, 3.0 * b) == Catch::Approx(3.0 * rms(a, b)));
  VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(rms(a, wrong), validation_error);
}

TEST_CASE("self-calibrated draws yield nominal coverage", "[predict]") {
  RngStream rng(503);
  const Index n_loc = 200, n_draws = 2000;
  MatrixXd draws(n_draws, n_loc);
  VectorXd obs(n_loc);
  for (Index i = 0; i < n_loc; ++i) {
    const double mu = rng.normal(0.0, 2.0);
    for (Index j = 0; j < n_draws; ++j) draws(j, i) = mu + rng.normal();
    obs[i] = mu + rng.normal();
  }
  VectorXd levels(4);
  levels << 0.5, 0.68, 0.9, 0.95;
  const ECPCurve curve = ecp(draws, obs, levels);
  for (Index l = 0; l < levels.size(); ++l) {
    const auto [lo, hi] = oracles::binomial_central_band(static_cast<int>(n_loc), levels[l]);
    const double frac_lo = static_cast<double>(lo) / n_loc;
    const double frac_hi = static_cast<double>(hi) / n_loc;
    CHECK(curve.coverage[l] >= frac_lo);
    CHECK(curve.coverage[l] <= frac_hi);
  }
  // monotone in nominal level
  for (Index l = 1; l < levels.size(); ++l) CHECK(curve.coverage[l] >= curve.coverage[l - 1]);
}

TEST_CASE("observations far outside all intervals give zero coverage", "[predict]") {
  RngStream rng(509);
  MatrixXd draws(500, 10);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 500; ++j) draws(j, i) = rng.normal();
  const VectorXd obs = VectorXd::Constant(10, 100.0);
  VectorXd levels(2);
  levels << 0.5, 0.95;
  const ECPCurve curve = ecp(draws, obs, levels);
  CHECK(curve.coverage[0] == 0.0);
  CHECK(curve.coverage[1] == 0.0);
}

TEST_CASE("ecp precondition failures name the problem", "[predict]") {
  MatrixXd few(50, 3);
  few.setRandom();
  VectorXd obs = VectorXd::Zero(3);
  VectorXd levels(1);
  levels << 0.5;
  CHECK_THROWS_AS(ecp(few, obs, levels), validation_error);

  MatrixXd draws(150, 3);
  draws.setRandom();
  VectorXd extreme(1);
  extreme << 0.999;
  CHECK_THROWS_WITH(ecp(draws, obs, extreme), Catch::Matchers::ContainsSubstring("0.999"));
}

TEST_CASE("summaries give monotone quantiles around the mean", "[predict]") {
  RngStream rng(521);
  MatrixXd draws(3000, 3);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3000; ++j) draws(j, i) = rng.normal(static_cast<double>(i), 1.0 + i);
  const std::vector<Location> locs = {Location::zn(10, 10), Location::zn(10, 12),
                                      Location::zn(10, 14)};
  const PredictiveSummary s = summarize_predictive(draws, locs);
  for (Index i = 0; i < 3; ++i) {
    CHECK(s.mean[i] == Catch::Approx(static_cast<double>(i)).margin(0.15));
    for (Index l = 1; l < s.quantile_levels.size(); ++l)
      CHECK(s.quantiles(i, l) >= s.quantiles(i, l - 1));
    CHECK(s.quantiles(i, 2) == Catch::Approx(s.mean[i]).margin(0.2));  // median near mean
  }
}

TEST_CASE("sorted quantiles interpolate like the standard estimator", "[predict]") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(detail::sorted_quantile(v, 0.5) == Catch::Approx(2.5));
  CHECK(detail::sorted_quantile(v, 0.0) == 1.0);
  CHECK(detail::sorted_quantile(v, 1.0) == 4.0);
  CHECK(detail::sorted_quantile(v, 0.25) == Catch::Approx(1.75));
}

TEST_CASE("thinning caps the draws and keeps determinism", "[predict]") {
  const auto idx = detail::thin_indices(10000, 400);
  CHECK(idx.size() <= 400);
  CHECK(idx.front() == 0);
  CHECK(detail::thin_indices(10000, 400) == idx);
  const auto all = detail::thin_indices(100, 4000);
  CHECK(all.size() == 100);
}

TEST_CASE("predictive variance is at least the noise floor", "[predict]") {
  VectorXd omega(2);
  omega << 0.3, 0.7;
  const auto ds = synthetic::global_mixture(40, omega, 0.15, 523);
  const auto spec = build_gbmm_l(ds);
  SamplerConfig cfg;
  cfg.total_draws = 800;
  cfg.chains = 2;
  cfg.seed = 29;
  const PosteriorSamples samples = nuts_sample(*spec, cfg);
  RngStream rng(527);
  const MatrixXd draws =
      posterior_predictive(*spec, samples, tables_from_dataset(ds), ds.locations, rng);

  const auto& blk = spec->packing().block("sigma");
  double mean_s2 = 0.0;
  for (Index j = 0; j < samples.draws.rows(); ++j)
    mean_s2 += std::exp(2.0 * samples.draws(j, blk.offset));
  mean_s2 /= static_cast<double>(samples.draws.rows());
  for (Index i = 0; i < draws.cols(); ++i) {
    const double m = draws.col(i).mean();
    const double var = (draws.col(i).array() - m).square().sum() / (draws.rows() - 1.0);
    CHECK(var > 0.7 * mean_s2);
  }
}

TEST_CASE("dirichlet-weight field is constant over the grid", "[predict]") {
  VectorXd omega(3);
  omega << 0.2, 0.5, 0.3;
  const auto ds = synthetic::global_mixture(60, omega, 0.1, 531);
  const auto spec = build_gbmm_d(ds);
  SamplerConfig cfg;
  cfg.total_draws = 600;
  cfg.chains = 2;
  cfg.seed = 31;
  const PosteriorSamples samples = nuts_sample(*spec, cfg);
  RngStream rng(533);
  const std::vector<Location> grid = {Location::zn(12, 14), Location::zn(20, 30),
                                      Location::zn(26, 40)};
  const WeightField f = weight_field(*spec, samples, grid, rng);
  REQUIRE(f.mean.rows() == 3);
  for (Index i = 1; i < f.mean.rows(); ++i) {
    CHECK((f.mean.row(i) - f.mean.row(0)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((f.sd.row(i) - f.sd.row(0)).lpNorm<Eigen::Infinity>() == 0.0);
  }
  for (Index i = 0; i < f.mean.rows(); ++i)
    CHECK(f.mean.row(i).sum() == Catch::Approx(1.0).margin(1e-12));
  // posterior concentrates near the generating weights
  CHECK(f.mean(0, 1) == Catch::Approx(0.5).margin(0.1));
}

TEST_CASE("gp-weight field reuses sampled weights at training points", "[predict]") {
  const auto truth = synthetic::local_boundary(4, 6, 20.0, 1.0, 0.9, 0.1, 541);
  const auto spec = build_lbmm_gpd(truth.data);
  SamplerConfig cfg;
  cfg.total_draws = 300;
  cfg.chains = 1;
  cfg.seed = 37;
  cfg.max_tree_depth = 6;
  const PosteriorSamples samples = nuts_sample(*spec, cfg);

  const std::vector<Location> grid = {truth.data.locations[5]};
  RngStream rng(543);
  const WeightField reuse = weight_field(*spec, samples, grid, rng);

  // direct average of the sampled per-location weights for that point
  double direct = 0.0;
  for (Index j = 0; j < samples.draws.rows(); ++j)
    direct += spec->values(samples.draws.row(j).transpose()).omega(5, 0);
  direct /= static_cast<double>(samples.draws.rows());
  CHECK(reuse.mean(0, 0) == Catch::Approx(direct).margin(1e-12));

  // redrawing through the GP-conditional hierarchy matches in distribution
  PredictOptions opt;
  opt.use_sampled_local_weights = false;
  RngStream rng2(547);
  const WeightField redraw = weight_field(*spec, samples, grid, rng2, opt);
  CHECK(redraw.mean(0, 0) == Catch::Approx(reuse.mean(0, 0)).margin(0.12));
}
