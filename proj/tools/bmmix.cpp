// Command-line front end: fit mixtures, compute evidence and weights, and
// turn posterior samples into predictions, rms tables, coverage curves, and
// weight fields. All artifacts land in the configured output directory.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmmix/bmmix.hpp"

namespace {

using nlohmann::json;

// Configuration or invocation problems exit with code 2; runtime and
// numerical failures with 1.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<std::string> all_variants = {"bma-ex",   "bma-mc",   "bma-laplace", "gbmm-l",
                                               "gbmm-d",   "lbmm-gld", "lbmm-gpd"};

std::string checked_variant(const json& cfg) {
  if (!cfg.contains("variant")) throw usage_error("config is missing 'variant'");
  const std::string v = cfg.at("variant").get<std::string>();
  if (std::find(all_variants.begin(), all_variants.end(), v) == all_variants.end()) {
    std::string known;
    for (const auto& k : all_variants) known += (known.empty() ? "" : ", ") + k;
    throw usage_error("unknown variant '" + v + "' (expected one of: " + known + ")");
  }
  return v;
}

struct LoadedData {
  bmmix::ObservationSet obs;
  std::vector<bmmix::ModelTable> models;
  bmmix::AlignedDataset aligned;
  bmmix::SplitSpec split;
  bool use_corrections = false;
};

LoadedData load_data(const json& cfg) {
  if (!cfg.contains("data")) throw usage_error("config is missing the 'data' section");
  const json& d = cfg.at("data");
  if (!d.contains("observations")) throw usage_error("data section is missing 'observations'");
  if (!d.contains("models") || !d.at("models").is_array() || d.at("models").empty())
    throw usage_error("data section needs a non-empty 'models' array");

  LoadedData out;
  out.obs = bmmix::load_observations(d.at("observations").get<std::string>());
  for (const json& m : d.at("models")) {
    if (!m.contains("name") || !m.contains("path"))
      throw usage_error("each models[] entry needs 'name' and 'path'");
    out.models.push_back(
        bmmix::load_model_table(m.at("path").get<std::string>(), m.at("name").get<std::string>()));
  }
  out.use_corrections = d.value("use_corrections", false);
  out.aligned = bmmix::align(out.obs, out.models,
                             out.use_corrections ? bmmix::CorrectionMode::Auto
                                                 : bmmix::CorrectionMode::Disabled);
  if (d.contains("split")) {
    out.split = bmmix::load_split(d.at("split").get<std::string>());
  } else {
    for (std::size_t i = 0; i < out.obs.size(); ++i) out.split.train_ids.push_back(i);
  }
  return out;
}

bmmix::PriorConfig priors_from_config(const json& cfg) {
  bmmix::PriorConfig p;
  if (cfg.contains("priors")) bmmix::apply_prior_overrides(p, cfg.at("priors"));
  return p;
}

bmmix::SamplerConfig sampler_from_config(const json& cfg, std::uint64_t seed) {
  bmmix::SamplerConfig sc = cfg.contains("sampler")
                                ? bmmix::SamplerConfig::from_json(cfg.at("sampler"))
                                : bmmix::SamplerConfig::desk_default();
  sc.seed = seed;
  return sc;
}

bmmix::PredictOptions predict_options(const json& cfg) {
  bmmix::PredictOptions opt;
  if (cfg.contains("predict")) {
    const json& p = cfg.at("predict");
    if (p.contains("max_draws")) opt.max_draws = p.at("max_draws").get<long>();
    if (p.contains("resample_global_weights"))
      opt.resample_global_weights = p.at("resample_global_weights").get<bool>();
    if (p.contains("use_sampled_local_weights"))
      opt.use_sampled_local_weights = p.at("use_sampled_local_weights").get<bool>();
  }
  return opt;
}

// Blocks small enough to diagnose and trace by default; the per-location
// stick and latent blocks of the local variants are excluded.
std::vector<std::string> default_summary_blocks(const bmmix::ModelSpec& spec) {
  const std::string v = spec.variant();
  if (v == "gbmm_l" || v == "gbmm_d") return {};  // all blocks
  if (v == "lbmm_gld") return {"beta", "sigma"};
  return {"gamma_inf", "eta", "rho_z", "rho_n", "sigma"};
}

std::uint64_t seed_from_config(const json& cfg) {
  return cfg.value("seed", static_cast<std::uint64_t>(0));
}

std::string output_dir_from_config(const json& cfg) {
  if (!cfg.contains("output_dir")) throw usage_error("config is missing 'output_dir'");
  return cfg.at("output_dir").get<std::string>();
}

bmmix::PrecisionPrior conjugate_prior_from_config(const json& cfg) {
  bmmix::PrecisionPrior p;
  if (cfg.contains("evidence") && cfg.at("evidence").contains("conjugate")) {
    const json& c = cfg.at("evidence").at("conjugate");
    if (c.contains("mu")) p.mu = c.at("mu").get<double>();
    if (c.contains("shape")) p.shape = c.at("shape").get<double>();
    if (c.contains("rate")) p.rate = c.at("rate").get<double>();
  }
  return p;
}

bmmix::IndependentPriors independent_priors_from_config(const json& cfg) {
  bmmix::IndependentPriors p;
  if (cfg.contains("evidence") && cfg.at("evidence").contains("independent")) {
    const json& c = cfg.at("evidence").at("independent");
    if (c.contains("sigma")) p.sigma = bmmix::dist_from_json(c.at("sigma"));
    if (c.contains("delta")) p.delta = bmmix::dist_from_json(c.at("delta"));
  }
  return p;
}

long n_mc_from_config(const json& cfg) {
  if (cfg.contains("evidence") && cfg.at("evidence").contains("n_mc"))
    return cfg.at("evidence").at("n_mc").get<long>();
  return 1000000;
}

bmmix::VectorXd prior_probs_from_config(const json& cfg, bmmix::Index p) {
  if (cfg.contains("evidence") && cfg.at("evidence").contains("prior_probs")) {
    const auto v = cfg.at("evidence").at("prior_probs").get<std::vector<double>>();
    if (static_cast<bmmix::Index>(v.size()) != p)
      throw usage_error("evidence.prior_probs length does not match the model count");
    return Eigen::Map<const bmmix::VectorXd>(v.data(), static_cast<bmmix::Index>(v.size()));
  }
  return bmmix::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
}

// The data subset evidence computations run on: the evidence split when
// present, the training split otherwise.
bmmix::AlignedDataset evidence_subset(const LoadedData& data) {
  if (!data.split.evidence_ids.empty()) return data.aligned.subset(data.split.evidence_ids);
  return data.aligned.subset(data.split.effective_train(data.use_corrections));
}

void write_evidence_csv(const std::string& path,
                        const std::vector<std::pair<std::vector<bmmix::EvidenceResult>,
                                                    bmmix::BmaWeights>>& tables) {
  bmmix::CsvWriter w(path);
  w.header({"model", "method", "log_evidence", "weight", "se"});
  for (const auto& [evs, wts] : tables)
    for (std::size_t k = 0; k < evs.size(); ++k) {
      const bmmix::EvidenceResult& e = evs[k];
      w.row({e.model_name, bmmix::to_string(e.method), fmt_num(e.log_evidence),
             fmt_num(wts.weights[static_cast<bmmix::Index>(k)]),
             e.mc_se ? fmt_num(*e.mc_se) : ""});
    }
}

std::vector<std::pair<std::vector<bmmix::EvidenceResult>, bmmix::BmaWeights>> evidence_tables(
    const json& cfg, const LoadedData& data, const std::vector<bmmix::EvidenceMethod>& methods) {
  const bmmix::AlignedDataset ev = evidence_subset(data);
  const bmmix::PrecisionPrior conj = conjugate_prior_from_config(cfg);
  const bmmix::IndependentPriors indep = independent_priors_from_config(cfg);
  const long n_mc = n_mc_from_config(cfg);
  const bmmix::RngStream rng(seed_from_config(cfg), 977);
  const bmmix::VectorXd prior_probs = prior_probs_from_config(cfg, ev.p());
  std::vector<std::pair<std::vector<bmmix::EvidenceResult>, bmmix::BmaWeights>> out;
  for (const auto method : methods) {
    auto evs = bmmix::bma_evidence_table(ev, data.use_corrections, method, conj, indep, n_mc, rng);
    auto wts = bmmix::bma_weights(evs, prior_probs);
    out.emplace_back(std::move(evs), std::move(wts));
  }
  return out;
}

json config_snapshot(const json& cfg, const bmmix::ModelSpec* spec) {
  json snap = cfg;
  snap["metadata"] = bmmix::run_metadata(seed_from_config(cfg));
  if (spec) snap["metadata"]["packing"] = spec->packing().to_json();
  return snap;
}

// Rebuilds the fitted model and its samples from a run directory.
struct RestoredRun {
  json cfg;
  LoadedData data;
  std::unique_ptr<bmmix::ModelSpec> spec;  // null for bma variants
  bmmix::PosteriorSamples samples;         // empty for bma variants
  std::string variant;
};

RestoredRun restore_run(const std::string& run_dir) {
  RestoredRun r;
  const bmmix::RunPaths paths{run_dir};
  r.cfg = bmmix::read_json_file(paths.config());
  r.variant = checked_variant(r.cfg);
  r.data = load_data(r.cfg);
  if (bmmix::is_mixture_variant(r.variant)) {
    const auto train = r.data.aligned.subset(
        r.data.split.effective_train(r.data.use_corrections));
    r.spec = bmmix::build_variant(r.variant, train, priors_from_config(r.cfg),
                                  r.data.use_corrections,
                                  r.cfg.value("options", json::object()));
    r.samples = bmmix::read_samples_csv(paths.samples(), r.spec->packing());
  }
  return r;
}

std::vector<bmmix::Location> locations_from_csv(const std::string& path) {
  const bmmix::CsvTable t = bmmix::read_csv(path);
  const auto zc = t.require_column("Z", path);
  const auto nc = t.require_column("N", path);
  std::vector<bmmix::Location> locs;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    locs.push_back(bmmix::Location::zn(bmmix::parse_double(t.rows[r][zc], path, r + 2),
                                       bmmix::parse_double(t.rows[r][nc], path, r + 2)));
  return locs;
}

// BMA predictive draws at the given locations: conjugate posteriors per
// model on the evidence subset, mixed by the evidence weights.
bmmix::MatrixXd bma_predictive_draws(const json& cfg, const LoadedData& data,
                                     const std::string& variant,
                                     const std::vector<bmmix::Location>& locs, long n_draws) {
  const bmmix::EvidenceMethod method = variant == "bma-ex"   ? bmmix::EvidenceMethod::Exact
                                       : variant == "bma-mc" ? bmmix::EvidenceMethod::Mc
                                                             : bmmix::EvidenceMethod::Laplace;
  const auto tables = evidence_tables(cfg, data, {method});
  const bmmix::BmaWeights& wts = tables.front().second;
  const bmmix::AlignedDataset ev = evidence_subset(data);
  const bmmix::MatrixXd fe = ev.effective_predictions(data.use_corrections);
  const bmmix::MatrixXd fstar = bmmix::detail::model_matrix_at(
      data.models, ev.model_names, locs, data.use_corrections);
  const bmmix::PrecisionPrior conj = conjugate_prior_from_config(cfg);
  std::vector<bmmix::MatrixXd> per_model;
  bmmix::RngStream rng(seed_from_config(cfg), 1039);
  for (bmmix::Index k = 0; k < ev.p(); ++k) {
    const bmmix::VectorXd d = ev.y - fe.col(k);
    const auto post = bmmix::ConjugatePosterior::from_residuals(d, conj);
    bmmix::RngStream rk = rng.split(static_cast<std::uint64_t>(k));
    per_model.push_back(bmmix::conjugate_predictive_draws(post, fstar.col(k), n_draws, rk));
  }
  bmmix::RngStream rmix = rng.split(10007);
  return bmmix::bma_predict(wts, per_model, n_draws, rmix);
}

void write_predictive_csv(const std::string& path, const bmmix::PredictiveSummary& s) {
  bmmix::CsvWriter w(path);
  w.header({"Z", "N", "mean", "sd", "q05", "q16", "q50", "q84", "q95"});
  for (std::size_t i = 0; i < s.locations.size(); ++i) {
    const auto idx = static_cast<bmmix::Index>(i);
    w.numeric_row(s.locations[i].z(), s.locations[i].n(), s.mean[idx], s.sd[idx],
                  s.quantiles(idx, 0), s.quantiles(idx, 1), s.quantiles(idx, 2),
                  s.quantiles(idx, 3), s.quantiles(idx, 4));
  }
}

int cmd_fit(const std::string& config_path, const json& overrides) {
  json cfg = bmmix::read_json_file(config_path);
  cfg.update(overrides, true);
  const std::string variant = checked_variant(cfg);
  const std::string out_dir = output_dir_from_config(cfg);
  const std::uint64_t seed = seed_from_config(cfg);
  LoadedData data = load_data(cfg);
  bmmix::ensure_dir(out_dir);
  const bmmix::RunPaths paths{out_dir};

  if (bmmix::is_bma_variant(variant)) {
    const bmmix::EvidenceMethod method = variant == "bma-ex"   ? bmmix::EvidenceMethod::Exact
                                         : variant == "bma-mc" ? bmmix::EvidenceMethod::Mc
                                                               : bmmix::EvidenceMethod::Laplace;
    const auto tables = evidence_tables(cfg, data, {method});
    write_evidence_csv(paths.evidence(), tables);
    bmmix::write_json_file(paths.config(), config_snapshot(cfg, nullptr));
    std::cout << "evidence written to " << paths.evidence() << "\n";
    return 0;
  }

  const auto train = data.aligned.subset(data.split.effective_train(data.use_corrections));
  auto spec = bmmix::build_variant(variant, train, priors_from_config(cfg), data.use_corrections,
                                   cfg.value("options", json::object()));
  const bmmix::SamplerConfig scfg = sampler_from_config(cfg, seed);
  const bmmix::PosteriorSamples samples = bmmix::sample_posterior(*spec, scfg);
  const std::vector<std::string> blocks = default_summary_blocks(*spec);
  bmmix::DiagnosticsReport rep = bmmix::diagnostics(samples, blocks);
  rep.to_json();  // validate serializability early

  bmmix::write_json_file(paths.config(), config_snapshot(cfg, spec.get()));
  bmmix::write_samples_csv(samples, paths.samples());
  json diag = rep.to_json();
  diag["clamped_concentrations"] = samples.clamp_events;
  diag["step_sizes"] = json::array();
  for (const auto& cs : samples.chain_stats) diag["step_sizes"].push_back(cs.step_size);
  bmmix::write_json_file(paths.diagnostics(), diag);
  bmmix::write_traces(samples, blocks, paths.traces());

  std::cout << "run written to " << out_dir << "\n"
            << "  draws kept: " << samples.draws.rows() << " (" << samples.chains()
            << " chains)\n";
  if (rep.rhat_available) std::cout << "  max split R-hat: " << rep.max_rhat << "\n";
  std::cout << "  min bulk ESS: " << rep.min_ess << "\n"
            << "  divergences: " << rep.divergences << "\n";
  for (const auto& wmsg : rep.warnings) std::cout << "  warning: " << wmsg << "\n";
  return 0;
}

int cmd_predict(const std::string& run_dir, const std::string& locations_path,
                const std::string& out_path) {
  RestoredRun r = restore_run(run_dir);
  const bmmix::RunPaths paths{run_dir};
  std::vector<bmmix::Location> locs;
  if (!locations_path.empty()) {
    locs = locations_from_csv(locations_path);
  } else if (!r.data.split.test_ids.empty()) {
    for (auto i : r.data.split.test_ids) locs.push_back(r.data.obs.entries[i].loc);
  } else {
    for (auto i : r.data.split.effective_train(r.data.use_corrections))
      locs.push_back(r.data.obs.entries[i].loc);
  }
  const bmmix::PredictOptions opt = predict_options(r.cfg);
  bmmix::MatrixXd draws;
  if (r.spec) {
    const bmmix::RngStream rng(seed_from_config(r.cfg), 40009);
    draws = bmmix::posterior_predictive(*r.spec, r.samples, r.data.models, locs, rng, opt);
  } else {
    draws = bma_predictive_draws(r.cfg, r.data, r.variant, locs, opt.max_draws);
  }
  const bmmix::PredictiveSummary summary = bmmix::summarize_predictive(draws, locs);
  write_predictive_csv(out_path.empty() ? paths.predictive() : out_path, summary);
  std::cout << "predictive written to " << (out_path.empty() ? paths.predictive() : out_path)
            << "\n";
  return 0;
}

int cmd_evaluate(const std::string& run_dir, const std::string& test_path) {
  RestoredRun r = restore_run(run_dir);
  const bmmix::RunPaths paths{run_dir};
  const bmmix::PredictOptions opt = predict_options(r.cfg);

  // Training-set score.
  const auto train_ids = r.data.split.effective_train(r.data.use_corrections);
  const bmmix::AlignedDataset train = r.data.aligned.subset(train_ids);
  const bmmix::RngStream rng(seed_from_config(r.cfg), 50021);

  auto predictive_at = [&](const std::vector<bmmix::Location>& locs) {
    if (r.spec)
      return bmmix::posterior_predictive(*r.spec, r.samples, r.data.models, locs, rng, opt);
    return bma_predictive_draws(r.cfg, r.data, r.variant, locs, opt.max_draws);
  };

  const bmmix::MatrixXd train_draws = predictive_at(train.locations);
  const bmmix::PredictiveSummary train_sum = bmmix::summarize_predictive(train_draws, train.locations);
  const double rms_train = bmmix::rms(train_sum.mean, train.y);

  // Test-set score: an external observation file or the test split.
  std::vector<bmmix::Location> test_locs;
  bmmix::VectorXd test_y;
  if (!test_path.empty()) {
    const bmmix::ObservationSet tobs = bmmix::load_observations(test_path);
    test_y.resize(static_cast<bmmix::Index>(tobs.size()));
    for (std::size_t i = 0; i < tobs.size(); ++i) {
      test_locs.push_back(tobs.entries[i].loc);
      test_y[static_cast<bmmix::Index>(i)] = tobs.entries[i].y;
    }
  } else if (!r.data.split.test_ids.empty()) {
    const bmmix::AlignedDataset test = r.data.aligned.subset(r.data.split.test_ids);
    test_locs = test.locations;
    test_y = test.y;
  }

  double rms_test = std::numeric_limits<double>::quiet_NaN();
  if (!test_locs.empty()) {
    const bmmix::MatrixXd test_draws = predictive_at(test_locs);
    const bmmix::PredictiveSummary test_sum = bmmix::summarize_predictive(test_draws, test_locs);
    rms_test = bmmix::rms(test_sum.mean, test_y);
    bmmix::VectorXd levels(4);
    levels << 0.5, 0.68, 0.9, 0.95;
    const bmmix::ECPCurve curve = bmmix::ecp(test_draws, test_y, levels);
    bmmix::CsvWriter w(paths.ecp());
    w.header({"level", "coverage"});
    for (bmmix::Index l = 0; l < levels.size(); ++l)
      w.numeric_row(curve.levels[l], curve.coverage[l]);
  }

  // Posterior sigma summary (mixture runs only).
  double sigma_mean = std::numeric_limits<double>::quiet_NaN();
  double sigma_sd = std::numeric_limits<double>::quiet_NaN();
  if (r.spec) {
    const auto& blk = r.spec->packing().block("sigma");
    const auto col = r.samples.draws.col(blk.offset);
    bmmix::VectorXd sig = col.array().exp();
    sigma_mean = sig.mean();
    sigma_sd = std::sqrt((sig.array() - sigma_mean).square().sum() /
                         static_cast<double>(sig.size() - 1));
  }

  bmmix::CsvWriter w(paths.metrics());
  w.header({"model", "sigma_mean", "sigma_sd", "rms_train", "rms_test"});
  w.row({r.variant, fmt_num(sigma_mean), fmt_num(sigma_sd), fmt_num(rms_train),
         fmt_num(rms_test)});
  std::cout << "metrics written to " << paths.metrics() << "\n"
            << "  rms_train = " << rms_train << "\n";
  if (!test_locs.empty()) std::cout << "  rms_test  = " << rms_test << "\n";
  return 0;
}

int cmd_evidence(const std::string& config_path, const json& overrides) {
  json cfg = bmmix::read_json_file(config_path);
  cfg.update(overrides, true);
  const std::string out_dir = output_dir_from_config(cfg);
  LoadedData data = load_data(cfg);
  bmmix::ensure_dir(out_dir);
  const bmmix::RunPaths paths{out_dir};
  const auto tables = evidence_tables(
      cfg, data,
      {bmmix::EvidenceMethod::Exact, bmmix::EvidenceMethod::Mc, bmmix::EvidenceMethod::Laplace});
  write_evidence_csv(paths.evidence(), tables);
  bmmix::write_json_file(paths.config(), config_snapshot(cfg, nullptr));
  std::cout << "evidence written to " << paths.evidence() << "\n";
  return 0;
}

int cmd_weights(const std::string& run_dir, const std::string& grid_path,
                const std::string& out_path) {
  RestoredRun r = restore_run(run_dir);
  const bmmix::RunPaths paths{run_dir};
  if (!r.spec) throw usage_error("weights requires a mixture-variant run directory");

  std::vector<bmmix::Location> grid;
  if (!grid_path.empty()) {
    grid = locations_from_csv(grid_path);
  } else {
    // Even-even nuclei on the positive-prediction domain.
    for (const auto& loc : bmmix::positive_domain(r.data.models)) {
      const long z = std::lround(loc.z()), n = std::lround(loc.n());
      if (z % 2 == 0 && n % 2 == 0) grid.push_back(loc);
    }
    std::sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) {
      return a.coords < b.coords;
    });
    if (grid.empty()) grid = r.spec->data().locations;
  }

  const bmmix::RngStream rng(seed_from_config(r.cfg), 60013);
  const bmmix::WeightField field =
      bmmix::weight_field(*r.spec, r.samples, grid, rng, predict_options(r.cfg));
  const std::string out = out_path.empty() ? paths.weight_field() : out_path;
  bmmix::CsvWriter w(out);
  w.header({"Z", "N", "model", "mean", "sd"});
  for (std::size_t i = 0; i < field.grid.size(); ++i)
    for (std::size_t k = 0; k < field.model_names.size(); ++k) {
      const auto idx = static_cast<bmmix::Index>(i);
      const auto kdx = static_cast<bmmix::Index>(k);
      w.row({fmt_num(field.grid[i].z()), fmt_num(field.grid[i].n()), field.model_names[k],
             fmt_num(field.mean(idx, kdx)), fmt_num(field.sd(idx, kdx))});
    }
  if (!field.note.empty()) std::cout << "note: " << field.note << "\n";
  std::cout << "weight field written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian model combination for imperfect scientific models"};
  app.set_version_flag("--version", std::string("bmmix ") + bmmix::version_string);
  app.require_subcommand(1);

  std::string config_path, run_dir, locations_path, out_path, test_path, grid_path;
  json overrides = json::object();
  std::uint64_t seed_override = 0;
  bool have_seed = false;
  std::string output_override, algorithm_override;
  long draws_override = 0;
  int chains_override = 0;

  auto add_common_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_override, "Override the config seed")
        ->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--output", output_override, "Override the output directory");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit a variant and write run artifacts");
  fit->add_option("--config", config_path, "JSON run configuration")->required();
  add_common_overrides(fit);
  fit->add_option("--algorithm", algorithm_override, "Sampler: nuts or mh");
  fit->add_option("--draws", draws_override, "Total draws per chain");
  fit->add_option("--chains", chains_override, "Number of chains");

  CLI::App* predict = app.add_subcommand("predict", "Predictive summaries from a run directory");
  predict->add_option("--run", run_dir, "Run directory from fit")->required();
  predict->add_option("--locations", locations_path, "CSV of Z,N locations");
  predict->add_option("--out", out_path, "Output CSV path");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a run: rms table and ECP curve");
  evaluate->add_option("--run", run_dir, "Run directory from fit")->required();
  evaluate->add_option("--test", test_path, "Observation CSV for the test set");

  CLI::App* evidence = app.add_subcommand("evidence", "Evidence and weights, all three methods");
  evidence->add_option("--config", config_path, "JSON run configuration")->required();
  add_common_overrides(evidence);

  CLI::App* weights = app.add_subcommand("weights", "Posterior weight field over a grid");
  weights->add_option("--run", run_dir, "Run directory from fit")->required();
  weights->add_option("--grid", grid_path, "CSV of Z,N grid locations");
  weights->add_option("--out", out_path, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (have_seed) overrides["seed"] = seed_override;
    if (!output_override.empty()) overrides["output_dir"] = output_override;
    if (!algorithm_override.empty() || draws_override > 0 || chains_override > 0) {
      json sc = json::object();
      if (!algorithm_override.empty()) sc["algorithm"] = algorithm_override;
      if (draws_override > 0) sc["total_draws"] = draws_override;
      if (chains_override > 0) sc["chains"] = chains_override;
      overrides["sampler"] = sc;
    }

    if (fit->parsed()) return cmd_fit(config_path, overrides);
    if (predict->parsed()) return cmd_predict(run_dir, locations_path, out_path);
    if (evaluate->parsed()) return cmd_evaluate(run_dir, test_path);
    if (evidence->parsed()) return cmd_evidence(config_path, overrides);
    if (weights->parsed()) return cmd_weights(run_dir, grid_path, out_path);
    return 2;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
