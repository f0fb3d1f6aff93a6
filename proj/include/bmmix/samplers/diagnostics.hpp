#ifndef BMMIX_SAMPLERS_DIAGNOSTICS_HPP
#define BMMIX_SAMPLERS_DIAGNOSTICS_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <boost/math/distributions/normal.hpp>

#include "bmmix/csv.hpp"
#include "bmmix/samplers/posterior_samples.hpp"

namespace bmmix {

namespace detail {

// Splits each chain in half, giving 2C sequences of equal length (odd
// leftover dropped).
inline std::vector<VectorXd> split_chains(const PosteriorSamples& s, Index col) {
  std::vector<VectorXd> out;
  const Index k = s.kept_per_chain();
  const Index half = k / 2;
  require(half >= 2, "chains too short to split for diagnostics");
  for (int c = 0; c < s.chains(); ++c) {
    const auto chain = s.chain(c);
    out.push_back(chain.col(col).head(half));
    out.push_back(chain.col(col).segment(half, half));
  }
  return out;
}

inline double chain_mean(const VectorXd& v) { return v.mean(); }

inline double chain_var(const VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// Potential scale reduction over a set of equal-length sequences.
inline double rhat_of(const std::vector<VectorXd>& seqs) {
  const double mchains = static_cast<double>(seqs.size());
  const double n = static_cast<double>(seqs.front().size());
  double grand = 0.0;
  for (const VectorXd& v : seqs) grand += chain_mean(v);
  grand /= mchains;
  double b = 0.0, w = 0.0;
  for (const VectorXd& v : seqs) {
    const double mu = chain_mean(v);
    b += (mu - grand) * (mu - grand);
    w += chain_var(v);
  }
  b *= n / (mchains - 1.0);
  w /= mchains;
  if (!(w > 0.0)) return 1.0;  // constant sequences
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Replaces draws by normal scores of their pooled ranks (average ranks on
// ties), the transformation behind bulk ESS.
inline std::vector<VectorXd> rank_normalize(const std::vector<VectorXd>& seqs) {
  const Index n = seqs.front().size();
  const std::size_t total = seqs.size() * static_cast<std::size_t>(n);
  std::vector<std::pair<double, std::size_t>> vals;
  vals.reserve(total);
  for (std::size_t c = 0; c < seqs.size(); ++c)
    for (Index i = 0; i < n; ++i)
      vals.emplace_back(seqs[c][i], c * static_cast<std::size_t>(n) + static_cast<std::size_t>(i));
  std::sort(vals.begin(), vals.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> rank(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && vals[j + 1].first == vals[i].first) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k2 = i; k2 <= j; ++k2) rank[vals[k2].second] = avg;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> nd;
  std::vector<VectorXd> out(seqs.size(), VectorXd(n));
  const double denom = static_cast<double>(total) + 0.25;
  for (std::size_t c = 0; c < seqs.size(); ++c)
    for (Index k2 = 0; k2 < n; ++k2) {
      const double u = (rank[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(k2)] -
                        0.375) / denom;
      out[c][k2] = boost::math::quantile(nd, u);
    }
  return out;
}

inline double autocovariance(const VectorXd& v, Index lag, double mean) {
  const Index n = v.size();
  double s = 0.0;
  for (Index i = 0; i + lag < n; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
  return s / static_cast<double>(n);
}

// Effective sample size across sequences using Geyer's initial monotone
// positive sequence of paired autocorrelations.
inline double ess_of(const std::vector<VectorXd>& seqs) {
  const std::size_t mchains = seqs.size();
  const Index n = seqs.front().size();
  std::vector<double> means(mchains), vars(mchains);
  double w = 0.0;
  for (std::size_t c = 0; c < mchains; ++c) {
    means[c] = chain_mean(seqs[c]);
    vars[c] = chain_var(seqs[c]);
    w += vars[c];
  }
  w /= static_cast<double>(mchains);
  double b = 0.0;
  if (mchains > 1) {
    double grand = std::accumulate(means.begin(), means.end(), 0.0) / mchains;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= static_cast<double>(n) / (static_cast<double>(mchains) - 1.0);
  }
  const double var_plus = (n - 1.0) / n * w + (mchains > 1 ? b / n : 0.0);
  if (!(var_plus > 0.0)) return static_cast<double>(mchains) * n;

  auto rho_at = [&](Index t) {
    double acov = 0.0;
    for (std::size_t c = 0; c < mchains; ++c) acov += autocovariance(seqs[c], t, means[c]);
    acov /= static_cast<double>(mchains);
    return 1.0 - (w - acov) / var_plus;
  };

  double tau = 1.0;  // 1 + 2 * sum of retained autocorrelations
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Index t = 1; t + 1 < n; t += 2) {
    const double pair = rho_at(t) + rho_at(t + 1);
    if (pair <= 0.0) break;
    const double capped = std::min(pair, prev_pair);
    tau += 2.0 * capped;
    prev_pair = capped;
  }
  const double total = static_cast<double>(mchains) * static_cast<double>(n);
  return std::min(total, total / tau);
}

}  // namespace detail

struct ParamDiagnostics {
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess_bulk = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsReport {
  std::map<std::string, ParamDiagnostics> params;
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  double min_ess = std::numeric_limits<double>::quiet_NaN();
  long divergences = 0;
  std::vector<std::string> warnings;
  bool rhat_available = true;

  nlohmann::json to_json() const {
    nlohmann::json jp = nlohmann::json::object();
    for (const auto& [name, d] : params) {
      nlohmann::json e = {{"ess", d.ess_bulk}};
      if (rhat_available) e["rhat"] = d.rhat;
      jp[name] = e;
    }
    nlohmann::json j = {{"params", jp},
                        {"divergences", divergences},
                        {"warnings", warnings},
                        {"min_ess", min_ess}};
    if (rhat_available) j["max_rhat"] = max_rhat;
    return j;
  }
};

// Split R-hat and rank-normalized bulk ESS for each scalar whose block is
// listed (empty list = every scalar). Single-chain runs omit R-hat.
inline DiagnosticsReport diagnostics(const PosteriorSamples& s,
                                     const std::vector<std::string>& blocks = {}) {
  s.validate();
  DiagnosticsReport rep;
  rep.divergences = s.total_divergences();
  rep.warnings = s.warnings;
  rep.rhat_available = s.chains() >= 2;
  if (!rep.rhat_available)
    rep.warnings.push_back("single chain: split R-hat not computed");

  const std::vector<std::string> labels = s.packing.scalar_labels();
  auto block_selected = [&](const ThetaBlock& b) {
    if (blocks.empty()) return true;
    return std::find(blocks.begin(), blocks.end(), b.name) != blocks.end();
  };
  rep.max_rhat = -std::numeric_limits<double>::infinity();
  rep.min_ess = std::numeric_limits<double>::infinity();
  for (const ThetaBlock& b : s.packing.blocks()) {
    if (!block_selected(b)) continue;
    for (Index i = 0; i < b.length; ++i) {
      const Index col = b.offset + i;
      const std::vector<VectorXd> seqs = detail::split_chains(s, col);
      ParamDiagnostics pd;
      if (rep.rhat_available) {
        pd.rhat = detail::rhat_of(seqs);
        rep.max_rhat = std::max(rep.max_rhat, pd.rhat);
      }
      pd.ess_bulk = detail::ess_of(detail::rank_normalize(seqs));
      rep.min_ess = std::min(rep.min_ess, pd.ess_bulk);
      rep.params[labels[static_cast<std::size_t>(col)]] = pd;
    }
  }
  require(!rep.params.empty(), "no parameter blocks matched the diagnostics selection");
  return rep;
}

// Trace CSV: iteration, chain, then one column per selected scalar.
inline void write_traces(const PosteriorSamples& s, const std::vector<std::string>& blocks,
                         const std::string& path) {
  const std::vector<std::string> labels = s.packing.scalar_labels();
  std::vector<Index> cols;
  std::vector<std::string> header = {"iteration", "chain"};
  for (const ThetaBlock& b : s.packing.blocks()) {
    if (!blocks.empty() && std::find(blocks.begin(), blocks.end(), b.name) == blocks.end())
      continue;
    for (Index i = 0; i < b.length; ++i) {
      cols.push_back(b.offset + i);
      header.push_back(labels[static_cast<std::size_t>(b.offset + i)]);
    }
  }
  require(!cols.empty(), "no parameter blocks matched the trace selection");
  CsvWriter w(path);
  w.header(header);
  const Index k = s.kept_per_chain();
  for (int c = 0; c < s.chains(); ++c)
    for (Index it = 0; it < k; ++it) {
      std::vector<double> row = {static_cast<double>(it), static_cast<double>(c)};
      for (Index col : cols) row.push_back(s.chain(c)(it, col));
      w.numeric_row(row);
    }
}

}  // namespace bmmix

#endif  // BMMIX_SAMPLERS_DIAGNOSTICS_HPP
