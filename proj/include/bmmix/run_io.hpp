#ifndef BMMIX_RUN_IO_HPP
#define BMMIX_RUN_IO_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmmix/csv.hpp"
#include "bmmix/samplers/diagnostics.hpp"
#include "bmmix/samplers/posterior_samples.hpp"
#include "bmmix/version.hpp"

namespace bmmix {

struct RunPaths {
  std::string dir;
  std::string config() const { return dir + "/config.json"; }
  std::string samples() const { return dir + "/samples.csv"; }
  std::string diagnostics() const { return dir + "/diagnostics.json"; }
  std::string traces() const { return dir + "/traces.csv"; }
  std::string evidence() const { return dir + "/evidence.csv"; }
  std::string predictive() const { return dir + "/predictive.csv"; }
  std::string ecp() const { return dir + "/ecp.csv"; }
  std::string weight_field() const { return dir + "/weight_field.csv"; }
  std::string metrics() const { return dir + "/metrics.csv"; }
};

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw error("cannot create output directory " + dir + ": " + ec.message());
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

// samples.csv: chain, iteration, then one column per unconstrained scalar,
// full precision so reruns and rereads are bit-exact.
inline void write_samples_csv(const PosteriorSamples& s, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> header = {"chain", "iteration"};
  for (const std::string& l : s.packing.scalar_labels()) header.push_back(l);
  w.header(header);
  const Index k = s.kept_per_chain();
  for (int c = 0; c < s.chains(); ++c)
    for (Index it = 0; it < k; ++it) {
      std::vector<double> row;
      row.reserve(static_cast<std::size_t>(s.draws.cols()) + 2);
      row.push_back(static_cast<double>(c));
      row.push_back(static_cast<double>(it));
      for (Index j = 0; j < s.draws.cols(); ++j)
        row.push_back(s.chain(c)(it, j));
      w.numeric_row(row);
    }
}

inline PosteriorSamples read_samples_csv(const std::string& path, const ThetaPacking& packing) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> labels = packing.scalar_labels();
  require(t.header.size() == labels.size() + 2,
          path + ": column count does not match the model parameterization");
  require(t.header[0] == "chain" && t.header[1] == "iteration",
          path + ": expected leading chain and iteration columns");
  for (std::size_t j = 0; j < labels.size(); ++j)
    require(t.header[j + 2] == labels[j],
            path + ": column '" + t.header[j + 2] + "' does not match expected '" + labels[j] + "'");

  PosteriorSamples s;
  s.packing = packing;
  const Index rows = static_cast<Index>(t.rows.size());
  require(rows > 0, path + ": no draws");
  s.draws.resize(rows, static_cast<Index>(labels.size()));
  int max_chain = 0;
  for (Index r = 0; r < rows; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    const int chain = static_cast<int>(parse_double(row[0], path, static_cast<std::size_t>(r) + 2));
    max_chain = std::max(max_chain, chain);
    for (std::size_t j = 0; j < labels.size(); ++j)
      s.draws(r, static_cast<Index>(j)) =
          parse_double(row[j + 2], path, static_cast<std::size_t>(r) + 2);
  }
  const int n_chains = max_chain + 1;
  require(rows % n_chains == 0, path + ": chains have unequal lengths");
  s.chain_stats.resize(static_cast<std::size_t>(n_chains));
  s.validate();
  return s;
}

inline nlohmann::json run_metadata(std::uint64_t seed) {
  return {{"version", version_string}, {"seed", seed}};
}

}  // namespace bmmix

#endif  // BMMIX_RUN_IO_HPP
