#ifndef BMMIX_DATASET_HPP
#define BMMIX_DATASET_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmmix/csv.hpp"
#include "bmmix/location.hpp"

namespace bmmix {

using LocationMap = std::unordered_map<Location, double, LocationHash>;

struct Observation {
  Location loc;
  double y = 0.0;
  std::string id;  // optional measurement id
};

struct ObservationSet {
  std::vector<Observation> entries;

  std::size_t size() const { return entries.size(); }

  void add(Observation obs) {
    require(std::isfinite(obs.y), "ObservationSet: y must be finite at " + obs.loc.str());
    for (const auto& e : entries)
      if (e.loc == obs.loc)
        throw validation_error("ObservationSet: duplicate location " + obs.loc.str());
    entries.push_back(std::move(obs));
  }
};

// Predictions (and optional systematic corrections) of one theoretical model.
struct ModelTable {
  std::string model_name;
  LocationMap predictions;
  std::optional<LocationMap> corrections;

  bool has_correction_for(const Location& loc) const {
    return corrections && corrections->count(loc) > 0;
  }
};

// Observations joined with every model's prediction on a shared row order.
struct AlignedDataset {
  std::vector<Location> locations;
  VectorXd y;
  MatrixXd F;                // n x p raw predictions
  std::optional<MatrixXd> D; // n x p corrections, present only if all models carry them
  std::vector<std::string> model_names;

  Index n() const { return y.size(); }
  Index p() const { return F.cols(); }

  // f_k + delta_k when corrections are requested, raw f_k otherwise.
  MatrixXd effective_predictions(bool use_corrections) const {
    if (!use_corrections) return F;
    require(D.has_value(), "AlignedDataset: corrections requested but not loaded");
    return F + *D;
  }

  AlignedDataset subset(const std::vector<std::size_t>& ids) const {
    AlignedDataset out;
    out.model_names = model_names;
    out.locations.reserve(ids.size());
    out.y.resize(static_cast<Index>(ids.size()));
    out.F.resize(static_cast<Index>(ids.size()), F.cols());
    if (D) out.D = MatrixXd(static_cast<Index>(ids.size()), F.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
      require(ids[r] < locations.size(), "subset: index out of range");
      const auto i = static_cast<Index>(ids[r]);
      out.locations.push_back(locations[ids[r]]);
      out.y[static_cast<Index>(r)] = y[i];
      out.F.row(static_cast<Index>(r)) = F.row(i);
      if (D) (*out.D).row(static_cast<Index>(r)) = D->row(i);
    }
    return out;
  }
};

// Index sets into an ObservationSet row order. The evidence set may overlap
// the training set; test indices must not.
struct SplitSpec {
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> evidence_ids;
  std::vector<std::size_t> test_ids;
  std::vector<std::size_t> exclusions;

  void validate() const {
    std::set<std::size_t> train(train_ids.begin(), train_ids.end());
    for (auto t : test_ids)
      require(train.count(t) == 0, "SplitSpec: test id " + std::to_string(t) + " also in train");
  }

  // Exclusions drop training rows for runs on uncorrected models; corrected
  // runs keep the full training set.
  std::vector<std::size_t> effective_train(bool use_corrections) const {
    if (use_corrections || exclusions.empty()) return train_ids;
    std::set<std::size_t> excl(exclusions.begin(), exclusions.end());
    std::vector<std::size_t> out;
    for (auto i : train_ids)
      if (!excl.count(i)) out.push_back(i);
    return out;
  }
};

inline void to_json(nlohmann::json& j, const SplitSpec& s) {
  j = nlohmann::json{{"train", s.train_ids},
                     {"evidence", s.evidence_ids},
                     {"test", s.test_ids},
                     {"exclusions", s.exclusions}};
}

inline void from_json(const nlohmann::json& j, SplitSpec& s) {
  j.at("train").get_to(s.train_ids);
  j.at("evidence").get_to(s.evidence_ids);
  j.at("test").get_to(s.test_ids);
  if (j.contains("exclusions")) j.at("exclusions").get_to(s.exclusions);
  s.validate();
}

inline SplitSpec load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  return j.get<SplitSpec>();
}

inline void save_split(const SplitSpec& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open for writing: " + path);
  out << nlohmann::json(s).dump(2) << "\n";
}

// Observations CSV with required columns Z, N, value and an optional id.
inline ObservationSet load_observations(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto zc = t.require_column("Z", path);
  const auto nc = t.require_column("N", path);
  const auto vc = t.require_column("value", path);
  const auto idc = t.find("id");
  ObservationSet obs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Observation o;
    o.loc = Location::zn(parse_double(row[zc], path, r + 2), parse_double(row[nc], path, r + 2));
    o.y = parse_double(row[vc], path, r + 2);
    if (idc) o.id = row[*idc];
    try {
      obs.add(std::move(o));
    } catch (const validation_error& e) {
      throw validation_error(path + ": row " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  return obs;
}

// Per-model CSV with columns Z, N, f and optionally delta.
inline ModelTable load_model_table(const std::string& path, const std::string& name) {
  const CsvTable t = read_csv(path);
  const auto zc = t.require_column("Z", path);
  const auto nc = t.require_column("N", path);
  const auto fc = t.require_column("f", path);
  const auto dc = t.find("delta");
  ModelTable m;
  m.model_name = name;
  if (dc) m.corrections = LocationMap{};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const Location loc =
        Location::zn(parse_double(row[zc], path, r + 2), parse_double(row[nc], path, r + 2));
    const double f = parse_double(row[fc], path, r + 2);
    if (m.predictions.count(loc))
      throw validation_error(path + ": row " + std::to_string(r + 2) + ": duplicate location " +
                             loc.str());
    m.predictions[loc] = f;
    if (dc) (*m.corrections)[loc] = parse_double(row[*dc], path, r + 2);
  }
  return m;
}

enum class CorrectionMode {
  Auto,      // load corrections when every model provides them, error on a mix
  Disabled,  // ignore corrections entirely
};

inline AlignedDataset align(const ObservationSet& obs, const std::vector<ModelTable>& models,
                            CorrectionMode mode = CorrectionMode::Auto) {
  require(!models.empty(), "align: at least one model required");
  AlignedDataset ds;
  const auto n = static_cast<Index>(obs.size());
  const auto p = static_cast<Index>(models.size());
  ds.y.resize(n);
  ds.F.resize(n, p);
  ds.locations.reserve(obs.size());
  for (const auto& m : models) ds.model_names.push_back(m.model_name);

  bool want_corrections = false;
  if (mode == CorrectionMode::Auto) {
    const std::size_t with = static_cast<std::size_t>(
        std::count_if(models.begin(), models.end(),
                      [](const ModelTable& m) { return m.corrections.has_value(); }));
    if (with > 0 && with < models.size()) {
      std::string have, missing;
      for (const auto& m : models)
        (m.corrections ? have : missing) += " " + m.model_name;
      throw validation_error("align: mixed correction availability (have:" + have +
                             "; missing:" + missing +
                             "); disable corrections explicitly to proceed");
    }
    want_corrections = with == models.size();
  }
  if (want_corrections) ds.D = MatrixXd(n, p);

  for (Index i = 0; i < n; ++i) {
    const auto& o = obs.entries[static_cast<std::size_t>(i)];
    ds.locations.push_back(o.loc);
    ds.y[i] = o.y;
    for (Index k = 0; k < p; ++k) {
      const auto& m = models[static_cast<std::size_t>(k)];
      const auto it = m.predictions.find(o.loc);
      if (it == m.predictions.end())
        throw validation_error(m.model_name + " missing " + o.loc.str());
      ds.F(i, k) = it->second;
      if (want_corrections) {
        const auto dit = m.corrections->find(o.loc);
        if (dit == m.corrections->end())
          throw validation_error(m.model_name + " missing correction at " + o.loc.str());
        (*ds.D)(i, k) = dit->second;
      }
    }
  }
  return ds;
}

enum class CombineRule { Mean, PerModel };

// Locations where the combined raw-model prediction is positive. Mean
// averages the models; PerModel keeps a location only when every model is
// positive there.
inline std::vector<Location> positive_domain(const std::vector<ModelTable>& models,
                                             CombineRule rule = CombineRule::Mean) {
  require(!models.empty(), "positive_domain: no models");
  // grid = locations present in every table
  std::vector<Location> grid;
  for (const auto& [loc, f] : models.front().predictions) {
    (void)f;
    bool everywhere = true;
    for (std::size_t k = 1; k < models.size(); ++k)
      if (!models[k].predictions.count(loc)) {
        everywhere = false;
        break;
      }
    if (everywhere) grid.push_back(loc);
  }
  require(!grid.empty(), "positive_domain: empty shared grid");
  std::vector<Location> out;
  for (const auto& loc : grid) {
    if (rule == CombineRule::Mean) {
      double s = 0.0;
      for (const auto& m : models) s += m.predictions.at(loc);
      if (s / static_cast<double>(models.size()) > 0.0) out.push_back(loc);
    } else {
      bool all_pos = true;
      for (const auto& m : models)
        if (!(m.predictions.at(loc) > 0.0)) {
          all_pos = false;
          break;
        }
      if (all_pos) out.push_back(loc);
    }
  }
  return out;
}

// Same filter against an explicit prediction map (e.g. the posterior-mean
// mixture evaluated on an extrapolation grid).
inline std::vector<Location> positive_domain(const LocationMap& combined) {
  require(!combined.empty(), "positive_domain: empty grid");
  std::vector<Location> out;
  for (const auto& [loc, v] : combined)
    if (v > 0.0) out.push_back(loc);
  return out;
}

// The eight evidence nuclei used for the nuclear case study, as (Z, N).
inline std::vector<Location> default_nuclear_evidence_locations() {
  return {Location::zn(24, 40),  Location::zn(44, 72),  Location::zn(60, 100),
          Location::zn(72, 96),  Location::zn(88, 144), Location::zn(68, 80),
          Location::zn(84, 104), Location::zn(98, 144)};
}

// Default nuclear split: train on everything, evidence on the eight nuclei
// above, empty test (the test set lives in a separate later-evaluation file).
inline SplitSpec make_default_nuclear_split(const ObservationSet& obs) {
  SplitSpec s;
  const auto evidence = default_nuclear_evidence_locations();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    s.train_ids.push_back(i);
    for (const auto& e : evidence)
      if (obs.entries[i].loc == e) s.evidence_ids.push_back(i);
  }
  require(s.evidence_ids.size() == evidence.size(),
          "make_default_nuclear_split: observation set does not contain all evidence nuclei");
  return s;
}

}  // namespace bmmix

#endif  // BMMIX_DATASET_HPP
