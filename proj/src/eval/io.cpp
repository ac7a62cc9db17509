#include "rvarena/io.hpp"

#include <fstream>
#include <sstream>

#include "rvarena/error.hpp"

namespace rvarena {
namespace {

template <typename T>
T get_as(const Json& j, const char* key, ErrorKind kind) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(kind, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(kind, std::string("field '") + key + "' has the wrong type");
  }
}

double get_number(const Json& j, const char* key, ErrorKind kind) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw Error(kind, std::string("field '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

void check_version(const Json& j) {
  const int v = get_as<int>(j, "schema_version", ErrorKind::schema);
  if (v != kSchemaVersion) {
    throw Error(ErrorKind::schema, "unsupported schema_version " + std::to_string(v));
  }
}

InstrumentOffsets offsets_from_json(const Json& j, ErrorKind kind) {
  if (!j.is_object()) throw Error(kind, "offsets must be an object");
  InstrumentOffsets out;
  for (const auto& [label, value] : j.items()) {
    if (!value.is_number()) throw Error(kind, "offset '" + label + "' must be a number");
    out[label] = value.get<double>();
  }
  return out;
}

PlanetElements planet_from(const Json& j, ErrorKind kind) {
  if (!j.is_object()) throw Error(kind, "planet entry must be an object");
  PlanetElements p;
  p.period_days = get_number(j, "P_days", kind);
  p.msini_mjup = get_number(j, "m_sin_i_mjup", kind);
  p.ecc = get_number(j, "e", kind);
  p.omega_rad = get_number(j, "omega_rad", kind);
  p.mean_longitude_rad = get_number(j, "l_rad", kind);
  p.node_rad = j.contains("Omega_rad") ? get_number(j, "Omega_rad", kind) : 0.0;
  return p;
}

}  // namespace

Json planet_to_json(const PlanetElements& p) {
  return Json{{"P_days", p.period_days},
              {"m_sin_i_mjup", p.msini_mjup},
              {"e", p.ecc},
              {"omega_rad", p.omega_rad},
              {"l_rad", p.mean_longitude_rad},
              {"Omega_rad", p.node_rad}};
}

PlanetElements planet_from_json(const Json& j) { return planet_from(j, ErrorKind::schema); }

Json observations_to_json(const RvDataset& d) {
  return Json{{"times_days", d.times_days},
              {"rvs_ms", d.rvs_ms},
              {"sigmas_ms", d.sigmas_ms},
              {"labels", d.labels}};
}

Json difficulty_to_json(const DifficultyBreakdown& d) {
  return Json{{"d_base", d.d_base},   {"d_snr", d.d_snr},
              {"d_res", d.d_res},     {"d_cov", d.d_cov},
              {"d_obs", d.d_obs},     {"d_gp", d.d_gp},
              {"d_total", d.d_total}, {"snr_value", d.snr_value},
              {"coverage_ratio", d.coverage_ratio}, {"n_res", d.n_res}};
}

DifficultyBreakdown difficulty_from_json(const Json& j) {
  constexpr auto k = ErrorKind::schema;
  DifficultyBreakdown d;
  d.d_base = get_as<int>(j, "d_base", k);
  d.d_snr = get_as<int>(j, "d_snr", k);
  d.d_res = get_as<int>(j, "d_res", k);
  d.d_cov = get_as<int>(j, "d_cov", k);
  d.d_obs = get_as<int>(j, "d_obs", k);
  d.d_gp = get_as<int>(j, "d_gp", k);
  d.d_total = get_as<int>(j, "d_total", k);
  d.snr_value = get_number(j, "snr_value", k);
  d.coverage_ratio = get_number(j, "coverage_ratio", k);
  d.n_res = get_as<int>(j, "n_res", k);
  return d;
}

Json noise_to_json(const NoiseSpec& n) {
  Json j{{"sigma_w_ms", n.sigma_w_ms},
         {"jitter_ms", n.jitter_ms},
         {"sigmas_include_jitter", n.sigmas_include_jitter}};
  if (n.gp) {
    j["gp"] = Json{{"sigma_gp_ms", n.gp->sigma_gp_ms}, {"p_rot_days", n.gp->p_rot_days}};
  } else {
    j["gp"] = nullptr;
  }
  return j;
}

NoiseSpec noise_from_json(const Json& j) {
  constexpr auto k = ErrorKind::schema;
  NoiseSpec n;
  n.sigma_w_ms = get_number(j, "sigma_w_ms", k);
  n.jitter_ms = get_number(j, "jitter_ms", k);
  if (j.contains("sigmas_include_jitter")) {
    n.sigmas_include_jitter = get_as<bool>(j, "sigmas_include_jitter", k);
  }
  if (j.contains("gp") && !j.at("gp").is_null()) {
    const Json& g = j.at("gp");
    n.gp = GpSpec{get_number(g, "sigma_gp_ms", k), get_number(g, "p_rot_days", k)};
  }
  return n;
}

Json task_to_json(const TaskBundle& b) {
  return Json{{"schema_version", kSchemaVersion},
              {"task_id", b.task_id},
              {"tier", std::string(to_string(b.tier))},
              {"difficulty", b.difficulty.d_total},
              {"observations", observations_to_json(b.dataset)},
              {"star_mass_sun", b.dataset.star_mass_sun},
              {"t_ref_days", b.dataset.t_ref_days}};
}

Json truth_to_json(const TaskBundle& b) {
  Json planets = Json::array();
  for (std::size_t i = 0; i < b.truth_planets.size(); ++i) {
    Json p = planet_to_json(b.truth_planets[i]);
    if (i < b.reported_k_ms.size() && b.reported_k_ms[i]) p["K_ms"] = *b.reported_k_ms[i];
    planets.push_back(std::move(p));
  }
  Json j{{"schema_version", kSchemaVersion},
         {"task_id", b.task_id},
         {"planets", planets},
         {"offsets", b.truth_offsets},
         {"noise", noise_to_json(b.noise)},
         {"difficulty", difficulty_to_json(b.difficulty)},
         {"tier", std::string(to_string(b.tier))}};
  if (b.seed) {
    j["seed"] = *b.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j;
}

RvDataset dataset_from_task_json(const Json& task) {
  constexpr auto k = ErrorKind::schema;
  check_version(task);
  const Json& obs = task.contains("observations") ? task.at("observations") : Json();
  RvDataset d;
  d.times_days = get_as<std::vector<double>>(obs, "times_days", k);
  d.rvs_ms = get_as<std::vector<double>>(obs, "rvs_ms", k);
  d.sigmas_ms = get_as<std::vector<double>>(obs, "sigmas_ms", k);
  d.labels = get_as<std::vector<std::string>>(obs, "labels", k);
  d.star_mass_sun = get_number(task, "star_mass_sun", k);
  d.t_ref_days = get_number(task, "t_ref_days", k);
  try {
    d.validate();
  } catch (const Error& e) {
    throw Error(k, std::string("observations: ") + e.what());
  }
  return d;
}

TaskBundle bundle_from_json(const Json& task, const Json& truth) {
  constexpr auto k = ErrorKind::schema;
  check_version(truth);
  TaskBundle b;
  b.dataset = dataset_from_task_json(task);
  b.task_id = get_as<std::string>(task, "task_id", k);
  if (get_as<std::string>(truth, "task_id", k) != b.task_id) {
    throw Error(k, "task and truth documents name different tasks");
  }
  b.tier = tier_from_string(get_as<std::string>(task, "tier", k));
  if (!truth.contains("planets") || !truth.at("planets").is_array()) {
    throw Error(k, "truth.planets must be an array");
  }
  for (const auto& p : truth.at("planets")) {
    b.truth_planets.push_back(planet_from_json(p));
    if (p.contains("K_ms")) {
      b.reported_k_ms.emplace_back(get_number(p, "K_ms", k));
    } else {
      b.reported_k_ms.emplace_back(std::nullopt);
    }
  }
  bool any_reported = false;
  for (const auto& r : b.reported_k_ms) any_reported = any_reported || r.has_value();
  if (!any_reported) b.reported_k_ms.clear();
  b.truth_offsets = offsets_from_json(truth.contains("offsets") ? truth.at("offsets") : Json(), k);
  b.noise = noise_from_json(truth.contains("noise") ? truth.at("noise") : Json());
  b.difficulty = difficulty_from_json(truth.contains("difficulty") ? truth.at("difficulty") : Json());
  if (b.difficulty.d_total != get_as<int>(task, "difficulty", k)) {
    throw Error(k, "task and truth disagree on difficulty");
  }
  if (truth.contains("seed") && !truth.at("seed").is_null()) {
    b.seed = get_as<std::uint64_t>(truth, "seed", k);
  }
  return b;
}

Json submission_to_json(const Submission& sub) {
  Json planets = Json::array();
  for (const auto& p : sub.planets) planets.push_back(planet_to_json(p));
  Json j{{"planets", planets}};
  if (sub.offsets) j["offsets"] = *sub.offsets;
  return j;
}

Submission submission_from_json(const Json& j) {
  constexpr auto k = ErrorKind::rejected_submission;
  if (!j.is_object()) throw Error(k, "submission must be an object");
  if (!j.contains("planets") || !j.at("planets").is_array()) {
    throw Error(k, "submission.planets must be an array");
  }
  Submission sub;
  for (const auto& p : j.at("planets")) sub.planets.push_back(planet_from(p, k));
  if (j.contains("offsets") && !j.at("offsets").is_null()) {
    sub.offsets = offsets_from_json(j.at("offsets"), k);
  }
  return sub;
}

Json report_to_json(const CriteriaReport& r) {
  Json assignment = Json::array();
  for (const auto& m : r.assignment) {
    assignment.push_back(
        Json{{"truth_index", m.truth_index}, {"guess_index", m.guess_index}, {"d", m.distance}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"passed", r.passed()},
              {"ok_rms", r.ok_rms},
              {"ok_delta_bic", r.ok_delta_bic},
              {"ok_match", r.ok_match},
              {"ok_count", r.ok_count},
              {"rms_ms", r.rms_ms},
              {"median_sigma_ms", r.median_sigma_ms},
              {"delta_bic_per_point", r.delta_bic_per_point},
              {"match_score", r.match_score},
              {"n_truth", r.n_truth},
              {"n_guess", r.n_guess},
              {"assignment", assignment},
              {"hints", r.hints},
              {"rejected", r.rejected},
              {"rejection_reason", r.rejection_reason}};
}

CriteriaReport report_from_json(const Json& j) {
  constexpr auto k = ErrorKind::schema;
  check_version(j);
  CriteriaReport r;
  r.ok_rms = get_as<bool>(j, "ok_rms", k);
  r.ok_delta_bic = get_as<bool>(j, "ok_delta_bic", k);
  r.ok_match = get_as<bool>(j, "ok_match", k);
  r.ok_count = get_as<bool>(j, "ok_count", k);
  r.rms_ms = get_number(j, "rms_ms", k);
  r.median_sigma_ms = get_number(j, "median_sigma_ms", k);
  r.delta_bic_per_point = get_number(j, "delta_bic_per_point", k);
  r.match_score = get_number(j, "match_score", k);
  r.n_truth = get_as<std::size_t>(j, "n_truth", k);
  r.n_guess = get_as<std::size_t>(j, "n_guess", k);
  for (const auto& m : get_as<Json>(j, "assignment", k)) {
    r.assignment.push_back({get_as<std::size_t>(m, "truth_index", k),
                            get_as<std::size_t>(m, "guess_index", k), get_number(m, "d", k)});
  }
  r.hints = get_as<std::vector<std::string>>(j, "hints", k);
  r.rejected = get_as<bool>(j, "rejected", k);
  r.rejection_reason = get_as<std::string>(j, "rejection_reason", k);
  return r;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::schema, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Submission truth_submission(const TaskBundle& bundle, bool include_offsets) {
  Submission sub;
  for (const auto& p : bundle.truth_planets) {
    PlanetElements q = p;
    q.mean_longitude_rad = p.mean_longitude_rad - p.node_rad;
    q.node_rad = 0.0;
    sub.planets.push_back(q.normalized());
  }
  if (include_offsets) sub.offsets = bundle.truth_offsets;
  return sub;
}

}  // namespace rvarena
