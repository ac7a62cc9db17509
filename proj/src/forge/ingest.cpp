#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"
#include "rvarena/evaluator.hpp"
#include "rvarena/forge.hpp"

namespace rvarena {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

int find_column(const std::vector<std::string>& header,
                std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    for (const char* n : names) {
      if (h == n) return static_cast<int>(i);
    }
  }
  return -1;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ingestion,
                "line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  }
}

}  // namespace

std::string instrument_label(std::size_t index) {
  std::string suffix;
  std::size_t i = index;
  do {
    suffix.insert(suffix.begin(), static_cast<char>('A' + i % 26));
    i = i / 26;
  } while (i-- > 0);
  return "inst_" + suffix;
}

std::vector<ArchiveRow> parse_archive_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  char delim = ',';
  std::size_t line_no = 0;
  int c_time = -1, c_rv = -1, c_sigma = -1, c_inst = -1;
  std::vector<ArchiveRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (header.empty()) {
      if (t.find(',') != std::string::npos) {
        delim = ',';
      } else if (t.find('\t') != std::string::npos) {
        delim = '\t';
      } else {
        delim = ' ';
      }
      header = split(t, delim);
      c_time = find_column(header, {"time", "t", "bjd", "jd", "times_days", "time_days"});
      c_rv = find_column(header, {"rv", "vrad", "velocity", "rv_ms", "rvs_ms"});
      c_sigma = find_column(header, {"sigma", "err", "rv_err", "svrad", "error", "sigma_ms",
                                     "sigmas_ms", "e_rv"});
      c_inst = find_column(header, {"instrument", "inst", "label", "telescope"});
      if (c_time < 0) throw Error(ErrorKind::ingestion, "no time column in header");
      if (c_rv < 0) throw Error(ErrorKind::ingestion, "no rv column in header");
      if (c_sigma < 0) throw Error(ErrorKind::ingestion, "no sigma column in header");
      continue;
    }
    const auto fields = split(t, delim);
    const int need = std::max({c_time, c_rv, c_sigma, c_inst});
    if (static_cast<int>(fields.size()) <= need) {
      throw Error(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": too few columns");
    }
    ArchiveRow r;
    r.time = parse_double(fields[static_cast<std::size_t>(c_time)], line_no);
    r.rv = parse_double(fields[static_cast<std::size_t>(c_rv)], line_no);
    const std::string& s = fields[static_cast<std::size_t>(c_sigma)];
    if (s.empty()) {
      throw Error(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": missing sigma");
    }
    r.sigma = parse_double(s, line_no);
    r.instrument = c_inst >= 0 ? fields[static_cast<std::size_t>(c_inst)] : std::string("default");
    rows.push_back(std::move(r));
  }
  if (header.empty()) throw Error(ErrorKind::ingestion, "empty table");
  return rows;
}

std::vector<ArchiveRow> read_archive_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ingestion, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_archive_table(buf.str());
}

ArchiveTruth archive_truth_from_json(const Json& j) {
  constexpr auto k = ErrorKind::schema;
  auto number = [&](const Json& o, const char* key) {
    if (!o.contains(key) || !o.at(key).is_number()) {
      throw Error(k, std::string("truth field '") + key + "' must be a number");
    }
    return o.at(key).get<double>();
  };
  ArchiveTruth t;
  t.star_mass_sun = number(j, "star_mass_sun");
  if (!j.contains("planets") || !j.at("planets").is_array()) {
    throw Error(k, "truth.planets must be an array");
  }
  for (const auto& p : j.at("planets")) {
    ArchivePlanet a;
    a.period_days = number(p, "P_days");
    a.ecc = number(p, "e");
    a.omega_rad = number(p, "omega_rad");
    if (p.contains("Omega_rad")) a.node_rad = number(p, "Omega_rad");
    if (p.contains("m_sin_i_mjup")) a.msini_mjup = number(p, "m_sin_i_mjup");
    if (p.contains("K_ms")) a.k_ms = number(p, "K_ms");
    if (p.contains("l_rad")) a.mean_longitude_rad = number(p, "l_rad");
    if (p.contains("tp_days")) a.periastron_time = number(p, "tp_days");
    if (!a.msini_mjup && !a.k_ms) throw Error(k, "planet needs m_sin_i_mjup or K_ms");
    if (!a.mean_longitude_rad && !a.periastron_time) throw Error(k, "planet needs l_rad or tp_days");
    if (a.ecc > 0.99 || a.ecc < 0.0) {
      throw Error(ErrorKind::invalid_truth, "truth eccentricity outside [0, 0.99]");
    }
    if (!(a.period_days > 0.0)) throw Error(ErrorKind::invalid_truth, "truth period must be positive");
    t.planets.push_back(a);
  }
  if (j.contains("offsets")) {
    for (const auto& [name, v] : j.at("offsets").items()) {
      if (!v.is_number()) throw Error(k, "offset '" + name + "' must be a number");
      t.offsets[name] = v.get<double>();
    }
  }
  if (j.contains("jitter_ms")) t.jitter_ms = number(j, "jitter_ms");
  if (j.contains("gp") && !j.at("gp").is_null()) {
    t.gp = GpSpec{number(j.at("gp"), "sigma_gp_ms"), number(j.at("gp"), "p_rot_days")};
  }
  return t;
}

TaskBundle ingest_archive(std::vector<ArchiveRow> rows, const ArchiveTruth& truth,
                          const std::string& task_id) {
  if (rows.empty()) throw Error(ErrorKind::ingestion, "no observations");
  for (const auto& r : rows) {
    if (!std::isfinite(r.time) || !std::isfinite(r.rv)) {
      throw Error(ErrorKind::ingestion, "non-finite time or velocity");
    }
    if (!(r.sigma > 0.0) || !std::isfinite(r.sigma)) {
      throw Error(ErrorKind::ingestion, "sigma must be positive");
    }
  }
  for (const auto& p : truth.planets) {
    if (p.ecc > 0.99) throw Error(ErrorKind::invalid_truth, "truth eccentricity above 0.99");
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ArchiveRow& a, const ArchiveRow& b) { return a.time < b.time; });

  const double t0 = rows.front().time;
  std::map<std::string, std::string> names;
  TaskBundle b;
  b.task_id = task_id;
  RvDataset& d = b.dataset;
  for (const auto& r : rows) {
    auto it = names.find(r.instrument);
    if (it == names.end()) {
      it = names.emplace(r.instrument, instrument_label(names.size())).first;
    }
    double t = r.time - t0;
    if (!d.times_days.empty() && t <= d.times_days.back()) t = d.times_days.back() + 1e-6;
    d.times_days.push_back(t);
    d.rvs_ms.push_back(r.rv);
    d.sigmas_ms.push_back(r.sigma);
    d.labels.push_back(it->second);
  }
  d.star_mass_sun = truth.star_mass_sun;
  d.t_ref_days = 0.0;

  bool any_k = false;
  for (const auto& a : truth.planets) {
    PlanetElements p;
    p.period_days = a.period_days;
    p.ecc = a.ecc;
    p.omega_rad = a.omega_rad;
    p.node_rad = a.node_rad;
    p.msini_mjup = a.msini_mjup ? *a.msini_mjup
                                : msini_from_semi_amplitude(*a.k_ms, a.period_days, a.ecc,
                                                            truth.star_mass_sun);
    if (a.mean_longitude_rad) {
      p.mean_longitude_rad = *a.mean_longitude_rad;
    } else {
      const double m0 = constants::two_pi * (t0 - *a.periastron_time) / a.period_days;
      p.mean_longitude_rad = a.node_rad + a.omega_rad + m0;
    }
    b.truth_planets.push_back(p.normalized());
    b.reported_k_ms.push_back(a.k_ms);
    any_k = any_k || a.k_ms.has_value();
  }
  if (!any_k) b.reported_k_ms.clear();

  // Offsets: published values where given, otherwise the weighted optimum
  // against the truth signal.
  const auto signal = rv_planets(d.times_days, b.truth_planets, d.star());
  std::vector<double> resid(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) resid[k] = d.rvs_ms[k] - signal[k];
  const InstrumentOffsets fitted = weighted_offsets(resid, d.sigmas_ms, d.labels);
  for (const auto& [raw, label] : names) {
    const auto it = truth.offsets.find(raw);
    b.truth_offsets[label] = it != truth.offsets.end() ? it->second : fitted.at(label);
  }

  b.noise.sigma_w_ms = d.median_sigma();
  b.noise.jitter_ms = truth.jitter_ms;
  b.noise.gp = truth.gp;
  b.noise.sigmas_include_jitter = false;
  b.difficulty = score_difficulty(b);
  b.tier = assign_tier(b.difficulty.d_total);
  return b;
}

}  // namespace rvarena
