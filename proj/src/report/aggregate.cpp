#include <algorithm>
#include <cstdio>
#include <sstream>

#include "rvarena/error.hpp"
#include "rvarena/report.hpp"

namespace rvarena {

namespace {

constexpr Tier kTiers[] = {Tier::easy, Tier::medium, Tier::hard};

struct Tally {
  std::size_t n = 0, pass = 0, rms = 0, bic = 0, match = 0, count = 0, env_done = 0;
  std::size_t predicted = 0;

  void add(const EpisodeResult& r) {
    ++n;
    if (r.status == EpisodeStatus::env_done) ++env_done;
    if (r.best_report) {
      const CriteriaReport& b = *r.best_report;
      pass += b.passed() ? 1 : 0;
      rms += b.ok_rms ? 1 : 0;
      bic += b.ok_delta_bic ? 1 : 0;
      match += b.ok_match ? 1 : 0;
      count += b.ok_count ? 1 : 0;
      predicted += b.n_guess;
    }
  }

  CriterionRates rates() const {
    CriterionRates c;
    c.n_tasks = n;
    if (n == 0) return c;
    const auto pct_of = [this](std::size_t k) {
      return 100.0 * static_cast<double>(k) / static_cast<double>(n);
    };
    c.pass = pct_of(pass);
    c.rms = pct_of(rms);
    c.delta_bic = pct_of(bic);
    c.match = pct_of(match);
    c.count = pct_of(count);
    c.env_done = pct_of(env_done);
    c.mean_predicted_count = static_cast<double>(predicted) / static_cast<double>(n);
    return c;
  }
};

void check_group(const CriterionRates& c, const std::string& name) {
  for (double v : {c.pass, c.rms, c.delta_bic, c.match, c.count, c.env_done}) {
    if (!(v >= 0.0 && v <= 100.0)) {
      throw Error(ErrorKind::aggregation, name + ": rate outside [0, 100]");
    }
  }
  const double floor = std::min({c.rms, c.delta_bic, c.match, c.count});
  if (c.pass > floor + 1e-9) {
    throw Error(ErrorKind::aggregation, name + ": pass rate above a criterion rate");
  }
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

Json rates_to_json(const CriterionRates& c) {
  return Json{{"n_tasks", c.n_tasks},     {"pass", c.pass},
              {"rms", c.rms},             {"delta_bic", c.delta_bic},
              {"match", c.match},         {"count", c.count},
              {"env_done", c.env_done},   {"mean_predicted_count", c.mean_predicted_count}};
}

}  // namespace

bool passes_at(const CriteriaReport& report, double tau) {
  if (report.rejected) return false;
  return report.ok_rms && report.ok_delta_bic && report.ok_count && report.match_score >= tau;
}

void AggregateReport::check_invariants() const {
  check_group(overall, "all");
  for (const auto& [tier, c] : per_tier) check_group(c, std::string(to_string(tier)));
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!(sweep[i].pass >= 0.0 && sweep[i].pass <= 100.0)) {
      throw Error(ErrorKind::aggregation, "sweep rate outside [0, 100]");
    }
    if (i > 0 && sweep[i].threshold > sweep[i - 1].threshold &&
        sweep[i].pass > sweep[i - 1].pass + 1e-9) {
      throw Error(ErrorKind::aggregation, "sweep pass rate increases with threshold");
    }
  }
}

AggregateReport aggregate_results(std::span<const EpisodeResult> results,
                                  std::span<const double> thresholds) {
  if (results.empty()) throw Error(ErrorKind::aggregation, "no result files");
  AggregateReport a;
  Tally all;
  std::map<Tier, Tally> tiers;
  for (const auto& r : results) {
    all.add(r);
    tiers[r.tier].add(r);
  }
  a.overall = all.rates();
  for (const auto& [tier, t] : tiers) a.per_tier[tier] = t.rates();

  std::vector<double> taus(thresholds.begin(), thresholds.end());
  std::sort(taus.begin(), taus.end());
  for (double tau : taus) {
    SweepPoint p;
    p.threshold = tau;
    std::size_t n_pass = 0;
    std::map<Tier, std::size_t> tier_pass;
    for (const auto& r : results) {
      if (r.best_report && passes_at(*r.best_report, tau)) {
        ++n_pass;
        ++tier_pass[r.tier];
      }
    }
    p.pass = 100.0 * static_cast<double>(n_pass) / static_cast<double>(results.size());
    for (const auto& [tier, t] : tiers) {
      p.per_tier[tier] = 100.0 * static_cast<double>(tier_pass[tier]) / static_cast<double>(t.n);
    }
    a.sweep.push_back(std::move(p));
  }
  a.check_invariants();
  return a;
}

AggregateReport aggregate_report(std::span<const Json> result_docs,
                                 std::span<const double> thresholds) {
  if (result_docs.empty()) throw Error(ErrorKind::aggregation, "no result files");
  std::optional<int> version;
  std::vector<EpisodeResult> results;
  results.reserve(result_docs.size());
  for (const auto& doc : result_docs) {
    if (!doc.is_object() || !doc.contains("schema_version") ||
        !doc.at("schema_version").is_number_integer()) {
      throw Error(ErrorKind::schema, "result document without integer schema_version");
    }
    const int v = doc.at("schema_version").get<int>();
    if (version && *version != v) {
      throw Error(ErrorKind::aggregation, "mixed schema versions " + std::to_string(*version) +
                                              " and " + std::to_string(v));
    }
    version = v;
    results.push_back(result_from_json(doc));
  }
  return aggregate_results(results, thresholds);
}

Json aggregate_to_json(const AggregateReport& a) {
  Json tiers = Json::object();
  for (const auto& [tier, c] : a.per_tier) tiers[std::string(to_string(tier))] = rates_to_json(c);
  Json sweep = Json::array();
  for (const auto& p : a.sweep) {
    Json per = Json::object();
    for (const auto& [tier, v] : p.per_tier) per[std::string(to_string(tier))] = v;
    sweep.push_back(Json{{"threshold", p.threshold}, {"pass", p.pass}, {"per_tier", per}});
  }
  return Json{{"schema_version", a.schema_version},
              {"overall", rates_to_json(a.overall)},
              {"per_tier", tiers},
              {"sweep", sweep}};
}

std::string aggregate_to_text(const AggregateReport& a) {
  std::ostringstream os;
  os << "tier     n     pass    rms     dbic    match   count   env_done  mean_n\n";
  auto row = [&](const std::string& name, const CriterionRates& c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %-5zu %-7s %-7s %-7s %-7s %-7s %-9s %.2f\n",
                  name.c_str(), c.n_tasks, pct(c.pass).c_str(), pct(c.rms).c_str(),
                  pct(c.delta_bic).c_str(), pct(c.match).c_str(), pct(c.count).c_str(),
                  pct(c.env_done).c_str(), c.mean_predicted_count);
    os << buf;
  };
  for (Tier t : kTiers) {
    if (const auto it = a.per_tier.find(t); it != a.per_tier.end()) {
      row(std::string(to_string(t)), it->second);
    }
  }
  row("all", a.overall);
  if (!a.sweep.empty()) {
    os << "\nmatch threshold sweep (pass %)\n";
    for (const auto& p : a.sweep) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "  tau=%.2f  %s", p.threshold, pct(p.pass).c_str());
      os << buf;
      for (const auto& [tier, v] : p.per_tier) os << "  " << to_string(tier) << '=' << pct(v);
      os << '\n';
    }
  }
  return os.str();
}

std::string sweep_to_csv(const AggregateReport& a) {
  std::ostringstream os;
  os << "tau,all,easy,medium,hard\n";
  for (const auto& p : a.sweep) {
    os << p.threshold << ',' << p.pass;
    for (Tier t : kTiers) {
      os << ',';
      if (const auto it = p.per_tier.find(t); it != p.per_tier.end()) os << it->second;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rvarena
