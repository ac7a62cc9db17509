#include "rvarena/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rvarena/error.hpp"

namespace rvarena {

namespace {

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.precision(12);
  return os;
}

InstrumentOffsets resolved_offsets(const RvDataset& d, const Submission& sub) {
  InstrumentOffsets off = sub.offsets.value_or(InstrumentOffsets{});
  bool missing = false;
  for (const auto& label : d.instruments()) missing = missing || !off.count(label);
  if (!missing) return off;
  const auto signal = rv_planets(d.times_days, sub.planets, d.star());
  std::vector<double> resid(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) resid[i] = d.rvs_ms[i] - signal[i];
  const auto fitted = weighted_offsets(resid, d.sigmas_ms, d.labels);
  for (const auto& [label, g] : fitted) off.emplace(label, g);
  return off;
}

}  // namespace

BaselineOutcome run_baseline(const TaskBundle& bundle, const SolverConfig& cfg) {
  BaselineOutcome out;
  const EpisodeConfig limits = EpisodeConfig::for_tier(bundle.tier);
  // The episode limits are public, so the solver respects the planet cap.
  SolverConfig capped = cfg;
  capped.max_planets = std::min(capped.max_planets, limits.max_planets_per_submission);
  out.submission = greedy_solve(bundle.dataset, capped, &out.log);
  EpisodeEngine engine(steady_clock_seconds(), true);
  const std::string id = "baseline_" + bundle.task_id;
  engine.start_episode(id, bundle, limits);
  engine.handle_submit(id, out.submission);
  out.result = engine.finalize_episode(id, FinalizeReason::agent_done);
  return out;
}

std::string periodogram_csv(const Periodogram& pg) {
  auto os = csv_stream();
  os << "frequency_per_day,period_days,power\n";
  for (std::size_t i = 0; i < pg.frequencies.size(); ++i) {
    os << pg.frequencies[i] << ',' << 1.0 / pg.frequencies[i] << ',' << pg.powers[i] << '\n';
  }
  return os.str();
}

std::string residuals_csv(const RvDataset& d, const Submission& sub) {
  Submission full = sub;
  full.offsets = resolved_offsets(d, sub);
  const auto model = forward_submission(full, d);
  auto os = csv_stream();
  os << "time_days,rv_ms,sigma_ms,label,model_ms,residual_ms\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << d.times_days[i] << ',' << d.rvs_ms[i] << ',' << d.sigmas_ms[i] << ',' << d.labels[i]
       << ',' << model[i] << ',' << d.rvs_ms[i] - model[i] << '\n';
  }
  return os.str();
}

std::string phase_fold_csv(const RvDataset& d, const Submission& sub, std::size_t index) {
  if (index >= sub.planets.size()) {
    throw Error(ErrorKind::invalid_argument, "phase fold: no planet " + std::to_string(index));
  }
  const InstrumentOffsets off = resolved_offsets(d, sub);
  std::vector<PlanetElements> others;
  for (std::size_t k = 0; k < sub.planets.size(); ++k) {
    if (k != index) others.push_back(sub.planets[k]);
  }
  const auto rest = rv_planets(d.times_days, others, d.star());
  const PlanetElements& p = sub.planets[index];
  auto os = csv_stream();
  os << "phase,time_days,rv_ms,sigma_ms,label,model_ms\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.times_days[i];
    double phase = std::fmod((t - d.t_ref_days) / p.period_days, 1.0);
    if (phase < 0.0) phase += 1.0;
    os << phase << ',' << t << ',' << d.rvs_ms[i] - rest[i] - off.at(d.labels[i]) << ','
       << d.sigmas_ms[i] << ',' << d.labels[i] << ',' << rv_single(t, p, d.star()) << '\n';
  }
  return os.str();
}

}  // namespace rvarena
