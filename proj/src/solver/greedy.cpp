#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rvarena/error.hpp"
#include "rvarena/solver.hpp"

namespace rvarena {

namespace {

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

struct Model {
  std::vector<PlanetElements> planets;
  InstrumentOffsets offsets;
  double bic = 0.0;
};

std::vector<double> residuals(const RvDataset& d, const Model& m) {
  const auto pred = rv_model(d.times_days, m.planets, d.star(), m.offsets, d.labels);
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.rvs_ms[i] - pred[i];
  return r;
}

Model null_model(const RvDataset& d) {
  Model m;
  m.offsets = weighted_offsets(d.rvs_ms, d.sigmas_ms, d.labels);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = (d.rvs_ms[i] - m.offsets.at(d.labels[i])) / d.sigmas_ms[i];
    chi2 += r * r;
  }
  m.bic = chi2 + static_cast<double>(m.offsets.size()) * std::log(static_cast<double>(d.size()));
  return m;
}

// Fits a new planet at `period` to the residuals of `base`, then refits all
// planets jointly.
Model try_candidate(const RvDataset& d, const Model& base, const std::vector<double>& resid,
                    double period, const FitOptions& opts) {
  RvDataset rd = d;
  rd.rvs_ms = resid;
  const SineFit sine = fit_one_sine(rd, period);
  const PlanetElements circular = sine.as_planet(d.star_mass_sun);

  PlanetElements added = circular;
  try {
    added = fit_keplerian(rd, std::vector<PlanetElements>{circular}, opts).planets.front();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::fit_failure) throw;
  }

  std::vector<PlanetElements> init = base.planets;
  init.push_back(added);
  InstrumentOffsets offsets = base.offsets;
  for (const auto& [label, g] : sine.offsets) offsets[label] += g;

  bool conv = false;
  const FitResult joint = refine_keplerian(d, init, offsets, conv, opts);
  Model m;
  m.planets = joint.planets;
  m.offsets = joint.offsets;
  m.bic = joint.bic;
  return m;
}

}  // namespace

Submission greedy_solve(const RvDataset& dataset, const SolverConfig& cfg, SolverLog* log) {
  auto note = [&](std::string line) {
    if (log) log->lines.push_back(std::move(line));
  };
  Model current = null_model(dataset);
  note(format("null model: BIC = %.3f", current.bic));

  if (dataset.size() < 5) {
    note("fewer than 5 observations; no search");
    return Submission{{}, current.offsets};
  }
  const PeriodogramGrid grid = default_grid(dataset);

  const double median_sigma = dataset.median_sigma();
  while (current.planets.size() < cfg.max_planets) {
    const auto resid = residuals(dataset, current);
    const RmsOutcome fit_rms = rms_check(resid, std::vector<double>(resid.size(), 0.0),
                                         dataset.sigmas_ms);
    if (cfg.rms_stop_factor > 0.0 && fit_rms.rms <= cfg.rms_stop_factor * median_sigma) {
      note(format("residual RMS %.4f <= %.2f x median sigma %.4f; stop", fit_rms.rms,
                  cfg.rms_stop_factor, median_sigma));
      break;
    }
    const Periodogram pg =
        gls_periodogram(dataset.times_days, resid, dataset.sigmas_ms, grid, 1);
    if (pg.peaks.empty()) {
      note("periodogram flat; stop");
      break;
    }
    const PeriodogramPeak top = pg.peaks.front();
    note(format("step %.0f: top peak P = %.6f d, power = %.4f",
                static_cast<double>(current.planets.size() + 1), top.period_days, top.power));

    std::vector<double> candidates{top.period_days};
    for (double alias : alias_family(top.period_days)) {
      if (alias <= cfg.fit.min_period_days) continue;
      if (1.0 / alias < grid.f_min) continue;
      const double pw = gls_power(dataset.times_days, resid, dataset.sigmas_ms, 1.0 / alias);
      if (pw >= cfg.alias_power_fraction * top.power) {
        candidates.push_back(alias);
        note(format("  alias candidate P = %.6f d, power = %.4f", alias, pw));
      }
      if (candidates.size() >= cfg.n_candidates) break;
    }

    Model best;
    bool have = false;
    for (double p : candidates) {
      Model m;
      try {
        m = try_candidate(dataset, current, resid, p, cfg.fit);
      } catch (const Error& e) {
        note(std::string("  candidate failed: ") + e.what());
        continue;
      }
      note(format("  candidate P = %.6f d -> BIC = %.3f", p, m.bic));
      if (!have || m.bic < best.bic) {
        best = std::move(m);
        have = true;
      }
    }
    if (!have) break;
    const double gain = current.bic - best.bic;
    if (gain > cfg.bic_gate) {
      note(format("  accept: BIC gain %.3f", gain));
      current = std::move(best);
    } else {
      note(format("  reject: BIC gain %.3f <= %.1f", gain, cfg.bic_gate));
      break;
    }
  }

  Submission sub;
  for (const auto& p : current.planets) {
    if (p.msini_mjup > 0.0) sub.planets.push_back(p);
  }
  sub.offsets = current.offsets;
  note(format("final: %.0f planet(s), BIC = %.3f", static_cast<double>(sub.planets.size()),
              current.bic));
  return sub;
}

}  // namespace rvarena
