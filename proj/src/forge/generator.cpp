#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"
#include "rvarena/evaluator.hpp"
#include "rvarena/forge.hpp"

namespace rvarena {

namespace {

constexpr double kTieNudgeDays = 1e-6;

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

void insert_resonance(Rng& rng, std::vector<PlanetElements>& planets,
                      const GeneratorConfig& cfg) {
  const int pair = uniform_int(rng, 0, static_cast<int>(planets.size()) - 2);
  const double ratio = kResonantRatios[uniform_int(rng, 0, 2)];
  const double detune = uniform(rng, -cfg.resonance_tolerance, cfg.resonance_tolerance);
  const double r = ratio * (1.0 + detune);
  auto& inner = planets[static_cast<std::size_t>(pair)];
  auto& outer = planets[static_cast<std::size_t>(pair) + 1];
  if (inner.period_days * r <= cfg.period_max_days) {
    outer.period_days = inner.period_days * r;
  } else {
    inner.period_days = outer.period_days / r;
  }
}

}  // namespace

Json generator_config_to_json(const GeneratorConfig& c) {
  // Bump the version whenever acceptance logic changes without a config field.
  return Json{{"generator_version", 2},
              {"n_planets", {c.n_planets_min, c.n_planets_max}},
              {"period_days", {c.period_min_days, c.period_max_days}},
              {"resonance_prob", c.resonance_prob},
              {"resonance_tolerance", c.resonance_tolerance},
              {"msini_mjup", {c.msini_min_mjup, c.msini_max_mjup}},
              {"ecc_beta", {c.ecc_alpha, c.ecc_beta}},
              {"ecc_max", c.ecc_max},
              {"star_mass_sun", {c.star_mass_min_sun, c.star_mass_max_sun}},
              {"n_obs", {c.n_obs_min, c.n_obs_max}},
              {"baseline_factor", {c.baseline_factor_min, c.baseline_factor_max}},
              {"log10_sigma_w", {c.log10_sigma_w_min, c.log10_sigma_w_max}},
              {"sigma_spread", c.sigma_spread},
              {"jitter_prob", c.jitter_prob},
              {"jitter_max_ms", c.jitter_max_ms},
              {"gp_prob", c.gp_prob},
              {"sigma_gp_ms", {c.sigma_gp_min_ms, c.sigma_gp_max_ms}},
              {"p_rot_days", {c.p_rot_min_days, c.p_rot_max_days}},
              {"sigmas_include_jitter", c.sigmas_include_jitter},
              {"offset_range_ms", c.offset_range_ms},
              {"multi_instrument", c.multi_instrument},
              {"min_points_per_instrument", c.min_points_per_instrument},
              {"min_significance", c.min_significance},
              {"max_period_over_baseline", c.max_period_over_baseline},
              {"require_truth_pass", c.require_truth_pass},
              {"max_attempts", c.max_attempts},
              {"noiseless", c.noiseless}};
}

std::string config_hash(const GeneratorConfig& cfg) {
  const std::string text = generator_config_to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double sample_eccentricity(Rng& rng, const GeneratorConfig& cfg) {
  for (;;) {
    const double e = beta(rng, cfg.ecc_alpha, cfg.ecc_beta);
    if (e <= cfg.ecc_max) return e;
  }
}

SampledSystem sample_system(Rng& rng, const GeneratorConfig& cfg) {
  SampledSystem sys;
  const int n = uniform_int(rng, cfg.n_planets_min, cfg.n_planets_max);
  sys.star_mass_sun = uniform(rng, cfg.star_mass_min_sun, cfg.star_mass_max_sun);
  sys.planets.resize(static_cast<std::size_t>(n));
  for (auto& p : sys.planets) {
    p.period_days = log_uniform(rng, cfg.period_min_days, cfg.period_max_days);
    p.msini_mjup = uniform(rng, cfg.msini_min_mjup, cfg.msini_max_mjup);
    p.ecc = sample_eccentricity(rng, cfg);
    p.omega_rad = uniform(rng, 0.0, constants::two_pi);
    p.node_rad = uniform(rng, 0.0, constants::two_pi);
    p.mean_longitude_rad = uniform(rng, 0.0, constants::two_pi);
  }
  auto by_period = [](const PlanetElements& a, const PlanetElements& b) {
    return a.period_days < b.period_days;
  };
  std::sort(sys.planets.begin(), sys.planets.end(), by_period);
  // The resonance draw is consumed for every system so the stream layout does
  // not depend on the multiplicity.
  const double u = uniform(rng, 0.0, 1.0);
  if (n >= 2 && u < cfg.resonance_prob) {
    insert_resonance(rng, sys.planets, cfg);
    sys.resonance_inserted = true;
    std::sort(sys.planets.begin(), sys.planets.end(), by_period);
  }
  for (auto& p : sys.planets) p = p.normalized();
  return sys;
}

std::vector<double> schedule_observations(Rng& rng, const std::vector<PlanetElements>& planets,
                                          const GeneratorConfig& cfg) {
  if (planets.empty()) {
    throw Error(ErrorKind::invalid_argument, "schedule_observations: no planets");
  }
  double p_min = planets.front().period_days;
  for (const auto& p : planets) p_min = std::min(p_min, p.period_days);
  const int n = uniform_int(rng, cfg.n_obs_min, cfg.n_obs_max);
  const double baseline =
      uniform(rng, cfg.baseline_factor_min, cfg.baseline_factor_max) * p_min;
  std::vector<double> times(static_cast<std::size_t>(n));
  for (auto& t : times) t = uniform(rng, 0.0, baseline);
  std::sort(times.begin(), times.end());
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (times[k] <= times[k - 1]) times[k] = times[k - 1] + kTieNudgeDays;
  }
  return times;
}

double draw_white_scale(std::uint64_t seed, const GeneratorConfig& cfg) {
  Rng rng = make_stream(seed, 0);
  return std::pow(10.0, uniform(rng, cfg.log10_sigma_w_min, cfg.log10_sigma_w_max));
}

int count_resonant_pairs(const std::vector<PlanetElements>& planets, double tolerance) {
  int count = 0;
  for (std::size_t a = 0; a < planets.size(); ++a) {
    for (std::size_t b = a + 1; b < planets.size(); ++b) {
      const double hi = std::max(planets[a].period_days, planets[b].period_days);
      const double lo = std::min(planets[a].period_days, planets[b].period_days);
      const double ratio = hi / lo;
      for (double r : kResonantRatios) {
        if (std::abs(ratio / r - 1.0) <= tolerance) {
          ++count;
          break;
        }
      }
    }
  }
  return count;
}

std::string synthetic_task_id(std::uint64_t seed) { return "syn_" + std::to_string(seed); }

TaskBundle generate_task(std::uint64_t seed, const GeneratorConfig& cfg) {
  const double sigma_w = draw_white_scale(seed, cfg);
  const IdentifiabilityConfig ident{cfg.min_significance, cfg.max_period_over_baseline};

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(attempt) + 1);
    SampledSystem sys = sample_system(rng, cfg);
    std::vector<double> times = schedule_observations(rng, sys.planets, cfg);
    const std::size_t n = times.size();

    NoiseSpec noise;
    noise.sigma_w_ms = sigma_w;
    noise.sigmas_include_jitter = cfg.sigmas_include_jitter;
    const double u_jit = uniform(rng, 0.0, 1.0);
    const double jit = uniform(rng, 0.0, cfg.jitter_max_ms);
    if (u_jit < cfg.jitter_prob) noise.jitter_ms = jit;
    const double u_gp = uniform(rng, 0.0, 1.0);
    const double s_gp = uniform(rng, cfg.sigma_gp_min_ms, cfg.sigma_gp_max_ms);
    const double p_rot = uniform(rng, cfg.p_rot_min_days, cfg.p_rot_max_days);
    if (u_gp < cfg.gp_prob) noise.gp = GpSpec{s_gp, p_rot};

    std::vector<double> intrinsic(n);
    for (auto& s : intrinsic) {
      s = sigma_w * uniform(rng, 1.0 - cfg.sigma_spread, 1.0 + cfg.sigma_spread);
    }

    std::vector<std::string> labels(n, instrument_label(0));
    int n_inst = 1;
    if (cfg.multi_instrument) {
      n_inst = uniform_int(rng, 2, 3);
      const int min_pts = cfg.min_points_per_instrument;
      if (static_cast<int>(n) < n_inst * min_pts) n_inst = 1;
      // contiguous blocks with cut points keeping min_pts per block
      std::vector<int> cuts;
      int lo = min_pts;
      for (int j = 1; j < n_inst; ++j) {
        const int hi = static_cast<int>(n) - (n_inst - j) * min_pts;
        const int c = uniform_int(rng, lo, hi);
        cuts.push_back(c);
        lo = c + min_pts;
      }
      int block = 0;
      for (std::size_t k = 0; k < n; ++k) {
        while (block < static_cast<int>(cuts.size()) && static_cast<int>(k) >= cuts[static_cast<std::size_t>(block)]) ++block;
        labels[k] = instrument_label(static_cast<std::size_t>(block));
      }
    }
    InstrumentOffsets offsets;
    for (int j = 0; j < n_inst; ++j) {
      offsets[instrument_label(static_cast<std::size_t>(j))] =
          uniform(rng, -cfg.offset_range_ms, cfg.offset_range_ms);
    }

    const StarContext star{sys.star_mass_sun, times.front()};
    std::vector<double> rv = rv_model(times, sys.planets, star, offsets, labels);
    if (!cfg.noiseless) {
      const auto eps = sample_noise(rng, times, intrinsic, noise);
      for (std::size_t k = 0; k < n; ++k) rv[k] += eps[k];
    }

    TaskBundle b;
    b.task_id = synthetic_task_id(seed);
    b.seed = seed;
    b.dataset.times_days = std::move(times);
    b.dataset.rvs_ms = std::move(rv);
    b.dataset.sigmas_ms.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      b.dataset.sigmas_ms[k] = reported_sigma(intrinsic[k], noise);
    }
    b.dataset.labels = std::move(labels);
    b.dataset.star_mass_sun = sys.star_mass_sun;
    b.dataset.t_ref_days = star.t_ref_days;
    b.truth_planets = std::move(sys.planets);
    b.truth_offsets = std::move(offsets);
    b.noise = noise;

    if (!is_identifiable(b, ident)) continue;
    b.difficulty = score_difficulty(b);
    b.tier = assign_tier(b.difficulty.d_total);
    // Truth must pass both with its own offsets and with fitted ones.
    if (cfg.require_truth_pass && (!evaluate(truth_submission(b, true), b).passed() ||
                                   !evaluate(truth_submission(b, false), b).passed())) {
      continue;
    }
    return b;
  }
  throw Error(ErrorKind::generation_exhausted,
              "seed " + std::to_string(seed) + ": no acceptable task after " +
                  std::to_string(cfg.max_attempts) + " draws");
}

}  // namespace rvarena
