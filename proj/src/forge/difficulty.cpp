#include <algorithm>
#include <cmath>

#include "rvarena/error.hpp"
#include "rvarena/forge.hpp"

namespace rvarena {

DifficultyBreakdown difficulty_from_inputs(const DifficultyInputs& in) {
  DifficultyBreakdown d;
  d.d_base = static_cast<int>(std::clamp<std::size_t>(in.n_planets, 1, 4));

  if (in.snr > 5.0) {
    d.d_snr = 0;
  } else if (in.snr > 2.0) {
    d.d_snr = 1;
  } else if (in.snr > 1.0) {
    d.d_snr = 2;
  } else {
    d.d_snr = 3;
  }

  d.d_res = std::min(2, in.n_res);

  if (in.coverage_ratio >= 3.0) {
    d.d_cov = 0;
  } else if (in.coverage_ratio >= 2.0) {
    d.d_cov = 1;
  } else {
    d.d_cov = 2;
  }

  if (in.n_obs >= 80) {
    d.d_obs = 0;
  } else if (in.n_obs >= 50) {
    d.d_obs = 1;
  } else if (in.n_obs >= 30) {
    d.d_obs = 2;
  } else {
    d.d_obs = 3;
  }

  if (!in.sigma_gp_ms) {
    d.d_gp = 0;
  } else if (*in.sigma_gp_ms < 0.5) {
    d.d_gp = 1;
  } else if (*in.sigma_gp_ms < 1.0) {
    d.d_gp = 2;
  } else {
    d.d_gp = 3;
  }

  const int sum = d.d_base + d.d_snr + d.d_res + d.d_cov + d.d_obs + d.d_gp;
  d.d_total = std::clamp(sum, 1, 10);
  d.snr_value = in.snr;
  d.coverage_ratio = in.coverage_ratio;
  d.n_res = in.n_res;
  return d;
}

double effective_sigma(const TaskBundle& bundle) {
  const double med = bundle.dataset.median_sigma();
  const double gp = bundle.noise.gp ? bundle.noise.gp->sigma_gp_ms : 0.0;
  return std::hypot(med, gp);
}

DifficultyInputs difficulty_inputs(const TaskBundle& bundle) {
  DifficultyInputs in;
  in.n_planets = bundle.truth_planets.size();
  in.n_obs = bundle.dataset.size();
  in.n_res = count_resonant_pairs(bundle.truth_planets);
  if (bundle.noise.gp) in.sigma_gp_ms = bundle.noise.gp->sigma_gp_ms;

  const double sigma_eff = effective_sigma(bundle);
  double k_min = 0.0;
  double p_max = 0.0;
  for (std::size_t i = 0; i < bundle.truth_planets.size(); ++i) {
    const double k = truth_semi_amplitude(bundle, i);
    k_min = (i == 0) ? k : std::min(k_min, k);
    p_max = std::max(p_max, bundle.truth_planets[i].period_days);
  }
  in.snr = sigma_eff > 0.0 ? k_min / sigma_eff : 0.0;
  in.coverage_ratio = p_max > 0.0 ? bundle.dataset.span_days() / p_max : 0.0;
  return in;
}

DifficultyBreakdown score_difficulty(const TaskBundle& bundle) {
  return difficulty_from_inputs(difficulty_inputs(bundle));
}

Tier assign_tier(int d_total) {
  if (d_total < 1 || d_total > 10) {
    throw Error(ErrorKind::invalid_argument,
                "difficulty " + std::to_string(d_total) + " outside [1, 10]");
  }
  if (d_total <= 2) return Tier::easy;
  if (d_total <= 6) return Tier::medium;
  return Tier::hard;
}

bool is_identifiable(const TaskBundle& bundle, const IdentifiabilityConfig& cfg) {
  const double sigma_eff = effective_sigma(bundle);
  const double n = static_cast<double>(bundle.dataset.size());
  const double span = bundle.dataset.span_days();
  for (std::size_t i = 0; i < bundle.truth_planets.size(); ++i) {
    const double k = truth_semi_amplitude(bundle, i);
    if (!(k * std::sqrt(n / 2.0) / sigma_eff >= cfg.min_significance)) return false;
    if (!(bundle.truth_planets[i].period_days <= cfg.max_period_over_baseline * span)) {
      return false;
    }
  }
  return true;
}

}  // namespace rvarena
