#include "rvarena/orbit.hpp"

#include <cmath>
#include <string>

#include "rvarena/angles.hpp"
#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"

namespace rvarena {

namespace {

constexpr int kNewtonMaxIter = 50;
constexpr double kNewtonTol = 1e-13;

double kepler_residual(double ecc_anom, double ecc, double mean_anom) {
  return ecc_anom - ecc * std::sin(ecc_anom) - mean_anom;
}

double bisect_kepler(double mean_anom, double ecc) {
  double lo = 0.0;
  double hi = constants::two_pi;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kepler_residual(mid, ecc, mean_anom) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_ecc(double ecc) {
  if (!std::isfinite(ecc) || ecc < 0.0 || ecc >= 1.0) {
    throw Error(ErrorKind::invalid_argument,
                "eccentricity must satisfy 0 <= e < 1, got " + std::to_string(ecc));
  }
}

}  // namespace

PlanetElements PlanetElements::normalized() const {
  PlanetElements p = *this;
  p.omega_rad = wrap_two_pi(omega_rad);
  p.mean_longitude_rad = wrap_two_pi(mean_longitude_rad);
  p.node_rad = wrap_two_pi(node_rad);
  return p;
}

double solve_kepler(double mean_anomaly, double ecc) {
  if (!std::isfinite(mean_anomaly)) {
    throw Error(ErrorKind::invalid_argument, "mean anomaly is not finite");
  }
  check_ecc(ecc);

  const double m = wrap_two_pi(mean_anomaly);
  if (ecc == 0.0) return m;

  double e_anom = m + ecc * std::sin(m);
  bool converged = false;
  for (int i = 0; i < kNewtonMaxIter; ++i) {
    const double f = kepler_residual(e_anom, ecc, m);
    const double fp = 1.0 - ecc * std::cos(e_anom);
    const double step = f / fp;
    e_anom -= step;
    if (!std::isfinite(e_anom)) break;
    if (std::abs(step) <= kNewtonTol) {
      converged = std::abs(kepler_residual(e_anom, ecc, m)) <= 1e-12;
      break;
    }
  }
  if (!converged) e_anom = bisect_kepler(m, ecc);
  return wrap_two_pi(e_anom);
}

double true_anomaly_from_eccentric(double eccentric_anomaly, double ecc) {
  const double half = 0.5 * eccentric_anomaly;
  return 2.0 * std::atan2(std::sqrt(1.0 + ecc) * std::sin(half),
                          std::sqrt(1.0 - ecc) * std::cos(half));
}

AnomalyState anomalies(double mean_anomaly, double ecc) {
  AnomalyState s;
  s.mean = wrap_two_pi(mean_anomaly);
  s.eccentric = solve_kepler(s.mean, ecc);
  s.true_anomaly = true_anomaly_from_eccentric(s.eccentric, ecc);
  return s;
}

double semi_amplitude(const PlanetElements& planet, const StarContext& star) {
  check_ecc(planet.ecc);
  if (!(planet.period_days > 0.0) || !(star.mass_sun > 0.0) ||
      !(planet.msini_mjup >= 0.0)) {
    throw Error(ErrorKind::invalid_argument,
                "semi_amplitude needs P > 0, m sin i >= 0 and M_star > 0");
  }
  const double period_s = planet.period_days * constants::seconds_per_day;
  const double gm_planet = planet.msini_mjup * constants::gm_jup;
  const double gm_total = star.mass_sun * constants::gm_sun + gm_planet;
  return std::cbrt(constants::two_pi / period_s) * gm_planet /
         std::pow(gm_total, 2.0 / 3.0) / std::sqrt(1.0 - planet.ecc * planet.ecc);
}

double msini_from_semi_amplitude(double k_ms, double period_days, double ecc,
                                 double star_mass_sun) {
  check_ecc(ecc);
  if (!(k_ms >= 0.0) || !(period_days > 0.0) || !(star_mass_sun > 0.0)) {
    throw Error(ErrorKind::invalid_argument,
                "msini_from_semi_amplitude needs K >= 0, P > 0, M_star > 0");
  }
  const double period_s = period_days * constants::seconds_per_day;
  const double scale = std::cbrt(constants::two_pi / period_s) * constants::gm_jup;
  const double target = k_ms * std::sqrt(1.0 - ecc * ecc);
  const double gm_star = star_mass_sun * constants::gm_sun;
  // Fixed point m = target·(GM★ + GM_J m)^{2/3} / scale; contraction factor is
  // ~ (2/3)·GM_J m / GM★, so it converges in a handful of steps.
  double m = target * std::pow(gm_star, 2.0 / 3.0) / scale;
  for (int i = 0; i < 100; ++i) {
    const double next =
        target * std::pow(gm_star + constants::gm_jup * m, 2.0 / 3.0) / scale;
    if (std::abs(next - m) <= 1e-16 * std::max(1.0, m)) {
      m = next;
      break;
    }
    m = next;
  }
  return m;
}

double mean_anomaly_at(const PlanetElements& planet, double t_days,
                       double t_ref_days) {
  if (!(planet.period_days > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "period must be positive");
  }
  const double m0 = planet.mean_longitude_rad - planet.omega_rad - planet.node_rad;
  return wrap_two_pi(m0 + constants::two_pi * (t_days - t_ref_days) / planet.period_days);
}

KeplerSignal::KeplerSignal(const PlanetElements& planet, const StarContext& star)
    : KeplerSignal(from_semi_amplitude(
          rvarena::semi_amplitude(planet, star), planet.period_days, planet.ecc,
          planet.omega_rad, planet.mean_longitude_rad - planet.node_rad,
          star.t_ref_days)) {}

KeplerSignal KeplerSignal::from_semi_amplitude(double k_ms, double period_days,
                                               double ecc, double omega_rad,
                                               double mean_longitude_rad,
                                               double t_ref_days) {
  check_ecc(ecc);
  if (!(period_days > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "period must be positive");
  }
  KeplerSignal s;
  s.k_ = k_ms;
  s.ecc_ = ecc;
  s.omega_ = omega_rad;
  s.mean_motion_ = constants::two_pi / period_days;
  s.m0_ = mean_longitude_rad - omega_rad;
  s.t_ref_ = t_ref_days;
  s.e_cos_omega_ = ecc * std::cos(omega_rad);
  s.nu_factor_ = std::sqrt((1.0 + ecc) / (1.0 - ecc));
  return s;
}

double KeplerSignal::operator()(double t_days) const {
  const double m = m0_ + mean_motion_ * (t_days - t_ref_);
  const double e_anom = solve_kepler(m, ecc_);
  const double half = 0.5 * e_anom;
  const double nu = 2.0 * std::atan2(nu_factor_ * std::sin(half), std::cos(half));
  return k_ * (std::cos(nu + omega_) + e_cos_omega_);
}

double rv_single(double t_days, const PlanetElements& planet,
                 const StarContext& star) {
  return KeplerSignal(planet, star)(t_days);
}

std::vector<double> rv_planets(std::span<const double> times,
                               std::span<const PlanetElements> planets,
                               const StarContext& star) {
  std::vector<double> out(times.size(), 0.0);
  for (const auto& planet : planets) {
    const KeplerSignal signal(planet, star);
    for (std::size_t k = 0; k < times.size(); ++k) out[k] += signal(times[k]);
  }
  return out;
}

std::vector<double> rv_model(std::span<const double> times,
                             std::span<const PlanetElements> planets,
                             const StarContext& star,
                             const InstrumentOffsets& offsets,
                             std::span<const std::string> labels) {
  if (labels.size() != times.size()) {
    throw Error(ErrorKind::invalid_argument,
                "labels and times must have equal length");
  }
  std::vector<double> out = rv_planets(times, planets, star);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto it = offsets.find(labels[k]);
    if (it == offsets.end()) {
      throw Error(ErrorKind::missing_offset,
                  "no offset for instrument '" + labels[k] + "'");
    }
    out[k] += it->second;
  }
  return out;
}

}  // namespace rvarena
