#pragma once

// Keplerian kinematics for radial-velocity modelling.
//
// Phase convention: every planet carries its mean longitude l at the
// reference epoch t_ref (the first observation time), with
//   l = (Ω + ω + M0) mod 2π,
// so the mean anomaly at time t is
//   M(t) = l − ω − Ω + 2π (t − t_ref) / P.

#include <map>
#include <span>
#include <string>
#include <vector>

namespace rvarena {

struct PlanetElements {
  double period_days = 0.0;
  double msini_mjup = 0.0;
  double ecc = 0.0;
  double omega_rad = 0.0;            // argument of periastron
  double mean_longitude_rad = 0.0;   // at t_ref
  double node_rad = 0.0;             // 0 for RV-only submissions

  /// Copy with all angles reduced to [0, 2π).
  PlanetElements normalized() const;

  friend bool operator==(const PlanetElements&, const PlanetElements&) = default;
};

struct StarContext {
  double mass_sun = 1.0;
  double t_ref_days = 0.0;
};

struct AnomalyState {
  double mean = 0.0;
  double eccentric = 0.0;
  double true_anomaly = 0.0;
};

using InstrumentOffsets = std::map<std::string, double>;

/// Solves E − e·sin E = M for E. M is reduced mod 2π first; the result lies
/// in [0, 2π). Newton from E0 = M + e·sin M with a 50-iteration cap, then
/// bisection on [0, 2π] if Newton has not converged.
double solve_kepler(double mean_anomaly, double ecc);

/// Mean, eccentric and true anomaly at mean anomaly M.
AnomalyState anomalies(double mean_anomaly, double ecc);

/// True anomaly from eccentric anomaly.
double true_anomaly_from_eccentric(double eccentric_anomaly, double ecc);

/// RV semi-amplitude in m/s, treating sin i = 1 and using (M★ + m) in the
/// two-body mass term.
double semi_amplitude(const PlanetElements& planet, const StarContext& star);

/// Inverse of semi_amplitude: the m sin i (M_Jup) that produces K for the given
/// period, eccentricity and host mass.
double msini_from_semi_amplitude(double k_ms, double period_days, double ecc,
                                 double star_mass_sun);

double mean_anomaly_at(const PlanetElements& planet, double t_days,
                       double t_ref_days);

double rv_single(double t_days, const PlanetElements& planet,
                 const StarContext& star);

/// Multi-planet superposition plus one systemic offset per instrument label.
/// Throws Error(missing_offset) for a label without an offset.
std::vector<double> rv_model(std::span<const double> times,
                             std::span<const PlanetElements> planets,
                             const StarContext& star,
                             const InstrumentOffsets& offsets,
                             std::span<const std::string> labels);

/// Planet-only signal (no offsets).
std::vector<double> rv_planets(std::span<const double> times,
                               std::span<const PlanetElements> planets,
                               const StarContext& star);

/// Precomputed single-planet signal; avoids re-deriving K and the mean motion
/// for every sample.
class KeplerSignal {
 public:
  KeplerSignal(const PlanetElements& planet, const StarContext& star);

  /// Builds a signal directly from a semi-amplitude.
  static KeplerSignal from_semi_amplitude(double k_ms, double period_days,
                                          double ecc, double omega_rad,
                                          double mean_longitude_rad,
                                          double t_ref_days);

  double operator()(double t_days) const;
  double semi_amplitude() const { return k_; }

 private:
  KeplerSignal() = default;

  double k_ = 0.0;
  double ecc_ = 0.0;
  double omega_ = 0.0;
  double mean_motion_ = 0.0;   // rad/day
  double m0_ = 0.0;            // mean anomaly at t_ref
  double t_ref_ = 0.0;
  double e_cos_omega_ = 0.0;
  double nu_factor_ = 1.0;     // sqrt((1+e)/(1-e))
};

}  // namespace rvarena
