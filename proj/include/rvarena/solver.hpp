#pragma once

// Classical baseline: periodogram search, circular initialization,
// multi-start Keplerian least squares and greedy BIC-gated planet addition.

#include <span>
#include <string>
#include <vector>

#include "rvarena/evaluator.hpp"
#include "rvarena/task.hpp"

namespace rvarena {

struct PeriodogramPeak {
  double period_days = 0.0;
  double power = 0.0;
};

struct Periodogram {
  std::vector<double> frequencies;  // 1/day
  std::vector<double> powers;       // [0, 1]
  std::vector<PeriodogramPeak> peaks;  // local maxima, descending power
};

struct PeriodogramGrid {
  double f_min = 0.0;
  double f_max = 0.0;
  std::size_t n_freq = 0;
};

/// Defaults: f_min = 1/(3·span), f_max = 2 per day, 40000 linear frequencies.
PeriodogramGrid default_grid(const RvDataset& dataset);

/// Generalized (floating-mean, weighted) periodogram of `values`.
/// Throws Error(insufficient_data) below 5 points and Error(invalid_argument)
/// for a bad grid.
Periodogram gls_periodogram(std::span<const double> times, std::span<const double> values,
                            std::span<const double> sigmas, const PeriodogramGrid& grid,
                            std::size_t max_peaks = 20);

/// Power at a single frequency.
double gls_power(std::span<const double> times, std::span<const double> values,
                 std::span<const double> sigmas, double frequency);

Periodogram gls_periodogram(const RvDataset& dataset, const PeriodogramGrid& grid,
                            std::size_t max_peaks = 20);
Periodogram gls_periodogram(const RvDataset& dataset);

struct SineFit {
  double period_days = 0.0;
  double amplitude = 0.0;
  // v = A·cos(2π(t − t_ref)/P − phase) + γ_inst
  double phase_rad = 0.0;
  InstrumentOffsets offsets;
  double rms = 0.0;
  double chi2 = 0.0;

  /// The circular planet with the same signal (ω = 0, l = −phase).
  PlanetElements as_planet(double star_mass_sun) const;
};

/// Weighted linear least squares on {cos, sin, per-instrument constant} at
/// fixed P. Throws Error(degenerate_fit) when the normal equations are
/// singular.
SineFit fit_one_sine(const RvDataset& dataset, double period_days);
SineFit fit_one_sine(const RvDataset& dataset, std::span<const double> values,
                     double period_days);

struct FitResult {
  std::vector<PlanetElements> planets;
  InstrumentOffsets offsets;
  double rms_ms = 0.0;
  double chi2 = 0.0;
  double bic = 0.0;
  int n_starts_converged = 0;
  int n_starts = 0;
  // Per planet: true when the fitted period sits on the upper search bound.
  std::vector<bool> period_at_bound;
};

struct FitOptions {
  int max_iterations = 200;
  double max_ecc = 0.8;
  double min_period_days = 0.5 + 1e-6;
  double max_period_factor = 3.0;  // upper bound = factor·span
  double gradient_tol = 1e-8;
  double step_tol = 1e-10;
};

/// Starting eccentricities and phase offsets of the multi-start grid.
inline constexpr double kStartEccentricities[] = {0.0, 0.2, 0.4, 0.6};
inline constexpr int kStartPhases = 4;

/// One local weighted least-squares fit from `init`. `converged` reports
/// whether the gradient or step criterion was met.
FitResult refine_keplerian(const RvDataset& dataset, const std::vector<PlanetElements>& init,
                           const InstrumentOffsets& init_offsets, bool& converged,
                           const FitOptions& opts = {});

/// Multi-start fit: every planet starts from each (e0, phase offset) grid point
/// in turn while the others keep their initial values. Returns the best
/// converged start; throws Error(fit_failure) when none converged.
FitResult fit_keplerian(const RvDataset& dataset, const std::vector<PlanetElements>& init,
                        const FitOptions& opts = {});

/// Convenience: circular initialization at the given periods.
FitResult fit_keplerian(const RvDataset& dataset, const std::vector<double>& periods,
                        const FitOptions& opts = {});

struct SolverConfig {
  double bic_gate = 10.0;
  // Escalation gate: no further planet is tried once the residual RMS is at
  // or below this multiple of the median reported sigma. 0 disables it.
  double rms_stop_factor = 1.5;
  std::size_t max_planets = 4;
  double alias_power_fraction = 0.7;
  std::size_t n_candidates = 4;
  FitOptions fit;
};

struct SolverLog {
  std::vector<std::string> lines;
};

/// Greedy search. Never throws for valid data; worst case is zero planets.
Submission greedy_solve(const RvDataset& dataset, const SolverConfig& cfg = {},
                        SolverLog* log = nullptr);

/// Alias family of a period: 1/|1/P ± 1|, P/2 and 2P.
std::vector<double> alias_family(double period_days);

}  // namespace rvarena
