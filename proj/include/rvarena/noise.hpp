#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rvarena/rng.hpp"

namespace rvarena {

struct GpSpec {
  double sigma_gp_ms = 0.0;
  double p_rot_days = 0.0;

  friend bool operator==(const GpSpec&, const GpSpec&) = default;
};

struct NoiseSpec {
  double sigma_w_ms = 1.0;
  double jitter_ms = 0.0;
  std::optional<GpSpec> gp;
  // Whether the agent-visible error bars carry the jitter term.
  bool sigmas_include_jitter = true;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Shape constants of the quasi-periodic kernel: coherence length
/// λ = kCoherenceFactor·P_rot and harmonic complexity Γ.
inline constexpr double kCoherenceFactor = 3.0;
inline constexpr double kHarmonicComplexity = 2.0;

/// Quasi-periodic rotation kernel
///   k(τ) = σ² exp(−τ²/(2λ²)) exp(−Γ sin²(πτ/P_rot)).
double qp_kernel(double lag_days, const GpSpec& gp);

/// Covariance of the correlated component at `times`; all zeros without GP.
Eigen::MatrixXd build_covariance(std::span<const double> times, const NoiseSpec& spec);

/// Agent-visible uncertainty for intrinsic per-point scale `sigma`.
double reported_sigma(double sigma, const NoiseSpec& spec);

/// Draws white + correlated noise. White draws are consumed first (N normals
/// assigned in time order), then N normals for the GP when present.
std::vector<double> sample_noise(Rng& rng, std::span<const double> times,
                                 std::span<const double> sigmas, const NoiseSpec& spec);

/// Correlated component only, from `normals` (length N).
std::vector<double> correlated_from_normals(std::span<const double> times,
                                            const GpSpec& gp,
                                            std::span<const double> normals);

}  // namespace rvarena
