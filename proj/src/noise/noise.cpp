#include "rvarena/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"

namespace rvarena {

namespace {

constexpr double kBaseNugget = 1e-10;
constexpr int kNuggetRetries = 3;

// Unit-amplitude kernel matrix; the amplitude is applied after factorization
// so that tiny σ_GP values do not underflow the decomposition.
Eigen::MatrixXd unit_kernel(std::span<const double> times, double p_rot) {
  const GpSpec unit{1.0, p_rot};
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double v = qp_kernel(times[a] - times[b], unit);
      k(a, b) = v;
      k(b, a) = v;
    }
  }
  return k;
}

}  // namespace

double qp_kernel(double lag_days, const GpSpec& gp) {
  const double lambda = kCoherenceFactor * gp.p_rot_days;
  const double s = std::sin(constants::pi * lag_days / gp.p_rot_days);
  return gp.sigma_gp_ms * gp.sigma_gp_ms *
         std::exp(-lag_days * lag_days / (2.0 * lambda * lambda)) *
         std::exp(-kHarmonicComplexity * s * s);
}

Eigen::MatrixXd build_covariance(std::span<const double> times, const NoiseSpec& spec) {
  if (times.empty()) {
    throw Error(ErrorKind::invalid_argument, "build_covariance: no times");
  }
  for (double t : times) {
    if (!std::isfinite(t)) throw Error(ErrorKind::invalid_argument, "non-finite time");
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  if (!spec.gp) return Eigen::MatrixXd::Zero(n, n);
  const double var = spec.gp->sigma_gp_ms * spec.gp->sigma_gp_ms;
  Eigen::MatrixXd cov = unit_kernel(times, spec.gp->p_rot_days) * var;
  // exact diagonal, independent of exp/sin rounding
  cov.diagonal().setConstant(var);
  return cov;
}

double reported_sigma(double sigma, const NoiseSpec& spec) {
  if (!spec.sigmas_include_jitter) return sigma;
  return std::hypot(sigma, spec.jitter_ms);
}

std::vector<double> correlated_from_normals(std::span<const double> times,
                                            const GpSpec& gp,
                                            std::span<const double> normals) {
  const auto n = static_cast<Eigen::Index>(times.size());
  const Eigen::MatrixXd k = unit_kernel(times, gp.p_rot_days);
  double nugget = kBaseNugget;
  for (int attempt = 0; attempt <= kNuggetRetries; ++attempt, nugget *= 10.0) {
    Eigen::MatrixXd jittered = k;
    jittered.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::Map<const Eigen::VectorXd> z(normals.data(), n);
    const Eigen::VectorXd draw = llt.matrixL() * z;
    std::vector<double> out(times.size());
    for (Eigen::Index i = 0; i < n; ++i) out[i] = gp.sigma_gp_ms * draw(i);
    return out;
  }
  throw Error(ErrorKind::degenerate_covariance,
              "GP covariance not positive definite after nugget escalation");
}

std::vector<double> sample_noise(Rng& rng, std::span<const double> times,
                                 std::span<const double> sigmas, const NoiseSpec& spec) {
  if (sigmas.size() != times.size()) {
    throw Error(ErrorKind::invalid_argument, "sigmas and times differ in length");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) throw Error(ErrorKind::invalid_argument, "sigmas must be positive");
  }
  const std::size_t n = times.size();

  // Draws are handed out in time order (stable on ties), so a permuted input
  // receives the same white draw per observation.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> eps(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = order[r];
    const double scale = std::sqrt(sigmas[k] * sigmas[k] + spec.jitter_ms * spec.jitter_ms);
    eps[k] = scale * standard_normal(rng);
  }

  if (spec.gp) {
    std::vector<double> z(n);
    for (auto& v : z) v = standard_normal(rng);
    const auto corr = correlated_from_normals(times, *spec.gp, z);
    for (std::size_t k = 0; k < n; ++k) eps[k] += corr[k];
  }
  return eps;
}

}  // namespace rvarena
