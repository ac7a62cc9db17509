#include <array>
#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rvarena/angles.hpp"
#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"
#include "rvarena/solver.hpp"

namespace rvarena {

namespace {

constexpr int kPlanetParams = 5;  // ln P, K, h = e cos ω, k = e sin ω, l

struct Problem {
  const RvDataset& data;
  std::vector<std::string> instruments;
  std::vector<int> inst_index;  // per observation
  std::size_t n_planets = 0;
  double ln_p_min = 0.0;
  double ln_p_max = 0.0;
  double max_ecc = 0.8;

  Problem(const RvDataset& d, std::size_t n_pl, const FitOptions& opts)
      : data(d), instruments(d.instruments()), n_planets(n_pl) {
    inst_index.reserve(d.size());
    for (const auto& l : d.labels) {
      inst_index.push_back(static_cast<int>(
          std::find(instruments.begin(), instruments.end(), l) - instruments.begin()));
    }
    const double span = std::max(d.span_days(), 1e-3);
    ln_p_min = std::log(opts.min_period_days);
    ln_p_max = std::log(std::max(opts.max_period_factor * span, opts.min_period_days * 2.0));
    max_ecc = opts.max_ecc;
  }

  std::size_t n_params() const { return n_planets * kPlanetParams + instruments.size(); }

  std::vector<double> planet_signal(const double* x) const {
    const double p = std::exp(x[0]);
    const double e = std::hypot(x[2], x[3]);
    const double w = e > 0.0 ? std::atan2(x[3], x[2]) : 0.0;
    const KeplerSignal sig =
        KeplerSignal::from_semi_amplitude(x[1], p, e, w, x[4], data.t_ref_days);
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = sig(data.times_days[i]);
    return out;
  }

  void project(Eigen::VectorXd& x) const {
    for (std::size_t j = 0; j < n_planets; ++j) {
      double* q = x.data() + j * kPlanetParams;
      q[0] = std::clamp(q[0], ln_p_min, ln_p_max);
      if (q[1] < 0.0) {
        q[1] = -q[1];
        q[2] = -q[2];
        q[3] = -q[3];
        q[4] += constants::pi;
      }
      const double e = std::hypot(q[2], q[3]);
      if (e > max_ecc) {
        q[2] *= max_ecc / e;
        q[3] *= max_ecc / e;
      }
      q[4] = wrap_two_pi(q[4]);
    }
  }
};

struct Evaluation {
  std::vector<std::vector<double>> signals;  // per planet
  Eigen::VectorXd r;                          // (y − model)/σ
  double cost = 0.0;                          // ½ Σ r²
};

Evaluation evaluate_at(const Problem& pb, const Eigen::VectorXd& x) {
  Evaluation ev;
  const std::size_t n = pb.data.size();
  ev.signals.reserve(pb.n_planets);
  for (std::size_t j = 0; j < pb.n_planets; ++j) {
    ev.signals.push_back(pb.planet_signal(x.data() + j * kPlanetParams));
  }
  ev.r.resize(static_cast<Eigen::Index>(n));
  const std::size_t off = pb.n_planets * kPlanetParams;
  for (std::size_t i = 0; i < n; ++i) {
    double m = x[static_cast<Eigen::Index>(off) + pb.inst_index[i]];
    for (const auto& s : ev.signals) m += s[i];
    ev.r[static_cast<Eigen::Index>(i)] = (pb.data.rvs_ms[i] - m) / pb.data.sigmas_ms[i];
  }
  ev.cost = 0.5 * ev.r.squaredNorm();
  return ev;
}

// Jacobian of the model (not the residual), divided by σ.
Eigen::MatrixXd jacobian(const Problem& pb, const Eigen::VectorXd& x) {
  const std::size_t n = pb.data.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(pb.n_params()));
  for (std::size_t j = 0; j < pb.n_planets; ++j) {
    for (int a = 0; a < kPlanetParams; ++a) {
      const Eigen::Index col = static_cast<Eigen::Index>(j * kPlanetParams) + a;
      double h = 1e-7;
      if (a == 1) h = 1e-6 * std::max(1.0, std::abs(x[col]));
      std::array<double, kPlanetParams> plus{}, minus{};
      for (int b = 0; b < kPlanetParams; ++b) {
        plus[b] = minus[b] = x[static_cast<Eigen::Index>(j * kPlanetParams) + b];
      }
      plus[a] += h;
      minus[a] -= h;
      const auto sp = pb.planet_signal(plus.data());
      const auto sm = pb.planet_signal(minus.data());
      for (std::size_t i = 0; i < n; ++i) {
        jac(static_cast<Eigen::Index>(i), col) =
            (sp[i] - sm[i]) / (2.0 * h) / pb.data.sigmas_ms[i];
      }
    }
  }
  const std::size_t off = pb.n_planets * kPlanetParams;
  for (std::size_t i = 0; i < n; ++i) {
    jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(off) + pb.inst_index[i]) =
        1.0 / pb.data.sigmas_ms[i];
  }
  return jac;
}

Eigen::VectorXd pack(const Problem& pb, const std::vector<PlanetElements>& planets,
                     const InstrumentOffsets& offsets) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(pb.n_params()));
  const StarContext star = pb.data.star();
  for (std::size_t j = 0; j < planets.size(); ++j) {
    const auto& p = planets[j];
    double* q = x.data() + j * kPlanetParams;
    q[0] = std::log(p.period_days);
    q[1] = semi_amplitude(p, star);
    q[2] = p.ecc * std::cos(p.omega_rad);
    q[3] = p.ecc * std::sin(p.omega_rad);
    q[4] = p.mean_longitude_rad - p.node_rad;
  }
  const std::size_t off = pb.n_planets * kPlanetParams;
  for (std::size_t m = 0; m < pb.instruments.size(); ++m) {
    const auto it = offsets.find(pb.instruments[m]);
    x[static_cast<Eigen::Index>(off + m)] = it != offsets.end() ? it->second : 0.0;
  }
  pb.project(x);
  return x;
}

FitResult unpack(const Problem& pb, const Eigen::VectorXd& x, const Evaluation& ev) {
  FitResult out;
  const std::size_t n = pb.data.size();
  for (std::size_t j = 0; j < pb.n_planets; ++j) {
    const double* q = x.data() + j * kPlanetParams;
    PlanetElements p;
    p.period_days = std::exp(q[0]);
    p.ecc = std::min(std::hypot(q[2], q[3]), pb.max_ecc);
    p.omega_rad = p.ecc > 0.0 ? wrap_two_pi(std::atan2(q[3], q[2])) : 0.0;
    p.mean_longitude_rad = wrap_two_pi(q[4]);
    p.node_rad = 0.0;
    p.msini_mjup =
        msini_from_semi_amplitude(std::abs(q[1]), p.period_days, p.ecc, pb.data.star_mass_sun);
    out.planets.push_back(p);
    out.period_at_bound.push_back(q[0] >= pb.ln_p_max - 1e-9);
  }
  const std::size_t off = pb.n_planets * kPlanetParams;
  for (std::size_t m = 0; m < pb.instruments.size(); ++m) {
    out.offsets[pb.instruments[m]] = x[static_cast<Eigen::Index>(off + m)];
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ev.r[static_cast<Eigen::Index>(i)] * pb.data.sigmas_ms[i];
    ss += r * r;
  }
  out.rms_ms = std::sqrt(ss / static_cast<double>(n));
  out.chi2 = 2.0 * ev.cost;
  const double k = static_cast<double>(pb.n_params());
  out.bic = out.chi2 + k * std::log(static_cast<double>(n));
  return out;
}

}  // namespace

PlanetElements SineFit::as_planet(double star_mass_sun) const {
  PlanetElements p;
  p.period_days = period_days;
  p.ecc = 0.0;
  p.omega_rad = 0.0;
  p.mean_longitude_rad = wrap_two_pi(-phase_rad);
  p.msini_mjup = msini_from_semi_amplitude(amplitude, period_days, 0.0, star_mass_sun);
  return p;
}

SineFit fit_one_sine(const RvDataset& dataset, std::span<const double> values,
                     double period_days) {
  if (!(period_days > 0.0)) throw Error(ErrorKind::invalid_argument, "period must be positive");
  const auto instruments = dataset.instruments();
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto p = static_cast<Eigen::Index>(2 + instruments.size());
  if (n < p) throw Error(ErrorKind::degenerate_fit, "fewer observations than parameters");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double w = 1.0 / dataset.sigmas_ms[k];
    const double arg =
        constants::two_pi * (dataset.times_days[k] - dataset.t_ref_days) / period_days;
    a(i, 0) = w * std::cos(arg);
    a(i, 1) = w * std::sin(arg);
    const auto m = std::find(instruments.begin(), instruments.end(), dataset.labels[k]) -
                   instruments.begin();
    a(i, 2 + m) = w;
    b(i) = w * values[k];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(ErrorKind::degenerate_fit, "singular sine-fit design");
  const Eigen::VectorXd c = qr.solve(b);

  SineFit out;
  out.period_days = period_days;
  out.amplitude = std::hypot(c(0), c(1));
  out.phase_rad = std::atan2(c(1), c(0));
  for (std::size_t m = 0; m < instruments.size(); ++m) {
    out.offsets[instruments[m]] = c(2 + static_cast<Eigen::Index>(m));
  }
  const Eigen::VectorXd r = b - a * c;
  out.chi2 = r.squaredNorm();
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = r(i) * dataset.sigmas_ms[static_cast<std::size_t>(i)];
    ss += d * d;
  }
  out.rms = std::sqrt(ss / static_cast<double>(n));
  return out;
}

SineFit fit_one_sine(const RvDataset& dataset, double period_days) {
  return fit_one_sine(dataset, dataset.rvs_ms, period_days);
}

FitResult refine_keplerian(const RvDataset& dataset, const std::vector<PlanetElements>& init,
                           const InstrumentOffsets& init_offsets, bool& converged,
                           const FitOptions& opts) {
  if (init.empty()) throw Error(ErrorKind::invalid_argument, "refine_keplerian: no planets");
  const Problem pb(dataset, init.size(), opts);
  Eigen::VectorXd x = pack(pb, init, init_offsets);
  Evaluation ev = evaluate_at(pb, x);
  double lambda = 1e-3;
  converged = false;
  const auto np = static_cast<Eigen::Index>(pb.n_params());

  for (int iter = 0; iter < opts.max_iterations && !converged; ++iter) {
    const Eigen::MatrixXd jac = jacobian(pb, x);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * ev.r;
    // Periods pinned at a search bound with the descent direction pointing
    // outward are held fixed for this iteration.
    std::vector<Eigen::Index> active;
    for (std::size_t j = 0; j < pb.n_planets; ++j) {
      const auto d = static_cast<Eigen::Index>(j * kPlanetParams);
      if ((x[d] >= pb.ln_p_max - 1e-12 && g[d] > 0.0) ||
          (x[d] <= pb.ln_p_min + 1e-12 && g[d] < 0.0)) {
        active.push_back(d);
        g[d] = 0.0;
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol * std::max(1.0, ev.cost)) {
      converged = true;
      break;
    }
    bool improved = false;
    while (!improved) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index d = 0; d < np; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      for (Eigen::Index d : active) {
        a.row(d).setZero();
        a.col(d).setZero();
        a(d, d) = 1.0;
      }
      const Eigen::VectorXd step = a.ldlt().solve(g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        if (lambda > 1e20) break;
        continue;
      }
      Eigen::VectorXd trial = x + step;
      pb.project(trial);
      const double step_norm = (trial - x).norm();
      if (step_norm <= opts.step_tol * (x.norm() + opts.step_tol)) {
        converged = true;
        break;
      }
      Evaluation tev = evaluate_at(pb, trial);
      if (tev.cost < ev.cost) {
        x = std::move(trial);
        ev = std::move(tev);
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e20) break;
      }
    }
    if (!improved && !converged) break;
  }
  return unpack(pb, x, ev);
}

FitResult fit_keplerian(const RvDataset& dataset, const std::vector<PlanetElements>& init,
                        const FitOptions& opts) {
  if (init.empty()) throw Error(ErrorKind::invalid_argument, "fit_keplerian: no planets");
  const StarContext star = dataset.star();

  // Offsets start at the weighted optimum against the initial signal.
  const auto signal = rv_planets(dataset.times_days, init, star);
  std::vector<double> resid(dataset.size());
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = dataset.rvs_ms[i] - signal[i];
  const InstrumentOffsets offsets0 = weighted_offsets(resid, dataset.sigmas_ms, dataset.labels);

  std::vector<std::vector<PlanetElements>> starts;
  for (std::size_t j = 0; j < init.size(); ++j) {
    for (double e0 : kStartEccentricities) {
      for (int ph = 0; ph < kStartPhases; ++ph) {
        if (e0 == 0.0 && ph > 0) continue;
        std::vector<PlanetElements> s = init;
        s[j].ecc = e0;
        s[j].omega_rad = wrap_two_pi(init[j].omega_rad + ph * constants::pi / 2.0);
        // keep the same K as the initial guess
        const double k0 = semi_amplitude(init[j], star);
        s[j].msini_mjup = msini_from_semi_amplitude(k0, s[j].period_days, e0, star.mass_sun);
        if (std::find(starts.begin(), starts.end(), s) == starts.end()) starts.push_back(s);
      }
    }
  }

  FitResult best;
  bool have = false;
  int n_conv = 0;
  for (const auto& s : starts) {
    bool conv = false;
    FitResult r = refine_keplerian(dataset, s, offsets0, conv, opts);
    if (!conv) continue;
    ++n_conv;
    if (!have || r.chi2 < best.chi2) {
      best = std::move(r);
      have = true;
    }
  }
  if (!have) throw Error(ErrorKind::fit_failure, "no multi-start fit converged");
  best.n_starts_converged = n_conv;
  best.n_starts = static_cast<int>(starts.size());
  return best;
}

FitResult fit_keplerian(const RvDataset& dataset, const std::vector<double>& periods,
                        const FitOptions& opts) {
  std::vector<PlanetElements> init;
  std::vector<double> resid = dataset.rvs_ms;
  for (double p : periods) {
    const SineFit s = fit_one_sine(dataset, resid, p);
    PlanetElements planet = s.as_planet(dataset.star_mass_sun);
    const KeplerSignal sig(planet, dataset.star());
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= sig(dataset.times_days[i]);
    init.push_back(planet);
  }
  return fit_keplerian(dataset, init, opts);
}

}  // namespace rvarena
