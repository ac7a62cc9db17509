#include <algorithm>
#include <cmath>

#include "rvarena/constants.hpp"
#include "rvarena/error.hpp"
#include "rvarena/solver.hpp"

namespace rvarena {

namespace {

constexpr std::size_t kReseedInterval = 256;

// Normalized weights, the mean-removed values and whether the series is
// numerically constant.
struct Prepared {
  std::vector<double> w;
  std::vector<double> y;
  double yy = 0.0;
  bool constant = false;
};

Prepared prepare(std::span<const double> values, std::span<const double> sigmas) {
  Prepared p;
  const std::size_t n = values.size();
  p.w.resize(n);
  p.y.resize(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.w[i] = 1.0 / (sigmas[i] * sigmas[i]);
    wsum += p.w[i];
  }
  double mean = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.w[i] /= wsum;
    mean += p.w[i] * values[i];
    scale += p.w[i] * values[i] * values[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    p.y[i] = values[i] - mean;
    p.yy += p.w[i] * p.y[i] * p.y[i];
  }
  p.constant = !(p.yy > 1e-20 * scale) || p.yy == 0.0;
  return p;
}

struct Sums {
  double c = 0, s = 0, yc = 0, ys = 0, cc = 0, ss = 0, cs = 0;
};

double power_from(const Sums& m, double yy) {
  const double cc = m.cc - m.c * m.c;
  const double ss = m.ss - m.s * m.s;
  const double cs = m.cs - m.c * m.s;
  const double d = cc * ss - cs * cs;
  if (!(d > 1e-14)) return 0.0;
  const double p = (ss * m.yc * m.yc + cc * m.ys * m.ys - 2.0 * cs * m.yc * m.ys) / (yy * d);
  return std::clamp(p, 0.0, 1.0);
}

void check_inputs(std::span<const double> times, std::span<const double> values,
                  std::span<const double> sigmas) {
  if (times.size() != values.size() || times.size() != sigmas.size()) {
    throw Error(ErrorKind::invalid_argument, "periodogram: length mismatch");
  }
  if (times.size() < 5) {
    throw Error(ErrorKind::insufficient_data, "periodogram needs at least 5 observations");
  }
}

}  // namespace

PeriodogramGrid default_grid(const RvDataset& dataset) {
  const double span = dataset.span_days();
  return {1.0 / (3.0 * span), 2.0, 40000};
}

double gls_power(std::span<const double> times, std::span<const double> values,
                 std::span<const double> sigmas, double frequency) {
  check_inputs(times, values, sigmas);
  const Prepared p = prepare(values, sigmas);
  if (p.constant) return 0.0;
  Sums m;
  const double t0 = times[0];
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double arg = constants::two_pi * frequency * (times[i] - t0);
    const double c = std::cos(arg);
    const double s = std::sin(arg);
    m.c += p.w[i] * c;
    m.s += p.w[i] * s;
    m.yc += p.w[i] * p.y[i] * c;
    m.ys += p.w[i] * p.y[i] * s;
    m.cc += p.w[i] * c * c;
    m.ss += p.w[i] * s * s;
    m.cs += p.w[i] * c * s;
  }
  return power_from(m, p.yy);
}

Periodogram gls_periodogram(std::span<const double> times, std::span<const double> values,
                            std::span<const double> sigmas, const PeriodogramGrid& grid,
                            std::size_t max_peaks) {
  check_inputs(times, values, sigmas);
  if (grid.n_freq < 2 || !(grid.f_min < grid.f_max) || !(grid.f_min >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "periodogram: invalid frequency grid");
  }
  const std::size_t n = times.size();
  const std::size_t nf = grid.n_freq;
  const double df = (grid.f_max - grid.f_min) / static_cast<double>(nf - 1);

  Periodogram out;
  out.frequencies.resize(nf);
  out.powers.assign(nf, 0.0);
  for (std::size_t k = 0; k < nf; ++k) {
    out.frequencies[k] = grid.f_min + df * static_cast<double>(k);
  }
  const Prepared p = prepare(values, sigmas);
  if (p.constant) return out;

  std::vector<double> dt(n), c(n), s(n), rc(n), rs(n);
  for (std::size_t i = 0; i < n; ++i) {
    dt[i] = times[i] - times[0];
    rc[i] = std::cos(constants::two_pi * df * dt[i]);
    rs[i] = std::sin(constants::two_pi * df * dt[i]);
  }
  for (std::size_t k = 0; k < nf; ++k) {
    if (k % kReseedInterval == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double arg = constants::two_pi * out.frequencies[k] * dt[i];
        c[i] = std::cos(arg);
        s[i] = std::sin(arg);
      }
    }
    Sums m;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = p.w[i];
      const double wc = w * c[i];
      const double ws = w * s[i];
      m.c += wc;
      m.s += ws;
      m.yc += wc * p.y[i];
      m.ys += ws * p.y[i];
      m.cc += wc * c[i];
      m.ss += ws * s[i];
      m.cs += wc * s[i];
    }
    out.powers[k] = power_from(m, p.yy);
    for (std::size_t i = 0; i < n; ++i) {
      const double cn = c[i] * rc[i] - s[i] * rs[i];
      s[i] = s[i] * rc[i] + c[i] * rs[i];
      c[i] = cn;
    }
  }

  for (std::size_t k = 0; k < nf; ++k) {
    if (!(out.frequencies[k] > 0.0)) continue;
    const double pk = out.powers[k];
    const bool left = k == 0 || pk >= out.powers[k - 1];
    const bool right = k + 1 == nf || pk > out.powers[k + 1];
    if (left && right && pk > 0.0) out.peaks.push_back({1.0 / out.frequencies[k], pk});
  }
  std::stable_sort(out.peaks.begin(), out.peaks.end(),
                   [](const PeriodogramPeak& a, const PeriodogramPeak& b) {
                     return a.power > b.power;
                   });
  if (out.peaks.size() > max_peaks) out.peaks.resize(max_peaks);
  return out;
}

Periodogram gls_periodogram(const RvDataset& dataset, const PeriodogramGrid& grid,
                            std::size_t max_peaks) {
  return gls_periodogram(dataset.times_days, dataset.rvs_ms, dataset.sigmas_ms, grid, max_peaks);
}

Periodogram gls_periodogram(const RvDataset& dataset) {
  return gls_periodogram(dataset, default_grid(dataset));
}

std::vector<double> alias_family(double period_days) {
  const double f = 1.0 / period_days;
  std::vector<double> out;
  for (double g : {f + 1.0, std::abs(f - 1.0)}) {
    if (g > 0.0) out.push_back(1.0 / g);
  }
  out.push_back(period_days / 2.0);
  out.push_back(period_days * 2.0);
  return out;
}

}  // namespace rvarena
