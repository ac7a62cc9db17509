#include "rvarena/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>

#include "rvarena/error.hpp"

namespace rvarena {

namespace {

std::string fmt_double(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

[[noreturn]] void reject(const std::string& why) {
  throw Error(ErrorKind::rejected_submission, why);
}

}  // namespace

void MatchConfig::validate() const {
  if (!(w_rv > 0 && w_period > 0 && w_k > 0 && w_ecc > 0)) {
    throw Error(ErrorKind::invalid_argument, "match weights must be positive");
  }
  if (!(pass_threshold > 0.0 && pass_threshold < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "pass threshold must lie in (0, 1)");
  }
  if (grid_points < 2) throw Error(ErrorKind::invalid_argument, "grid_points < 2");
}

void validate_submission(const Submission& sub, const RvDataset& dataset,
                         const SubmissionBounds& bounds) {
  if (sub.planets.size() > bounds.max_planets) {
    reject("too many planets: " + std::to_string(sub.planets.size()) + " > " +
           std::to_string(bounds.max_planets));
  }
  for (std::size_t i = 0; i < sub.planets.size(); ++i) {
    const auto& p = sub.planets[i];
    const std::string tag = "planet " + std::to_string(i) + ": ";
    if (!std::isfinite(p.period_days) || !(p.period_days > bounds.min_period_days)) {
      reject(tag + "P_days must exceed " + fmt_double(bounds.min_period_days));
    }
    if (!std::isfinite(p.msini_mjup) || !(p.msini_mjup > 0.0)) {
      reject(tag + "m_sin_i_mjup must be positive");
    }
    if (!std::isfinite(p.ecc) || p.ecc < 0.0 || p.ecc > bounds.max_ecc) {
      reject(tag + "e must lie in [0, " + fmt_double(bounds.max_ecc) + "]");
    }
    if (!std::isfinite(p.omega_rad) || !std::isfinite(p.mean_longitude_rad) ||
        !std::isfinite(p.node_rad)) {
      reject(tag + "angles must be finite");
    }
  }
  if (sub.offsets) {
    const auto known = dataset.instruments();
    for (const auto& [label, gamma] : *sub.offsets) {
      if (std::find(known.begin(), known.end(), label) == known.end()) {
        reject("offset for unknown instrument '" + label + "'");
      }
      if (!std::isfinite(gamma)) reject("offset for '" + label + "' is not finite");
    }
  }
}

InstrumentOffsets weighted_offsets(std::span<const double> values,
                                   std::span<const double> sigmas,
                                   std::span<const std::string> labels) {
  std::map<std::string, std::pair<double, double>> acc;  // Σ w y, Σ w
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double w = 1.0 / (sigmas[k] * sigmas[k]);
    auto& [wy, ws] = acc[labels[k]];
    wy += w * values[k];
    ws += w;
  }
  InstrumentOffsets out;
  for (const auto& [label, sums] : acc) out[label] = sums.first / sums.second;
  return out;
}

std::vector<double> forward_submission(const Submission& sub, const RvDataset& dataset) {
  std::vector<PlanetElements> planets;
  planets.reserve(sub.planets.size());
  for (const auto& p : sub.planets) planets.push_back(p.normalized());
  std::vector<double> signal = rv_planets(dataset.times_days, planets, dataset.star());

  std::vector<double> resid(signal.size());
  for (std::size_t k = 0; k < signal.size(); ++k) resid[k] = dataset.rvs_ms[k] - signal[k];
  InstrumentOffsets offsets = weighted_offsets(resid, dataset.sigmas_ms, dataset.labels);
  if (sub.offsets) {
    for (const auto& [label, gamma] : *sub.offsets) offsets[label] = gamma;
  }
  for (std::size_t k = 0; k < signal.size(); ++k) signal[k] += offsets.at(dataset.labels[k]);
  return signal;
}

RmsOutcome rms_check(std::span<const double> observations,
                     std::span<const double> predictions,
                     std::span<const double> sigmas) {
  if (observations.size() != predictions.size() || observations.size() != sigmas.size()) {
    throw Error(ErrorKind::invalid_argument, "rms_check: length mismatch");
  }
  RmsOutcome out;
  const std::size_t n = observations.size();
  if (n == 0) return out;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = observations[k] - predictions[k];
    ss += r * r;
  }
  out.rms = std::sqrt(ss / static_cast<double>(n));
  std::vector<double> s(sigmas.begin(), sigmas.end());
  std::sort(s.begin(), s.end());
  out.median_sigma = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  out.ok = out.rms <= 1.5 * out.median_sigma;
  return out;
}

double neg2_log_likelihood(std::span<const double> observations,
                           std::span<const double> predictions,
                           std::span<const double> sigmas) {
  constexpr double log_two_pi = 1.8378770664093453;
  double total = 0.0;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const double z = (observations[k] - predictions[k]) / sigmas[k];
    total += z * z + log_two_pi + 2.0 * std::log(sigmas[k]);
  }
  return total;
}

double bic(double neg2_log_like, std::size_t n_params, std::size_t n_points) {
  return neg2_log_like + static_cast<double>(n_params) * std::log(static_cast<double>(n_points));
}

BicOutcome delta_bic_check(std::span<const double> observations,
                           std::span<const double> sigmas,
                           std::span<const double> predictions,
                           std::span<const std::string> labels,
                           std::size_t n_planets) {
  const std::size_t n = observations.size();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "delta_bic_check needs N >= 2");

  const InstrumentOffsets null_offsets = weighted_offsets(observations, sigmas, labels);
  std::vector<double> null_pred(n);
  for (std::size_t k = 0; k < n; ++k) null_pred[k] = null_offsets.at(labels[k]);
  const std::size_t n_inst = null_offsets.size();

  const double bic_null = bic(neg2_log_likelihood(observations, null_pred, sigmas), n_inst, n);
  const double bic_model =
      bic(neg2_log_likelihood(observations, predictions, sigmas), 5 * n_planets + n_inst, n);

  BicOutcome out;
  out.delta_bic = bic_null - bic_model;
  out.delta_bic_per_point = out.delta_bic / static_cast<double>(n);
  out.ok = out.delta_bic_per_point > 0.0;
  return out;
}

double pair_distance(const PlanetElements& truth, double truth_k,
                     const PlanetElements& guess, const StarContext& star,
                     double span_days, const MatchConfig& cfg) {
  if (!(truth_k > 0.0)) {
    throw Error(ErrorKind::invalid_truth, "truth semi-amplitude must be positive");
  }
  const auto t_sig = KeplerSignal::from_semi_amplitude(
      truth_k, truth.period_days, truth.ecc, truth.omega_rad,
      truth.mean_longitude_rad - truth.node_rad, star.t_ref_days);
  const KeplerSignal g_sig(guess, star);
  const double guess_k = g_sig.semi_amplitude();

  const int g = cfg.grid_points;
  std::vector<double> diff(static_cast<std::size_t>(g));
  double mean = 0.0;
  for (int j = 0; j < g; ++j) {
    const double t = star.t_ref_days + span_days * static_cast<double>(j) / (g - 1);
    diff[static_cast<std::size_t>(j)] = t_sig(t) - g_sig(t);
    mean += diff[static_cast<std::size_t>(j)];
  }
  mean /= g;
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double rms = std::sqrt(ss / g);

  return cfg.w_rv * rms / truth_k +
         cfg.w_period * std::abs(std::log(guess.period_days / truth.period_days)) +
         cfg.w_k * std::abs(std::log(guess_k / truth_k)) +
         cfg.w_ecc * std::abs(guess.ecc - truth.ecc);
}

double pair_distance(const PlanetElements& truth, const PlanetElements& guess,
                     const StarContext& star, double span_days, const MatchConfig& cfg) {
  return pair_distance(truth, semi_amplitude(truth, star), guess, star, span_days, cfg);
}

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows == 0 ? 0 : cost.front().size();
  std::vector<int> row_to_col(rows, -1);
  if (rows == 0 || cols == 0) return row_to_col;

  // Potentials formulation (Kuhn–Munkres); requires rows <= cols, so work on
  // the transpose otherwise.
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  auto at = [&](std::size_t i, std::size_t j) {
    return transposed ? cost[j][i] : cost[i][j];
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t i = p[j] - 1;
    if (transposed) {
      row_to_col[j - 1] = static_cast<int>(i);
    } else {
      row_to_col[i] = static_cast<int>(j - 1);
    }
  }
  return row_to_col;
}

MatchOutcome score_matrix(const std::vector<std::vector<double>>& distances,
                          const MatchConfig& cfg) {
  const std::size_t n_truth = distances.size();
  const std::size_t n_guess = n_truth == 0 ? 0 : distances.front().size();
  MatchOutcome out;
  const auto row_to_col = min_cost_assignment(distances);
  double similarity = 0.0;
  for (std::size_t i = 0; i < n_truth; ++i) {
    if (row_to_col[i] < 0) continue;
    const auto j = static_cast<std::size_t>(row_to_col[i]);
    const double d = distances[i][j];
    if (d > cfg.reject_d) continue;
    out.assignment.push_back({i, j, d});
    similarity += std::exp(-d);
  }
  double mean_term = 0.0;
  if (cfg.normalize_by_truth) {
    if (n_truth > 0) mean_term = similarity / static_cast<double>(n_truth);
  } else if (!out.assignment.empty()) {
    mean_term = similarity / static_cast<double>(out.assignment.size());
  }
  const double count_gap = std::abs(static_cast<double>(n_truth) - static_cast<double>(n_guess));
  out.score = mean_term - cfg.count_penalty * count_gap;
  out.ok_match = out.score >= cfg.pass_threshold;
  out.ok_count = n_truth == n_guess;
  return out;
}

MatchOutcome match_and_score(std::span<const PlanetElements> truth,
                             std::span<const double> truth_k,
                             std::span<const PlanetElements> guesses,
                             const StarContext& star, double span_days,
                             const MatchConfig& cfg) {
  std::vector<std::vector<double>> dist(truth.size(),
                                        std::vector<double>(guesses.size(), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = 0; j < guesses.size(); ++j) {
      dist[i][j] = pair_distance(truth[i], truth_k[i], guesses[j], star, span_days, cfg);
    }
  }
  if (guesses.empty()) {
    // score_matrix cannot infer the column count from empty rows
    MatchOutcome out;
    out.score = -cfg.count_penalty * static_cast<double>(truth.size());
    out.ok_match = out.score >= cfg.pass_threshold;
    out.ok_count = truth.empty();
    return out;
  }
  return score_matrix(dist, cfg);
}

CriteriaReport rejection_report(const std::string& reason, std::size_t n_truth) {
  CriteriaReport r;
  r.rejected = true;
  r.rejection_reason = reason;
  r.n_truth = n_truth;
  r.hints.push_back("submission rejected before grading: " + reason);
  return r;
}

CriteriaReport evaluate(const Submission& sub, const TaskBundle& bundle,
                        const MatchConfig& cfg, const SubmissionBounds& bounds) {
  cfg.validate();
  const RvDataset& data = bundle.dataset;
  validate_submission(sub, data, bounds);

  CriteriaReport report;
  const auto pred = forward_submission(sub, data);

  const auto rms = rms_check(data.rvs_ms, pred, data.sigmas_ms);
  report.ok_rms = rms.ok;
  report.rms_ms = rms.rms;
  report.median_sigma_ms = rms.median_sigma;

  const auto dbic =
      delta_bic_check(data.rvs_ms, data.sigmas_ms, pred, data.labels, sub.planets.size());
  report.ok_delta_bic = dbic.ok;
  report.delta_bic_per_point = dbic.delta_bic_per_point;

  std::vector<double> truth_k(bundle.truth_planets.size());
  for (std::size_t i = 0; i < truth_k.size(); ++i) truth_k[i] = truth_semi_amplitude(bundle, i);
  std::vector<PlanetElements> guesses;
  for (const auto& p : sub.planets) guesses.push_back(p.normalized());
  const auto match = match_and_score(bundle.truth_planets, truth_k, guesses, data.star(),
                                     data.span_days(), cfg);
  report.ok_match = match.ok_match;
  report.ok_count = match.ok_count;
  report.match_score = match.score;
  report.assignment = match.assignment;
  report.n_truth = bundle.truth_planets.size();
  report.n_guess = sub.planets.size();

  if (!report.ok_rms) {
    report.hints.push_back("rms: residual RMS " + fmt_double(rms.rms) +
                           " m/s exceeds 1.5x the median uncertainty (" +
                           fmt_double(rms.median_sigma) + " m/s)");
  }
  if (!report.ok_delta_bic) {
    report.hints.push_back("delta_bic: model is not preferred over a constant (dBIC/N = " +
                           fmt_double(dbic.delta_bic_per_point) + ")");
  }
  if (!report.ok_count) {
    report.hints.push_back(report.n_guess < report.n_truth
                               ? "count: planet count mismatch, consider adding a planet"
                               : "count: planet count mismatch, consider removing a planet");
  }
  if (!report.ok_match) {
    report.hints.push_back("match: score " + fmt_double(match.score) + " is below " +
                           fmt_double(cfg.pass_threshold));
  }
  return report;
}

}  // namespace rvarena
