#pragma once

// Grading of a submitted planetary system against ground truth.
//
// Four criteria, all of which must hold for a task to count as solved:
//   ok_rms        RMS(y − ŷ) ≤ 1.5·median(σ)
//   ok_delta_bic  (BIC_null − BIC_model)/N > 0, k = 5·n_pl + n_inst
//   ok_match      S_match ≥ threshold, from an optimal truth↔guess assignment
//   ok_count      n_guess == n_truth

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvarena/orbit.hpp"
#include "rvarena/task.hpp"

namespace rvarena {

struct Submission {
  std::vector<PlanetElements> planets;
  std::optional<InstrumentOffsets> offsets;

  friend bool operator==(const Submission&, const Submission&) = default;
};

/// Per-planet bounds accepted from agents.
struct SubmissionBounds {
  double min_period_days = 0.5;
  double max_ecc = 0.8;
  std::size_t max_planets = 3;
};

struct MatchConfig {
  double w_rv = 4.0;
  double w_period = 1.0;
  double w_k = 0.5;
  double w_ecc = 0.5;
  double reject_d = 5.0;
  double count_penalty = 0.25;
  double pass_threshold = 0.8;
  int grid_points = 2048;
  // Divide the summed similarity by n_truth instead of the number of kept
  // pairs. Off by default.
  bool normalize_by_truth = false;

  void validate() const;
};

struct MatchedPair {
  std::size_t truth_index = 0;
  std::size_t guess_index = 0;
  double distance = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchOutcome {
  bool ok_match = false;
  bool ok_count = false;
  double score = 0.0;
  std::vector<MatchedPair> assignment;  // kept pairs only (d ≤ reject_d)
};

struct CriteriaReport {
  bool ok_rms = false;
  bool ok_delta_bic = false;
  bool ok_match = false;
  bool ok_count = false;
  double rms_ms = 0.0;
  double median_sigma_ms = 0.0;
  double delta_bic_per_point = 0.0;
  double match_score = 0.0;
  std::size_t n_truth = 0;
  std::size_t n_guess = 0;
  std::vector<MatchedPair> assignment;
  std::vector<std::string> hints;
  // Set when the submission failed bounds/format validation and was not graded.
  bool rejected = false;
  std::string rejection_reason;

  bool passed() const { return ok_rms && ok_delta_bic && ok_match && ok_count; }

  friend bool operator==(const CriteriaReport&, const CriteriaReport&) = default;
};

struct RmsOutcome {
  bool ok = false;
  double rms = 0.0;
  double median_sigma = 0.0;
};

struct BicOutcome {
  bool ok = false;
  double delta_bic = 0.0;
  double delta_bic_per_point = 0.0;
};

/// Throws Error(rejected_submission) describing the first violated bound.
void validate_submission(const Submission& sub, const RvDataset& dataset,
                         const SubmissionBounds& bounds);

/// Weighted least-squares offsets of `residual_target` (y − planet signal) per
/// instrument: γ_j = Σ w y / Σ w over instrument j, w = 1/σ².
InstrumentOffsets weighted_offsets(std::span<const double> values,
                                   std::span<const double> sigmas,
                                   std::span<const std::string> labels);

/// Predicted velocities of the submission. Instruments without a supplied
/// offset get the closed-form weighted least-squares optimum.
std::vector<double> forward_submission(const Submission& sub, const RvDataset& dataset);

RmsOutcome rms_check(std::span<const double> observations,
                     std::span<const double> predictions,
                     std::span<const double> sigmas);

/// Gaussian −2 ln L with the given sigmas.
double neg2_log_likelihood(std::span<const double> observations,
                           std::span<const double> predictions,
                           std::span<const double> sigmas);

double bic(double neg2_log_like, std::size_t n_params, std::size_t n_points);

BicOutcome delta_bic_check(std::span<const double> observations,
                           std::span<const double> sigmas,
                           std::span<const double> predictions,
                           std::span<const std::string> labels,
                           std::size_t n_planets);

/// Pairwise distance between a truth planet (semi-amplitude `truth_k`) and a
/// guess, with the RV term sampled on `cfg.grid_points` uniform points over
/// [t_ref, t_ref + span].
double pair_distance(const PlanetElements& truth, double truth_k,
                     const PlanetElements& guess, const StarContext& star,
                     double span_days, const MatchConfig& cfg);

double pair_distance(const PlanetElements& truth, const PlanetElements& guess,
                     const StarContext& star, double span_days, const MatchConfig& cfg);

/// Optimal one-to-one assignment minimizing total distance (rows = truth).
/// Returns, for each row, the assigned column or -1.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

/// S_match from a distance matrix (rows = truth, columns = guesses).
MatchOutcome score_matrix(const std::vector<std::vector<double>>& distances,
                          const MatchConfig& cfg);

MatchOutcome match_and_score(std::span<const PlanetElements> truth,
                             std::span<const double> truth_k,
                             std::span<const PlanetElements> guesses,
                             const StarContext& star, double span_days,
                             const MatchConfig& cfg);

/// Full grading. Throws Error(rejected_submission) on bound violations.
CriteriaReport evaluate(const Submission& sub, const TaskBundle& bundle,
                        const MatchConfig& cfg = {},
                        const SubmissionBounds& bounds = {.max_planets = 8});

/// Report for a submission that failed validation: every criterion false.
CriteriaReport rejection_report(const std::string& reason, std::size_t n_truth);

}  // namespace rvarena
