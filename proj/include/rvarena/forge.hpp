#pragma once

// Synthetic task generation, difficulty scoring and archival ingestion.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvarena/io.hpp"
#include "rvarena/rng.hpp"
#include "rvarena/task.hpp"

namespace rvarena {

struct GeneratorConfig {
  int n_planets_min = 1;
  int n_planets_max = 4;
  double period_min_days = 2.0;
  double period_max_days = 300.0;
  double resonance_prob = 0.25;
  double resonance_tolerance = 0.03;
  double msini_min_mjup = 0.01;
  double msini_max_mjup = 1.0;
  double ecc_alpha = 0.867;
  double ecc_beta = 3.03;
  double ecc_max = 0.8;
  double star_mass_min_sun = 0.6;
  double star_mass_max_sun = 1.4;

  int n_obs_min = 30;
  int n_obs_max = 100;
  double baseline_factor_min = 2.0;
  double baseline_factor_max = 4.0;

  double log10_sigma_w_min = -0.3;
  double log10_sigma_w_max = 0.7;
  double sigma_spread = 0.2;  // per-point sigma = σ_w·U(1 − s, 1 + s)
  double jitter_prob = 0.25;
  double jitter_max_ms = 1.0;
  double gp_prob = 0.4;
  double sigma_gp_min_ms = 0.05;
  double sigma_gp_max_ms = 1.6;
  double p_rot_min_days = 10.0;
  double p_rot_max_days = 45.0;
  bool sigmas_include_jitter = true;

  double offset_range_ms = 20.0;
  bool multi_instrument = false;
  int min_points_per_instrument = 5;

  double min_significance = 4.0;
  double max_period_over_baseline = 1.5;
  // Also require the ground-truth system to pass every grading criterion on
  // the realized data before a task is accepted.
  bool require_truth_pass = true;
  int max_attempts = 100;
  // Skip the noise draw (data are the exact model).
  bool noiseless = false;
};

Json generator_config_to_json(const GeneratorConfig& cfg);
/// FNV-1a 64 of the canonical JSON of the config, as 16 hex digits.
std::string config_hash(const GeneratorConfig& cfg);

/// The three canonical resonant period ratios.
inline constexpr double kResonantRatios[] = {2.0, 1.5, 5.0 / 3.0};

struct SampledSystem {
  std::vector<PlanetElements> planets;  // sorted by period
  double star_mass_sun = 1.0;
  bool resonance_inserted = false;
};

SampledSystem sample_system(Rng& rng, const GeneratorConfig& cfg = {});

/// Eccentricity from the Beta prior, redrawn until e ≤ cfg.ecc_max.
double sample_eccentricity(Rng& rng, const GeneratorConfig& cfg = {});

/// Observation times (days, starting near 0): n ~ U{n_obs_min..n_obs_max},
/// i.i.d. uniform over a baseline of U(2, 4)·min(P), sorted, ties nudged.
std::vector<double> schedule_observations(Rng& rng, const std::vector<PlanetElements>& planets,
                                          const GeneratorConfig& cfg = {});

/// White-noise scale of a seed, σ_w = 10^U(lo, hi). Drawn from the seed's
/// dedicated stream so it is fixed across redraw attempts.
double draw_white_scale(std::uint64_t seed, const GeneratorConfig& cfg = {});

/// Number of planet pairs whose period ratio lies within `tolerance` of a
/// canonical resonant ratio.
int count_resonant_pairs(const std::vector<PlanetElements>& planets, double tolerance = 0.03);

struct DifficultyInputs {
  std::size_t n_planets = 1;
  double snr = 0.0;
  int n_res = 0;
  double coverage_ratio = 0.0;
  std::size_t n_obs = 0;
  std::optional<double> sigma_gp_ms;
};

/// Rubric lookup: pure integer band arithmetic on the inputs.
DifficultyBreakdown difficulty_from_inputs(const DifficultyInputs& in);

/// σ_eff = √(median(σ)² + σ_GP²).
double effective_sigma(const TaskBundle& bundle);

/// snr = min_i K_i / σ_eff; coverage = span / max_i P_i.
DifficultyInputs difficulty_inputs(const TaskBundle& bundle);

DifficultyBreakdown score_difficulty(const TaskBundle& bundle);

/// 1–2 → easy, 3–6 → medium, 7–10 → hard. Throws Error(invalid_argument)
/// outside [1, 10].
Tier assign_tier(int d_total);

struct IdentifiabilityConfig {
  double min_significance = 4.0;
  double max_period_over_baseline = 1.5;
};

/// Every truth planet has K·√(n/2)/σ_eff ≥ min_significance and
/// P ≤ max_period_over_baseline·span.
bool is_identifiable(const TaskBundle& bundle, const IdentifiabilityConfig& cfg = {});

/// Builds the task for `seed`. Throws Error(generation_exhausted) after
/// cfg.max_attempts rejected draws.
TaskBundle generate_task(std::uint64_t seed, const GeneratorConfig& cfg = {});

/// Default task identifier for a seed.
std::string synthetic_task_id(std::uint64_t seed);

// Suites.

struct SuiteManifest {
  std::string suite_id;
  std::uint64_t seed_base = 0;
  std::map<Tier, std::size_t> counts;
  std::map<Tier, std::vector<std::uint64_t>> seeds;
  std::string config_hash;
  /// Seeds whose generation hit the attempt cap.
  std::vector<std::uint64_t> exhausted_seeds;

  /// Throws Error(schema) if a count is zero, a tier's seed list does not
  /// match its count or a seed repeats.
  void validate() const;
};

struct Suite {
  SuiteManifest manifest;
  std::vector<TaskBundle> tasks;  // seed order
};

inline const std::map<Tier, std::size_t> kDefaultSuiteCounts{
    {Tier::easy, 20}, {Tier::medium, 40}, {Tier::hard, 40}};

/// Walks seeds upward from seed_base and keeps each task whose tier still has
/// room, until every count is met. Deterministic for any thread count.
/// Throws Error(generation_exhausted) after max_seeds seeds.
Suite forge_suite(std::uint64_t seed_base, const std::map<Tier, std::size_t>& counts,
                  const GeneratorConfig& cfg = {}, const std::string& suite_id = "suite",
                  unsigned threads = 1, std::uint64_t max_seeds = 100000);

Json manifest_to_json(const SuiteManifest& m);
SuiteManifest manifest_from_json(const Json& j);

/// manifest.json plus <task_id>.task.json and <task_id>.truth.json per task.
void write_suite(const std::filesystem::path& dir, const Suite& suite);
Suite read_suite(const std::filesystem::path& dir);

// Archival ingestion.

struct ArchiveRow {
  double time = 0.0;
  double rv = 0.0;
  double sigma = 0.0;
  std::string instrument;
};

struct ArchivePlanet {
  double period_days = 0.0;
  std::optional<double> msini_mjup;
  std::optional<double> k_ms;
  double ecc = 0.0;
  double omega_rad = 0.0;
  double node_rad = 0.0;
  std::optional<double> mean_longitude_rad;  // at the first timestamp
  std::optional<double> periastron_time;     // original time axis
};

struct ArchiveTruth {
  double star_mass_sun = 1.0;
  std::vector<ArchivePlanet> planets;
  std::map<std::string, double> offsets;  // by original instrument name
  double jitter_ms = 0.0;
  std::optional<GpSpec> gp;
};

/// Parses delimited text with columns time, rv, sigma, instrument (header row
/// required, comma/tab/whitespace separated). Throws Error(ingestion).
std::vector<ArchiveRow> parse_archive_table(const std::string& text);
std::vector<ArchiveRow> read_archive_table(const std::filesystem::path& path);

/// Throws Error(schema) or Error(invalid_truth).
ArchiveTruth archive_truth_from_json(const Json& j);

/// Anonymises and rebases: labels become inst_A, inst_B, … by first
/// appearance and times are shifted so the first timestamp is 0.
TaskBundle ingest_archive(std::vector<ArchiveRow> rows, const ArchiveTruth& truth,
                          const std::string& task_id);

/// Generic label for the i-th distinct instrument: inst_A … inst_Z, inst_AA …
std::string instrument_label(std::size_t index);

}  // namespace rvarena
