#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvarena/noise.hpp"
#include "rvarena/orbit.hpp"

namespace rvarena {

/// The observable: what an agent sees.
struct RvDataset {
  std::vector<double> times_days;
  std::vector<double> rvs_ms;
  std::vector<double> sigmas_ms;
  std::vector<std::string> labels;
  double star_mass_sun = 1.0;
  double t_ref_days = 0.0;

  std::size_t size() const { return times_days.size(); }
  StarContext star() const { return {star_mass_sun, t_ref_days}; }
  double span_days() const;
  double median_sigma() const;
  /// Distinct instrument labels in first-appearance order.
  std::vector<std::string> instruments() const;

  /// Throws Error(invalid_argument) when an invariant does not hold.
  void validate() const;

  friend bool operator==(const RvDataset&, const RvDataset&) = default;
};

enum class Tier { easy, medium, hard };

std::string_view to_string(Tier tier);
Tier tier_from_string(std::string_view name);

struct DifficultyBreakdown {
  int d_base = 0;
  int d_snr = 0;
  int d_res = 0;
  int d_cov = 0;
  int d_obs = 0;
  int d_gp = 0;
  int d_total = 1;
  double snr_value = 0.0;
  double coverage_ratio = 0.0;
  int n_res = 0;

  friend bool operator==(const DifficultyBreakdown&, const DifficultyBreakdown&) = default;
};

struct TaskBundle {
  std::string task_id;
  std::optional<std::uint64_t> seed;  // absent for archival tasks
  RvDataset dataset;
  std::vector<PlanetElements> truth_planets;
  InstrumentOffsets truth_offsets;
  NoiseSpec noise;
  DifficultyBreakdown difficulty;
  Tier tier = Tier::easy;
  /// Published semi-amplitudes for archival truth, parallel to truth_planets.
  std::vector<std::optional<double>> reported_k_ms;

  friend bool operator==(const TaskBundle&, const TaskBundle&) = default;
};

/// Truth semi-amplitude of planet i: the published K when recorded, otherwise
/// the closed form from the elements.
double truth_semi_amplitude(const TaskBundle& bundle, std::size_t i);

}  // namespace rvarena
