#pragma once

// Aggregation of per-episode result files into tier and criterion pass rates.

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rvarena/episode.hpp"

namespace rvarena {

inline constexpr std::array<double, 3> kSweepThresholds{0.72, 0.80, 0.88};

/// Rates are percentages in [0, 100].
struct CriterionRates {
  std::size_t n_tasks = 0;
  double pass = 0.0;
  double rms = 0.0;
  double delta_bic = 0.0;
  double match = 0.0;
  double count = 0.0;
  double env_done = 0.0;
  double mean_predicted_count = 0.0;
};

struct SweepPoint {
  double threshold = 0.0;
  double pass = 0.0;
  std::map<Tier, double> per_tier;
};

struct AggregateReport {
  int schema_version = kSchemaVersion;
  CriterionRates overall;
  std::map<Tier, CriterionRates> per_tier;
  std::vector<SweepPoint> sweep;

  /// Throws Error(aggregation) if a rate leaves [0, 100] or a pass rate
  /// exceeds the smallest criterion rate of its group.
  void check_invariants() const;
};

/// Pass verdict of a stored report re-scored at match threshold `tau`.
bool passes_at(const CriteriaReport& report, double tau);

AggregateReport aggregate_results(std::span<const EpisodeResult> results,
                                  std::span<const double> thresholds = kSweepThresholds);

/// Parses result documents first. Throws Error(aggregation) on mixed or
/// unsupported schema versions and on an empty input.
AggregateReport aggregate_report(std::span<const Json> result_docs,
                                 std::span<const double> thresholds = kSweepThresholds);

Json aggregate_to_json(const AggregateReport& a);
std::string aggregate_to_text(const AggregateReport& a);
/// CSV with one row per threshold: tau,all,easy,medium,hard.
std::string sweep_to_csv(const AggregateReport& a);

}  // namespace rvarena
