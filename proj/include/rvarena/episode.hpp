#pragma once

// Submit-and-feedback episodes: budgets, attempt caps and best-submission
// bookkeeping. Thread-safe; each episode is serialized by its own mutex.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rvarena/evaluator.hpp"
#include "rvarena/io.hpp"
#include "rvarena/task.hpp"

namespace rvarena {

struct EpisodeConfig {
  Tier tier = Tier::easy;
  std::uint64_t max_tokens = 200000;
  double max_wall_seconds = 600.0;
  std::size_t max_submissions = 3;
  std::size_t max_planets_per_submission = 3;

  static EpisodeConfig for_tier(Tier tier);
  void validate() const;
};

enum class EpisodeStatus { running, env_done, budget_exceeded };
enum class FinalizeReason { agent_done, cap, timeout, token_limit };

std::string_view to_string(EpisodeStatus s);
std::string_view to_string(FinalizeReason r);
FinalizeReason finalize_reason_from_string(std::string_view s);

struct SubmissionRecord {
  Submission submission;
  CriteriaReport report;
};

struct BudgetSummary {
  std::size_t submissions_used = 0;
  std::size_t submissions_remaining = 0;
  std::uint64_t tokens_used = 0;
  std::uint64_t tokens_remaining = 0;
  double elapsed_seconds = 0.0;
  double seconds_remaining = 0.0;
  EpisodeStatus status = EpisodeStatus::running;
};

struct EpisodeState {
  std::string episode_id;
  std::string task_id;
  EpisodeConfig cfg;
  std::uint64_t tokens_used = 0;
  std::uint64_t tool_calls = 0;  // client-reported, recorded only
  double started_at = 0.0;
  std::vector<SubmissionRecord> submissions;
  std::optional<std::size_t> best_index;
  EpisodeStatus status = EpisodeStatus::running;
  bool finalized = false;
};

struct SubmitOutcome {
  CriteriaReport report;
  BudgetSummary budget;
  bool attempt_consumed = true;
};

struct UsageOutcome {
  bool accepted = true;  // false once the token cap is crossed
  BudgetSummary budget;
};

struct EpisodeResult {
  std::string episode_id;
  std::string task_id;
  Tier tier = Tier::easy;
  bool passed = false;
  EpisodeStatus status = EpisodeStatus::env_done;
  FinalizeReason reason = FinalizeReason::agent_done;
  std::optional<std::size_t> best_index;
  std::optional<CriteriaReport> best_report;
  std::vector<SubmissionRecord> submissions;
  std::uint64_t tokens_used = 0;
  std::uint64_t tool_calls = 0;
  double elapsed_seconds = 0.0;
};

Json budget_to_json(const BudgetSummary& b);
Json result_to_json(const EpisodeResult& r);
EpisodeResult result_from_json(const Json& j);

/// Index of the best non-rejected record: highest match score, then lowest
/// RMS, then earliest.
std::optional<std::size_t> best_submission(const std::vector<SubmissionRecord>& records);

/// Monotonic seconds.
using Clock = std::function<double()>;
Clock steady_clock_seconds();

class EpisodeEngine {
 public:
  /// In replay mode wall-clock limits are not enforced and elapsed time reads 0.
  explicit EpisodeEngine(Clock clock = steady_clock_seconds(), bool replay = false);

  /// Registers an episode and returns the agent-visible task document.
  /// Throws Error(conflict) for a duplicate id and Error(invalid_argument)
  /// when the bundle tier differs from cfg.tier.
  Json start_episode(const std::string& episode_id, const TaskBundle& bundle,
                     const EpisodeConfig& cfg);

  /// Grades a submission. Bound violations produce a rejection report and
  /// consume an attempt. Throws Error(budget_exceeded) after the wall-clock
  /// limit, Error(attempt_cap) once the cap is used, Error(terminal_state)
  /// otherwise when the episode is not running.
  SubmitOutcome handle_submit(const std::string& episode_id, const Submission& sub);
  /// Same, from a raw submission document; a malformed document is a format
  /// rejection.
  SubmitOutcome handle_submit(const std::string& episode_id, const Json& submission_doc);

  /// Cumulative token counter. Throws Error(invalid_usage) when it decreases.
  UsageOutcome report_usage(const std::string& episode_id, std::uint64_t tokens,
                            std::optional<std::uint64_t> tool_calls = std::nullopt);

  /// Closes the episode. Repeated calls return the first result.
  EpisodeResult finalize_episode(const std::string& episode_id,
                                 std::optional<FinalizeReason> reason = std::nullopt);

  BudgetSummary budget(const std::string& episode_id) const;
  EpisodeState snapshot(const std::string& episode_id) const;
  bool replay() const { return replay_; }

 private:
  struct Slot {
    std::mutex mu;
    EpisodeState state;
    TaskBundle bundle;
    std::optional<EpisodeResult> result;
  };

  std::shared_ptr<Slot> find(const std::string& episode_id) const;
  double elapsed(const EpisodeState& s) const;
  bool expired(const EpisodeState& s) const;
  BudgetSummary summarize(const EpisodeState& s) const;

  Clock clock_;
  bool replay_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> episodes_;
};

}  // namespace rvarena
