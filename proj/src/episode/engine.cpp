#include <chrono>
#include <cmath>

#include "rvarena/episode.hpp"
#include "rvarena/error.hpp"

namespace rvarena {

EpisodeConfig EpisodeConfig::for_tier(Tier tier) {
  switch (tier) {
    case Tier::easy: return {Tier::easy, 200000, 600.0, 3, 3};
    case Tier::medium: return {Tier::medium, 450000, 900.0, 5, 5};
    case Tier::hard: return {Tier::hard, 900000, 1500.0, 10, 8};
  }
  return {};
}

void EpisodeConfig::validate() const {
  if (max_tokens == 0 || !(max_wall_seconds > 0.0) || max_submissions == 0 ||
      max_planets_per_submission == 0) {
    throw Error(ErrorKind::invalid_argument, "episode limits must be positive");
  }
}

std::string_view to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::running: return "running";
    case EpisodeStatus::env_done: return "env_done";
    case EpisodeStatus::budget_exceeded: return "budget_exceeded";
  }
  return "running";
}

std::string_view to_string(FinalizeReason r) {
  switch (r) {
    case FinalizeReason::agent_done: return "agent_done";
    case FinalizeReason::cap: return "cap";
    case FinalizeReason::timeout: return "timeout";
    case FinalizeReason::token_limit: return "token_limit";
  }
  return "agent_done";
}

FinalizeReason finalize_reason_from_string(std::string_view s) {
  if (s == "agent_done") return FinalizeReason::agent_done;
  if (s == "cap") return FinalizeReason::cap;
  if (s == "timeout") return FinalizeReason::timeout;
  if (s == "token_limit") return FinalizeReason::token_limit;
  throw Error(ErrorKind::schema, "unknown finalize reason '" + std::string(s) + "'");
}

std::optional<std::size_t> best_submission(const std::vector<SubmissionRecord>& records) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i].report;
    if (r.rejected) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = records[*best].report;
    if (r.match_score > b.match_score ||
        (r.match_score == b.match_score && r.rms_ms < b.rms_ms)) {
      best = i;
    }
  }
  return best;
}

Clock steady_clock_seconds() {
  return [] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

EpisodeEngine::EpisodeEngine(Clock clock, bool replay)
    : clock_(std::move(clock)), replay_(replay) {}

std::shared_ptr<EpisodeEngine::Slot> EpisodeEngine::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = episodes_.find(id);
  if (it == episodes_.end()) throw Error(ErrorKind::not_found, "unknown episode '" + id + "'");
  return it->second;
}

double EpisodeEngine::elapsed(const EpisodeState& s) const {
  if (replay_) return 0.0;
  return clock_() - s.started_at;
}

bool EpisodeEngine::expired(const EpisodeState& s) const {
  return !replay_ && elapsed(s) > s.cfg.max_wall_seconds;
}

BudgetSummary EpisodeEngine::summarize(const EpisodeState& s) const {
  BudgetSummary b;
  b.submissions_used = s.submissions.size();
  b.submissions_remaining = s.cfg.max_submissions - std::min(s.cfg.max_submissions, s.submissions.size());
  b.tokens_used = s.tokens_used;
  b.tokens_remaining = s.cfg.max_tokens - std::min(s.cfg.max_tokens, s.tokens_used);
  b.elapsed_seconds = elapsed(s);
  b.seconds_remaining = std::max(0.0, s.cfg.max_wall_seconds - b.elapsed_seconds);
  b.status = s.status;
  return b;
}

Json EpisodeEngine::start_episode(const std::string& episode_id, const TaskBundle& bundle,
                                  const EpisodeConfig& cfg) {
  cfg.validate();
  if (bundle.tier != cfg.tier) {
    throw Error(ErrorKind::invalid_argument, "bundle tier does not match episode tier");
  }
  if (episode_id.empty()) throw Error(ErrorKind::invalid_argument, "empty episode id");
  auto slot = std::make_shared<Slot>();
  slot->bundle = bundle;
  slot->state.episode_id = episode_id;
  slot->state.task_id = bundle.task_id;
  slot->state.cfg = cfg;
  slot->state.started_at = replay_ ? 0.0 : clock_();
  {
    std::lock_guard lock(mu_);
    if (episodes_.count(episode_id)) {
      throw Error(ErrorKind::conflict, "episode '" + episode_id + "' already exists");
    }
    episodes_.emplace(episode_id, slot);
  }
  return task_to_json(bundle);
}

namespace {

void ensure_open(const EpisodeState& s) {
  if (s.finalized) throw Error(ErrorKind::terminal_state, "episode already finalized");
}

}  // namespace

SubmitOutcome EpisodeEngine::handle_submit(const std::string& episode_id, const Submission& sub) {
  auto slot = find(episode_id);
  std::lock_guard lock(slot->mu);
  EpisodeState& s = slot->state;
  ensure_open(s);
  if (expired(s)) throw Error(ErrorKind::budget_exceeded, "wall-clock budget exhausted");
  if (s.submissions.size() >= s.cfg.max_submissions) {
    throw Error(ErrorKind::attempt_cap, "submission cap of " +
                                            std::to_string(s.cfg.max_submissions) + " reached");
  }
  if (s.status != EpisodeStatus::running) {
    throw Error(ErrorKind::terminal_state, "episode is " + std::string(to_string(s.status)));
  }

  SubmitOutcome out;
  const SubmissionBounds bounds{.max_planets = s.cfg.max_planets_per_submission};
  try {
    out.report = evaluate(sub, slot->bundle, MatchConfig{}, bounds);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::rejected_submission) throw;
    out.report = rejection_report(e.what(), slot->bundle.truth_planets.size());
  }
  s.submissions.push_back({sub, out.report});
  s.best_index = best_submission(s.submissions);
  if (s.submissions.size() >= s.cfg.max_submissions) s.status = EpisodeStatus::env_done;
  out.budget = summarize(s);
  return out;
}

SubmitOutcome EpisodeEngine::handle_submit(const std::string& episode_id, const Json& doc) {
  Submission sub;
  try {
    sub = submission_from_json(doc);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::rejected_submission) throw;
    // Record the malformed attempt with an empty planet list.
    auto slot = find(episode_id);
    std::lock_guard lock(slot->mu);
    EpisodeState& s = slot->state;
    ensure_open(s);
    if (expired(s)) throw Error(ErrorKind::budget_exceeded, "wall-clock budget exhausted");
    if (s.submissions.size() >= s.cfg.max_submissions) {
      throw Error(ErrorKind::attempt_cap, "submission cap of " +
                                              std::to_string(s.cfg.max_submissions) + " reached");
    }
    if (s.status != EpisodeStatus::running) {
      throw Error(ErrorKind::terminal_state, "episode is " + std::string(to_string(s.status)));
    }
    SubmitOutcome out;
    out.report = rejection_report(e.what(), slot->bundle.truth_planets.size());
    s.submissions.push_back({Submission{}, out.report});
    s.best_index = best_submission(s.submissions);
    if (s.submissions.size() >= s.cfg.max_submissions) s.status = EpisodeStatus::env_done;
    out.budget = summarize(s);
    return out;
  }
  return handle_submit(episode_id, sub);
}

UsageOutcome EpisodeEngine::report_usage(const std::string& episode_id, std::uint64_t tokens,
                                         std::optional<std::uint64_t> tool_calls) {
  auto slot = find(episode_id);
  std::lock_guard lock(slot->mu);
  EpisodeState& s = slot->state;
  ensure_open(s);
  if (expired(s)) throw Error(ErrorKind::budget_exceeded, "wall-clock budget exhausted");
  if (s.status != EpisodeStatus::running) {
    throw Error(ErrorKind::terminal_state, "episode is " + std::string(to_string(s.status)));
  }
  if (tokens < s.tokens_used) {
    throw Error(ErrorKind::invalid_usage, "token counter decreased from " +
                                              std::to_string(s.tokens_used) + " to " +
                                              std::to_string(tokens));
  }
  if (tool_calls && *tool_calls < s.tool_calls) {
    throw Error(ErrorKind::invalid_usage, "tool-call counter decreased");
  }
  s.tokens_used = tokens;
  if (tool_calls) s.tool_calls = *tool_calls;
  UsageOutcome out;
  if (s.tokens_used > s.cfg.max_tokens) {
    s.status = EpisodeStatus::budget_exceeded;
    out.accepted = false;
  }
  out.budget = summarize(s);
  return out;
}

EpisodeResult EpisodeEngine::finalize_episode(const std::string& episode_id,
                                              std::optional<FinalizeReason> reason) {
  auto slot = find(episode_id);
  std::lock_guard lock(slot->mu);
  if (slot->result) return *slot->result;
  EpisodeState& s = slot->state;

  FinalizeReason r;
  if (reason) {
    r = *reason;
  } else if (s.status == EpisodeStatus::budget_exceeded) {
    r = FinalizeReason::token_limit;
  } else if (expired(s)) {
    r = FinalizeReason::timeout;
  } else if (s.submissions.size() >= s.cfg.max_submissions) {
    r = FinalizeReason::cap;
  } else {
    r = FinalizeReason::agent_done;
  }

  EpisodeResult res;
  res.episode_id = s.episode_id;
  res.task_id = s.task_id;
  res.tier = s.cfg.tier;
  res.reason = r;
  res.status = (r == FinalizeReason::agent_done || r == FinalizeReason::cap)
                   ? EpisodeStatus::env_done
                   : EpisodeStatus::budget_exceeded;
  res.best_index = s.best_index;
  if (s.best_index) res.best_report = s.submissions[*s.best_index].report;
  res.passed = res.best_report && res.best_report->passed();
  res.submissions = s.submissions;
  res.tokens_used = s.tokens_used;
  res.tool_calls = s.tool_calls;
  res.elapsed_seconds = elapsed(s);

  s.finalized = true;
  if (s.status == EpisodeStatus::running) s.status = res.status;
  slot->result = res;
  return res;
}

BudgetSummary EpisodeEngine::budget(const std::string& episode_id) const {
  auto slot = find(episode_id);
  std::lock_guard lock(slot->mu);
  return summarize(slot->state);
}

EpisodeState EpisodeEngine::snapshot(const std::string& episode_id) const {
  auto slot = find(episode_id);
  std::lock_guard lock(slot->mu);
  return slot->state;
}

Json budget_to_json(const BudgetSummary& b) {
  return Json{{"submissions_used", b.submissions_used},
              {"submissions_remaining", b.submissions_remaining},
              {"tokens_used", b.tokens_used},
              {"tokens_remaining", b.tokens_remaining},
              {"elapsed_seconds", b.elapsed_seconds},
              {"seconds_remaining", b.seconds_remaining},
              {"status", std::string(to_string(b.status))}};
}

Json result_to_json(const EpisodeResult& r) {
  Json history = Json::array();
  for (const auto& rec : r.submissions) {
    history.push_back(Json{{"submission", submission_to_json(rec.submission)},
                           {"report", report_to_json(rec.report)}});
  }
  Json j{{"schema_version", kSchemaVersion},
         {"episode_id", r.episode_id},
         {"task_id", r.task_id},
         {"tier", std::string(to_string(r.tier))},
         {"passed", r.passed},
         {"status", std::string(to_string(r.status))},
         {"reason", std::string(to_string(r.reason))},
         {"submissions", history},
         {"tokens_used", r.tokens_used},
         {"tool_calls", r.tool_calls},
         {"elapsed_seconds", r.elapsed_seconds}};
  j["best_index"] = r.best_index ? Json(*r.best_index) : Json(nullptr);
  j["best_report"] = r.best_report ? report_to_json(*r.best_report) : Json(nullptr);
  return j;
}

EpisodeResult result_from_json(const Json& j) {
  constexpr auto k = ErrorKind::schema;
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::aggregation, "unsupported result schema_version");
    }
    EpisodeResult r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.task_id = j.at("task_id").get<std::string>();
    r.tier = tier_from_string(j.at("tier").get<std::string>());
    r.passed = j.at("passed").get<bool>();
    const auto status = j.at("status").get<std::string>();
    if (status == "env_done") {
      r.status = EpisodeStatus::env_done;
    } else if (status == "budget_exceeded") {
      r.status = EpisodeStatus::budget_exceeded;
    } else {
      throw Error(k, "unknown result status '" + status + "'");
    }
    r.reason = finalize_reason_from_string(j.at("reason").get<std::string>());
    for (const auto& h : j.at("submissions")) {
      r.submissions.push_back(
          {submission_from_json(h.at("submission")), report_from_json(h.at("report"))});
    }
    r.tokens_used = j.at("tokens_used").get<std::uint64_t>();
    r.tool_calls = j.at("tool_calls").get<std::uint64_t>();
    r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
    if (!j.at("best_index").is_null()) r.best_index = j.at("best_index").get<std::size_t>();
    if (!j.at("best_report").is_null()) r.best_report = report_from_json(j.at("best_report"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(k, std::string("result document: ") + e.what());
  }
}

}  // namespace rvarena
