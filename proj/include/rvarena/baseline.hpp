#pragma once

// Running the classical solver as an episode, plus CSV data series for plots.

#include <string>

#include "rvarena/episode.hpp"
#include "rvarena/solver.hpp"

namespace rvarena {

struct BaselineOutcome {
  Submission submission;
  SolverLog log;
  EpisodeResult result;
};

/// Solves the task's dataset and plays the answer as a single-submission
/// episode on a fresh engine (episode id "baseline_<task_id>").
BaselineOutcome run_baseline(const TaskBundle& bundle, const SolverConfig& cfg = {});

/// frequency_per_day,period_days,power
std::string periodogram_csv(const Periodogram& pg);
/// time_days,rv_ms,sigma_ms,label,model_ms,residual_ms
std::string residuals_csv(const RvDataset& dataset, const Submission& sub);
/// Data with every other planet's signal and the offsets removed, folded on
/// planet `index`: phase,time_days,rv_ms,sigma_ms,label,model_ms
std::string phase_fold_csv(const RvDataset& dataset, const Submission& sub, std::size_t index);

}  // namespace rvarena
