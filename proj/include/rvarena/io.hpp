#pragma once

// File formats. Every document is JSON with a `schema_version`; the task file
// is agent-visible and never carries truth, which lives in a separate file.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rvarena/evaluator.hpp"
#include "rvarena/task.hpp"

namespace rvarena {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

Json planet_to_json(const PlanetElements& p);
/// Accepts the submission field names; Omega_rad is optional (default 0).
PlanetElements planet_from_json(const Json& j);

Json observations_to_json(const RvDataset& d);

/// Agent-visible task document.
Json task_to_json(const TaskBundle& bundle);
/// Hidden truth document.
Json truth_to_json(const TaskBundle& bundle);
/// Rebuilds a bundle from its two documents. Throws Error(schema).
TaskBundle bundle_from_json(const Json& task, const Json& truth);
/// Dataset only, from an agent-visible task document.
RvDataset dataset_from_task_json(const Json& task);

Json submission_to_json(const Submission& sub);
/// Throws Error(rejected_submission) for missing or mistyped fields; such a
/// submission is a format error, which costs the agent an attempt.
Submission submission_from_json(const Json& j);

Json report_to_json(const CriteriaReport& r);
CriteriaReport report_from_json(const Json& j);

Json difficulty_to_json(const DifficultyBreakdown& d);
DifficultyBreakdown difficulty_from_json(const Json& j);

Json noise_to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const Json& j);

/// Reads a JSON document; throws Error(schema) when unreadable.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Submission document for the ground-truth system: planets in the
/// submission convention (node folded into the mean longitude) plus offsets.
Submission truth_submission(const TaskBundle& bundle, bool include_offsets);

}  // namespace rvarena
