#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vsrhpo/evaluator.hpp"
#include "vsrhpo/samplers.hpp"
#include "vsrhpo/search_space.hpp"
#include "vsrhpo/trial.hpp"
#include "vsrhpo/trial_log.hpp"

namespace vsrhpo {

struct SearchResult {
  std::vector<TrialRecord> trials;
  /// Best completed trial; empty when no trial completed.
  std::optional<std::uint64_t> best_trial;
  std::optional<Configuration> best;
  double best_objective = 0.0;
  double elapsed_s = 0.0;
  /// Trials executed by this call (as opposed to restored from a log).
  std::size_t new_trials = 0;
};

/// Lowest objective among completed trials, ties to the lowest trial_id.
std::optional<std::uint64_t> select_best(const std::vector<TrialRecord>& trials);

/// Propose, evaluate for up to epochs_per_trial epochs, record, feed back.
/// A trial starts only while trials < max_trials and elapsed < the wall
/// clock limit. Every epoch reaches `sink` (when given) before the next one
/// starts. The header's evaluator and space must match `evaluator`.
SearchResult run_search(const RunHeader& header, Evaluator& evaluator, TrialSink* sink);

/// Continues from already recorded trials; used by resume. `prior_elapsed_s`
/// is the budget already consumed.
SearchResult continue_search(const RunHeader& header, Evaluator& evaluator, TrialSink* sink,
                             std::vector<TrialRecord> prior, double prior_elapsed_s);

/// Sampler state reconstructed from recorded trials: one proposal per trial,
/// failed trials excluded from the observations.
SamplerState sampler_state_from(const RunHeader& header, const std::vector<TrialRecord>& trials);

struct ResumeOptions {
  /// Guards against resuming with different settings than the log.
  std::optional<std::uint64_t> expected_seed;
  std::optional<SamplerKind> expected_sampler;
  /// Replaces the evaluator recorded in the header (e.g. a new command path).
  std::optional<EvaluatorSpec> evaluator;
};

/// Reopens a possibly truncated log, drops a trailing unfinished trial and
/// continues under the remaining budget, appending to the same file. A log
/// with a result line is returned as is with zero new trials.
SearchResult resume_search(const std::string& log_path, const ResumeOptions& options = {});

/// Current UTC time as ISO-8601, for RunHeader::started_at.
std::string utc_timestamp();

}  // namespace vsrhpo
