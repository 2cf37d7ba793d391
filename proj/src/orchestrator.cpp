#include "vsrhpo/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>

namespace vsrhpo {

std::optional<std::uint64_t> select_best(const std::vector<TrialRecord>& trials) {
  const TrialRecord* best = nullptr;
  for (const auto& t : trials) {
    if (t.status != TrialStatus::completed || !t.objective) continue;
    if (best == nullptr || *t.objective < *best->objective ||
        (*t.objective == *best->objective && t.trial_id < best->trial_id)) {
      best = &t;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->trial_id;
}

SamplerState sampler_state_from(const RunHeader& header, const std::vector<TrialRecord>& trials) {
  SamplerState state;
  state.rng_seed = header.seed;
  state.proposal_count = trials.size();
  for (const auto& t : trials) {
    if (t.objective) state.observations.push_back({t.config, *t.objective, t.trial_id});
  }
  return state;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

void finish(SearchResult& result, const std::vector<TrialRecord>& trials) {
  result.trials = trials;
  result.best_trial = select_best(trials);
  if (result.best_trial) {
    const auto& t = trials[*result.best_trial];
    result.best = t.config;
    result.best_objective = *t.objective;
  }
}

}  // namespace

SearchResult continue_search(const RunHeader& header, Evaluator& evaluator, TrialSink* sink,
                             std::vector<TrialRecord> trials, double prior_elapsed_s) {
  header.budget.validate();
  header.sampler.tpe.validate();
  header.sampler.smac.validate();
  const auto& budget = header.budget;
  if (budget.clock_mode == ClockMode::simulated && !evaluator.supplies_durations()) {
    throw std::invalid_argument("simulated clock needs an evaluator that reports durations");
  }

  SamplerState state = sampler_state_from(header, trials);
  const auto wall_start = std::chrono::steady_clock::now();
  double simulated = prior_elapsed_s;
  auto elapsed = [&] {
    if (budget.clock_mode == ClockMode::simulated) return simulated;
    return prior_elapsed_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  };

  SearchResult result;
  while (trials.size() < budget.max_trials && elapsed() < budget.wall_clock_limit_s) {
    TrialRecord trial;
    trial.trial_id = trials.size();
    trial.config = propose(header.space, state, header.sampler);
    header.space.validate(trial.config);
    ++state.proposal_count;

    bool failed = false;
    auto on_epoch = [&](const EpochReport& r) {
      if (failed) return;
      if (r.trial_id != trial.trial_id || r.epoch != trial.epochs.size() || r.epoch >= budget.epochs_per_trial) {
        throw EvaluatorError("evaluator reported epoch " + std::to_string(r.epoch) + " of trial " +
                             std::to_string(r.trial_id) + " out of sequence");
      }
      if (!std::isfinite(r.duration_s) || r.duration_s < 0.0) {
        throw EvaluatorError("evaluator reported an invalid epoch duration");
      }
      if (!std::isfinite(r.eval_loss)) {
        failed = true;
        return;
      }
      if (sink) sink->epoch(r, trial.config);
      trial.epochs.push_back(r);
      simulated += r.duration_s;
    };

    try {
      evaluator.run_trial(trial.trial_id, trial.config, budget.epochs_per_trial, on_epoch);
    } catch (const TrialError&) {
      failed = true;
    }

    if (failed || trial.epochs.empty()) {
      trial.status = TrialStatus::failed;
    } else {
      trial.objective = aggregate(trial.epochs, header.aggregator);
      trial.status =
          trial.epochs.size() == budget.epochs_per_trial ? TrialStatus::completed : TrialStatus::cut_by_budget;
      state.observations.push_back({trial.config, *trial.objective, trial.trial_id});
    }
    if (sink) sink->trial_done(trial);
    trials.push_back(std::move(trial));
    ++result.new_trials;
  }

  result.elapsed_s = elapsed();
  finish(result, trials);
  if (sink) sink->result(result.best_trial, result.elapsed_s);
  return result;
}

SearchResult run_search(const RunHeader& header, Evaluator& evaluator, TrialSink* sink) {
  header.budget.validate();
  evaluator.handshake();
  if (sink) sink->header(header);
  return continue_search(header, evaluator, sink, {}, 0.0);
}

SearchResult resume_search(const std::string& log_path, const ResumeOptions& options) {
  LoadedLog log = load_trial_log(log_path);
  RunHeader header = log.header;
  if (options.expected_seed && *options.expected_seed != header.seed) {
    throw LogError(1, "seed " + std::to_string(*options.expected_seed) + " does not match the log's seed " +
                          std::to_string(header.seed));
  }
  if (options.expected_sampler && *options.expected_sampler != header.sampler.kind) {
    throw LogError(1, "sampler " + to_string(*options.expected_sampler) + " does not match the log's sampler " +
                          to_string(header.sampler.kind));
  }
  for (const auto& t : log.trials) {
    try {
      header.space.validate(t.config);
    } catch (const SpaceError& e) {
      throw LogError(0, "trial " + std::to_string(t.trial_id) + ": " + e.what());
    }
  }

  double consumed = 0.0;
  for (const auto& t : log.trials) consumed += t.duration_s();

  if (log.has_result) {
    SearchResult result;
    result.elapsed_s = log.result_elapsed_s;
    finish(result, log.trials);
    return result;
  }

  if (options.evaluator) header.evaluator = *options.evaluator;
  if (header.evaluator.kind == EvaluatorSpec::Kind::synthetic) {
    header.evaluator.synthetic.simulate_durations = header.budget.clock_mode == ClockMode::simulated;
  }
  std::filesystem::resize_file(log_path, log.complete_prefix_bytes);
  auto evaluator = make_evaluator(header.space, header.evaluator);
  evaluator->handshake();
  JsonlTrialLog sink(log_path, JsonlTrialLog::Mode::append);
  return continue_search(header, *evaluator, &sink, std::move(log.trials), consumed);
}

}  // namespace vsrhpo
