#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vsrhpo/search_space.hpp"

namespace vsrhpo {

struct EpochReport {
  std::uint64_t trial_id = 0;
  std::size_t epoch = 0;
  double eval_loss = 0.0;
  double duration_s = 0.0;
};

enum class TrialStatus { completed, failed, cut_by_budget };

std::string to_string(TrialStatus status);
TrialStatus parse_trial_status(const std::string& text);

/// completed: all epochs ran. cut_by_budget: the evaluator ended the trial
/// after at least one but fewer than the budgeted epochs. failed: evaluator
/// error; no objective.
struct TrialRecord {
  std::uint64_t trial_id = 0;
  Configuration config;
  std::vector<EpochReport> epochs;
  TrialStatus status = TrialStatus::completed;
  std::optional<double> objective;

  double duration_s() const {
    double total = 0.0;
    for (const auto& e : epochs) total += e.duration_s;
    return total;
  }
};

enum class Aggregator { min, last };

std::string to_string(Aggregator aggregator);
Aggregator parse_aggregator(const std::string& text);

/// Trial objective from its epoch losses; nullopt when there are none.
std::optional<double> aggregate(const std::vector<EpochReport>& epochs, Aggregator aggregator);

}  // namespace vsrhpo
