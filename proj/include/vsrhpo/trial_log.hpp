#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsrhpo/evaluator.hpp"
#include "vsrhpo/samplers.hpp"
#include "vsrhpo/search_space.hpp"
#include "vsrhpo/trial.hpp"

namespace vsrhpo {

/// Corrupt or unreadable log. `line()` is 1-based, 0 when not line specific.
class LogError : public std::runtime_error {
 public:
  LogError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Write failure on the sink. Aborts the run.
class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ClockMode { real, simulated };

std::string to_string(ClockMode mode);
ClockMode parse_clock_mode(const std::string& text);

struct BudgetSpec {
  std::size_t max_trials = 40;
  std::size_t epochs_per_trial = 20;
  double wall_clock_limit_s = 32.0 * 3600.0;
  ClockMode clock_mode = ClockMode::simulated;

  void validate() const;
};

/// Everything that determines a run; serialized as the first log line.
struct RunHeader {
  SearchSpace space = paper_space();
  SamplerSpec sampler;
  std::uint64_t seed = 0;
  BudgetSpec budget;
  Aggregator aggregator = Aggregator::min;
  EvaluatorSpec evaluator;
  /// Wall-clock start time; the only field that differs between reruns.
  std::string started_at;
};

/// Receives the log stream. Every call must reach durable storage before it
/// returns; failures throw SinkError.
class TrialSink {
 public:
  virtual ~TrialSink() = default;
  virtual void header(const RunHeader& header) = 0;
  virtual void epoch(const EpochReport& report, const Configuration& config) = 0;
  virtual void trial_done(const TrialRecord& trial) = 0;
  virtual void result(std::optional<std::uint64_t> best_trial, double elapsed_s) = 0;
};

/// JSON Lines trial log, flushed after every line. The file is opened on
/// the first write.
class JsonlTrialLog final : public TrialSink {
 public:
  enum class Mode { create, append };
  JsonlTrialLog(const std::string& path, Mode mode);

  void header(const RunHeader& header) override;
  void epoch(const EpochReport& report, const Configuration& config) override;
  void trial_done(const TrialRecord& trial) override;
  void result(std::optional<std::uint64_t> best_trial, double elapsed_s) override;

 private:
  void write_line(const std::string& line);

  std::string path_;
  Mode mode_;
  std::ofstream out_;
};

std::string header_line(const RunHeader& header);
std::string epoch_line(const EpochReport& report, const Configuration& config);
std::string trial_done_line(const TrialRecord& trial);
std::string result_line(std::optional<std::uint64_t> best_trial, double elapsed_s);

/// Parsed trial log.
struct LoadedLog {
  RunHeader header;
  /// Trials closed by a trial_done line, in log order.
  std::vector<TrialRecord> trials;
  /// Every epoch line in log order, including those of an unfinished trial.
  std::vector<EpochReport> epochs;
  /// Trial id of trailing epoch lines without a trial_done, if any.
  std::optional<std::uint64_t> partial_trial;
  bool has_result = false;
  std::optional<std::uint64_t> result_best_trial;
  double result_elapsed_s = 0.0;
  /// Byte length of the prefix that ends with the last trial_done line (or
  /// the header when no trial finished).
  std::size_t complete_prefix_bytes = 0;
};

/// Parses a log. A final line without a terminating newline that fails to
/// parse is treated as an interrupted write and ignored; any other bad line
/// throws LogError with its line number.
LoadedLog parse_trial_log(const std::string& text);
LoadedLog load_trial_log(const std::string& path);

}  // namespace vsrhpo
