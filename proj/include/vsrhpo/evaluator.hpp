#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsrhpo/search_space.hpp"
#include "vsrhpo/trial.hpp"

namespace vsrhpo {

/// Fatal evaluator failure: handshake, protocol violation, timeout or a
/// dead worker. Aborts the run.
class EvaluatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure confined to one trial. The run continues.
class TrialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Trains and evaluates one configuration per call, streaming one report
/// per finished epoch.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual void handshake() {}

  /// True when reported durations are meaningful for a simulated clock.
  virtual bool supplies_durations() const = 0;

  /// Runs up to `max_epochs` epochs. Throws TrialError for a per-trial
  /// failure and EvaluatorError for anything fatal.
  virtual void run_trial(std::uint64_t trial_id, const Configuration& config, std::size_t max_epochs,
                         const EpochCallback& on_epoch) = 0;
};

/// Per-dimension weights and optimum of the synthetic objective, derived
/// from a profile seed with splitmix64:
///   unit(x)  = (splitmix64(x) >> 11) * 2^-53
///   draw(k)  = unit(seed ^ splitmix64(k))
///   weight_d = 0.5 + draw(2d),  optimum_d = draw(2d + 1)
struct SyntheticProfile {
  std::vector<double> weights;
  std::vector<double> optimum;

  static SyntheticProfile from_seed(std::uint64_t profile_seed, std::size_t dimensions);
};

/// base = sum_d w_d * (idx_d / (|D_d| - 1) - o_d)^2, with idx_d/(|D_d|-1)
/// taken as 0 for single-valued domains.
double synthetic_base(const SearchSpace& space, const Configuration& config, const SyntheticProfile& profile);

/// Loss after training `epoch` (0-based) epochs:
///   base * (0.3 + 0.7 * exp(-epoch / 5)) + 0.01 * base * u,
/// u = 2 * unit(splitmix64(splitmix64(seed ^ 0x6e6f697365) ^ splitmix64(rank)) ^ epoch) - 1,
/// where rank is the lexicographic rank of the configuration.
double synthetic_evaluate(const SearchSpace& space, const Configuration& config, std::size_t epoch,
                          std::uint64_t profile_seed);

struct SyntheticOptions {
  std::uint64_t profile_seed = 0;
  double epoch_seconds = 240.0;
  /// Relative half-width of uniform per-epoch duration jitter.
  double jitter = 0.0;
  /// Report epoch_seconds (with jitter) instead of measured wall time.
  bool simulate_durations = true;
};

/// Duration reported for one simulated epoch.
double synthetic_duration(const SyntheticOptions& options, std::uint64_t trial_id, std::size_t epoch);

class SyntheticEvaluator final : public Evaluator {
 public:
  SyntheticEvaluator(SearchSpace space, SyntheticOptions options);

  bool supplies_durations() const override { return options_.simulate_durations; }
  void run_trial(std::uint64_t trial_id, const Configuration& config, std::size_t max_epochs,
                 const EpochCallback& on_epoch) override;

  const SyntheticOptions& options() const { return options_; }

 private:
  SearchSpace space_;
  SyntheticOptions options_;
};

/// Speaks the NDJSON evaluator protocol with a child process started via
/// /bin/sh -c. SIGPIPE is ignored for the lifetime of the process so a
/// dead worker surfaces as an EvaluatorError instead of a signal.
class ProcessEvaluator final : public Evaluator {
 public:
  ProcessEvaluator(std::string command, std::chrono::milliseconds epoch_timeout);
  ~ProcessEvaluator() override;
  ProcessEvaluator(const ProcessEvaluator&) = delete;
  ProcessEvaluator& operator=(const ProcessEvaluator&) = delete;

  void handshake() override;
  bool supplies_durations() const override { return true; }
  void run_trial(std::uint64_t trial_id, const Configuration& config, std::size_t max_epochs,
                 const EpochCallback& on_epoch) override;

 private:
  void send(const std::string& line);
  std::string receive();
  void shutdown();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// How to build an evaluator; recorded in the trial log header so a run can
/// be resumed from the log alone.
struct EvaluatorSpec {
  enum class Kind { synthetic, exec };
  Kind kind = Kind::synthetic;
  SyntheticOptions synthetic;
  std::string command;
  double epoch_timeout_s = 3600.0;

  /// "synthetic" or "exec:<command line>".
  static EvaluatorSpec parse(const std::string& text);
  std::string describe() const;
};

std::unique_ptr<Evaluator> make_evaluator(const SearchSpace& space, const EvaluatorSpec& spec);

inline constexpr int kProtocolVersion = 1;

}  // namespace vsrhpo
