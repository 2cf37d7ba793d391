#include "vsrhpo/evaluator.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>
#include <regex>
#include <thread>

#include "json_util.hpp"
#include "vsrhpo/rng.hpp"

namespace vsrhpo {

namespace {

double unit(std::uint64_t x) { return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53; }

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;  // "noise"
constexpr std::uint64_t kDurationSalt = 0x6475726174ULL;  // "durat"

}  // namespace

SyntheticProfile SyntheticProfile::from_seed(std::uint64_t seed, std::size_t dimensions) {
  SyntheticProfile p;
  for (std::size_t d = 0; d < dimensions; ++d) {
    p.weights.push_back(0.5 + unit(seed ^ splitmix64(2 * d)));
    p.optimum.push_back(unit(seed ^ splitmix64(2 * d + 1)));
  }
  return p;
}

double synthetic_base(const SearchSpace& space, const Configuration& config, const SyntheticProfile& profile) {
  const IndexVector idx = space.encode(config);
  if (profile.weights.size() != idx.size()) throw std::invalid_argument("profile dimension mismatch");
  double base = 0.0;
  for (std::size_t d = 0; d < idx.size(); ++d) {
    const std::size_t n = space.domains()[d].size();
    const double x = n > 1 ? static_cast<double>(idx[d]) / static_cast<double>(n - 1) : 0.0;
    const double diff = x - profile.optimum[d];
    base += profile.weights[d] * diff * diff;
  }
  return base;
}

double synthetic_evaluate(const SearchSpace& space, const Configuration& config, std::size_t epoch,
                          std::uint64_t profile_seed) {
  const auto profile = SyntheticProfile::from_seed(profile_seed, space.dimensions());
  const double base = synthetic_base(space, config, profile);
  const std::uint64_t rank = space.rank(space.encode(config));
  const std::uint64_t key = splitmix64(profile_seed ^ kNoiseSalt) ^ splitmix64(rank);
  const double u = 2.0 * unit(splitmix64(key) ^ static_cast<std::uint64_t>(epoch)) - 1.0;
  const double decay = 0.3 + 0.7 * std::exp(-static_cast<double>(epoch) / 5.0);
  return base * decay + 0.01 * base * u;
}

double synthetic_duration(const SyntheticOptions& o, std::uint64_t trial_id, std::size_t epoch) {
  if (o.jitter == 0.0) return o.epoch_seconds;
  const std::uint64_t key = splitmix64(o.profile_seed ^ kDurationSalt) ^ splitmix64(trial_id);
  const double u = 2.0 * unit(splitmix64(key) ^ static_cast<std::uint64_t>(epoch)) - 1.0;
  return o.epoch_seconds * (1.0 + o.jitter * u);
}

SyntheticEvaluator::SyntheticEvaluator(SearchSpace space, SyntheticOptions options)
    : space_(std::move(space)), options_(options) {
  if (!(options_.epoch_seconds > 0.0)) throw std::invalid_argument("epoch_seconds must be positive");
  if (!(options_.jitter >= 0.0 && options_.jitter < 1.0)) throw std::invalid_argument("jitter must lie in [0, 1)");
}

void SyntheticEvaluator::run_trial(std::uint64_t trial_id, const Configuration& config, std::size_t max_epochs,
                                   const EpochCallback& on_epoch) {
  space_.validate(config);
  for (std::size_t e = 0; e < max_epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    EpochReport r;
    r.trial_id = trial_id;
    r.epoch = e;
    r.eval_loss = synthetic_evaluate(space_, config, e, options_.profile_seed);
    r.duration_s = options_.simulate_durations
                       ? synthetic_duration(options_, trial_id, e)
                       : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    on_epoch(r);
  }
}

// ---------------------------------------------------------------------------
// ProcessEvaluator

ProcessEvaluator::ProcessEvaluator(std::string command, std::chrono::milliseconds epoch_timeout)
    : command_(std::move(command)), timeout_(epoch_timeout) {
  if (command_.empty()) throw EvaluatorError("empty evaluator command");
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw EvaluatorError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw EvaluatorError(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw EvaluatorError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  pid_ = pid;
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessEvaluator::~ProcessEvaluator() { shutdown(); }

void ProcessEvaluator::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // closing stdin is the stop signal; give the worker a moment to exit
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void ProcessEvaluator::send(const std::string& line) {
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("evaluator stdin closed: ") + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::string ProcessEvaluator::receive() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw EvaluatorError("evaluator timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw EvaluatorError("evaluator exited unexpectedly");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

// Non-finite losses arrive as the bare tokens NaN, Infinity and -Infinity
// that Python's json module emits; they are mapped to null.
std::string replace_non_finite(const std::string& line) {
  static const std::regex token(R"(([:\[,]\s*)(-?Infinity|NaN)(\s*[,}\]]))");
  std::string out = line;
  for (std::string prev; prev != out;) {
    prev = out;
    out = std::regex_replace(out, token, "$1null$3");
  }
  return out;
}

nlohmann::json parse_message(const std::string& line) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    try {
      msg = nlohmann::json::parse(replace_non_finite(line));
    } catch (const nlohmann::json::exception&) {
      throw EvaluatorError("evaluator sent malformed JSON: " + line);
    }
  } catch (const nlohmann::json::exception&) {
    throw EvaluatorError("evaluator sent malformed JSON: " + line);
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    throw EvaluatorError("evaluator message without a type: " + line);
  }
  return msg;
}

}  // namespace

void ProcessEvaluator::handshake() {
  send(detail::ordered_json{{"type", "hello"}, {"protocol", kProtocolVersion}}.dump());
  std::string line;
  try {
    line = receive();
  } catch (const EvaluatorError& e) {
    throw EvaluatorError(std::string("handshake failed: ") + e.what());
  }
  const auto msg = parse_message(line);
  if (msg["type"] != "hello" || !msg.contains("protocol") || msg["protocol"] != kProtocolVersion) {
    throw EvaluatorError("handshake failed: unexpected reply " + line);
  }
}

void ProcessEvaluator::run_trial(std::uint64_t trial_id, const Configuration& config, std::size_t max_epochs,
                                 const EpochCallback& on_epoch) {
  detail::ordered_json start{{"type", "start_trial"}, {"trial_id", trial_id}};
  start["config"] = detail::ordered_json::object();
  for (const auto& [name, value] : config.assignments()) start["config"][name] = value;
  start["max_epochs"] = max_epochs;
  send(start.dump());

  for (;;) {
    const std::string line = receive();
    const auto msg = parse_message(line);
    const std::string type = msg["type"];
    if (!msg.contains("trial_id") || !msg["trial_id"].is_number_unsigned() ||
        msg["trial_id"].get<std::uint64_t>() != trial_id) {
      throw EvaluatorError("evaluator message for the wrong trial: " + line);
    }
    if (type == "epoch") {
      EpochReport r;
      r.trial_id = trial_id;
      try {
        r.epoch = msg.at("epoch").get<std::size_t>();
        const auto& loss = msg.at("eval_loss");
        r.eval_loss = loss.is_null() ? std::numeric_limits<double>::quiet_NaN() : loss.get<double>();
        r.duration_s = msg.at("duration_s").get<double>();
      } catch (const nlohmann::json::exception&) {
        throw EvaluatorError("malformed epoch message: " + line);
      }
      on_epoch(r);
    } else if (type == "trial_done") {
      return;
    } else if (type == "error") {
      throw TrialError(msg.value("message", std::string("evaluator reported an error")));
    } else {
      throw EvaluatorError("unknown evaluator message type '" + type + "'");
    }
  }
}

// ---------------------------------------------------------------------------

EvaluatorSpec EvaluatorSpec::parse(const std::string& text) {
  EvaluatorSpec s;
  if (text == "synthetic") {
    s.kind = Kind::synthetic;
  } else if (text.rfind("exec:", 0) == 0 && text.size() > 5) {
    s.kind = Kind::exec;
    s.command = text.substr(5);
  } else {
    throw std::invalid_argument("evaluator must be 'synthetic' or 'exec:<command>'");
  }
  return s;
}

std::string EvaluatorSpec::describe() const { return kind == Kind::synthetic ? "synthetic" : "exec:" + command; }

std::unique_ptr<Evaluator> make_evaluator(const SearchSpace& space, const EvaluatorSpec& spec) {
  if (spec.kind == EvaluatorSpec::Kind::synthetic) return std::make_unique<SyntheticEvaluator>(space, spec.synthetic);
  const auto ms = std::chrono::milliseconds(static_cast<long long>(spec.epoch_timeout_s * 1000.0));
  return std::make_unique<ProcessEvaluator>(spec.command, ms);
}

}  // namespace vsrhpo
