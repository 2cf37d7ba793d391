#include "vsrhpo/trial_log.hpp"

#include <cmath>
#include <sstream>

#include "json_util.hpp"
#include "vsrhpo/rng.hpp"

namespace vsrhpo {

using detail::ordered_json;

std::string to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::completed: return "completed";
    case TrialStatus::failed: return "failed";
    case TrialStatus::cut_by_budget: return "cut_by_budget";
  }
  return "?";
}

TrialStatus parse_trial_status(const std::string& text) {
  if (text == "completed") return TrialStatus::completed;
  if (text == "failed") return TrialStatus::failed;
  if (text == "cut_by_budget") return TrialStatus::cut_by_budget;
  throw std::invalid_argument("unknown trial status '" + text + "'");
}

std::string to_string(Aggregator a) { return a == Aggregator::min ? "min" : "last"; }

Aggregator parse_aggregator(const std::string& text) {
  if (text == "min") return Aggregator::min;
  if (text == "last") return Aggregator::last;
  throw std::invalid_argument("aggregator must be 'min' or 'last'");
}

std::optional<double> aggregate(const std::vector<EpochReport>& epochs, Aggregator a) {
  if (epochs.empty()) return std::nullopt;
  if (a == Aggregator::last) return epochs.back().eval_loss;
  double best = epochs.front().eval_loss;
  for (const auto& e : epochs) best = std::min(best, e.eval_loss);
  return best;
}

std::string to_string(ClockMode mode) { return mode == ClockMode::real ? "real" : "simulated"; }

ClockMode parse_clock_mode(const std::string& text) {
  if (text == "real") return ClockMode::real;
  if (text == "simulated") return ClockMode::simulated;
  throw std::invalid_argument("clock must be 'real' or 'simulated'");
}

void BudgetSpec::validate() const {
  if (max_trials < 1) throw std::invalid_argument("max_trials must be positive");
  if (epochs_per_trial < 1) throw std::invalid_argument("epochs_per_trial must be positive");
  if (!(wall_clock_limit_s > 0.0)) throw std::invalid_argument("wall clock limit must be positive");
}

namespace {

ordered_json config_json(const Configuration& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, value] : c.assignments()) j[name] = value;
  return j;
}

ordered_json loss_json(std::optional<double> v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

std::string header_line(const RunHeader& h) {
  ordered_json j;
  j["type"] = "header";
  j["protocol"] = kProtocolVersion;
  j["space_hash"] = h.space.hash();
  j["sampler"] = to_string(h.sampler.kind);
  j["seed"] = h.seed;
  j["budget"] = {{"max_trials", h.budget.max_trials},
                 {"epochs_per_trial", h.budget.epochs_per_trial},
                 {"wall_clock_s", static_cast<std::int64_t>(std::llround(h.budget.wall_clock_limit_s))}};
  j["rng"] = kRngName;
  j["sampler_params"] = ordered_json::object();
  for (const auto& [k, v] : sampler_params(h.sampler)) j["sampler_params"][k] = v;
  j["clock"] = to_string(h.budget.clock_mode);
  j["aggregator"] = to_string(h.aggregator);
  ordered_json ev;
  ev["spec"] = h.evaluator.describe();
  if (h.evaluator.kind == EvaluatorSpec::Kind::synthetic) {
    ev["profile_seed"] = h.evaluator.synthetic.profile_seed;
    ev["epoch_seconds"] = h.evaluator.synthetic.epoch_seconds;
    ev["jitter"] = h.evaluator.synthetic.jitter;
  } else {
    ev["epoch_timeout_s"] = h.evaluator.epoch_timeout_s;
  }
  j["evaluator"] = ev;
  j["space"] = ordered_json::parse(space_to_json(h.space));
  j["started_at"] = h.started_at;
  return j.dump();
}

std::string epoch_line(const EpochReport& r, const Configuration& config) {
  ordered_json j;
  j["type"] = "epoch";
  j["trial_id"] = r.trial_id;
  j["epoch"] = r.epoch;
  j["config"] = config_json(config);
  j["eval_loss"] = r.eval_loss;
  j["duration_s"] = r.duration_s;
  return j.dump();
}

std::string trial_done_line(const TrialRecord& t) {
  ordered_json j;
  j["type"] = "trial_done";
  j["trial_id"] = t.trial_id;
  j["status"] = to_string(t.status);
  j["objective"] = loss_json(t.objective);
  j["config"] = config_json(t.config);
  return j.dump();
}

std::string result_line(std::optional<std::uint64_t> best_trial, double elapsed_s) {
  ordered_json j;
  j["type"] = "result";
  j["best_trial"] = best_trial ? ordered_json(*best_trial) : ordered_json(nullptr);
  j["elapsed_s"] = elapsed_s;
  return j.dump();
}

JsonlTrialLog::JsonlTrialLog(const std::string& path, Mode mode) : path_(path), mode_(mode) {}

void JsonlTrialLog::write_line(const std::string& line) {
  if (!out_.is_open()) {
    out_.open(path_, std::ios::binary | (mode_ == Mode::append ? std::ios::app : std::ios::trunc));
    if (!out_) throw SinkError("cannot open trial log '" + path_ + "' for writing");
  }
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw SinkError("write to trial log '" + path_ + "' failed");
}

void JsonlTrialLog::header(const RunHeader& h) { write_line(header_line(h)); }
void JsonlTrialLog::epoch(const EpochReport& r, const Configuration& c) { write_line(epoch_line(r, c)); }
void JsonlTrialLog::trial_done(const TrialRecord& t) { write_line(trial_done_line(t)); }
void JsonlTrialLog::result(std::optional<std::uint64_t> best, double elapsed) {
  write_line(result_line(best, elapsed));
}

// ---------------------------------------------------------------------------
// parsing

namespace {

template <typename T>
T get(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw LogError(line, std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw LogError(line, std::string("bad value for \"") + key + "\"");
  }
}

Configuration parse_config(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw LogError(line, "config must be an object");
  std::map<std::string, std::int64_t> a;
  for (const auto& item : j.items()) {
    if (!item.value().is_number_integer()) throw LogError(line, "config values must be integers");
    a.emplace(item.key(), item.value().get<std::int64_t>());
  }
  return Configuration(std::move(a));
}

RunHeader parse_header(const nlohmann::json& j, std::size_t line) {
  RunHeader h;
  if (get<int>(j, "protocol", line) != kProtocolVersion) throw LogError(line, "unsupported log protocol");
  try {
    if (!j.contains("space")) throw LogError(line, "header lacks the space definition");
    h.space = parse_space_json(j["space"].dump());
  } catch (const SpaceError& e) {
    throw LogError(line, std::string("bad space in header: ") + e.what());
  }
  if (get<std::string>(j, "space_hash", line) != h.space.hash()) {
    throw LogError(line, "space_hash does not match the embedded space");
  }
  try {
    h.sampler.kind = parse_sampler_kind(get<std::string>(j, "sampler", line));
    if (j.contains("sampler_params")) {
      apply_overrides(h.sampler, get<std::map<std::string, double>>(j, "sampler_params", line));
    }
  } catch (const SamplerError& e) {
    throw LogError(line, e.what());
  }
  h.seed = get<std::uint64_t>(j, "seed", line);
  const auto& b = j.contains("budget") ? j["budget"] : throw LogError(line, "missing field \"budget\"");
  h.budget.max_trials = get<std::size_t>(b, "max_trials", line);
  h.budget.epochs_per_trial = get<std::size_t>(b, "epochs_per_trial", line);
  h.budget.wall_clock_limit_s = static_cast<double>(get<std::int64_t>(b, "wall_clock_s", line));
  try {
    h.budget.clock_mode = parse_clock_mode(j.value("clock", std::string("real")));
    h.aggregator = parse_aggregator(j.value("aggregator", std::string("min")));
    h.budget.validate();
  } catch (const std::invalid_argument& e) {
    throw LogError(line, e.what());
  }
  if (j.contains("evaluator")) {
    const auto& ev = j["evaluator"];
    try {
      h.evaluator = EvaluatorSpec::parse(get<std::string>(ev, "spec", line));
    } catch (const std::invalid_argument& e) {
      throw LogError(line, e.what());
    }
    if (h.evaluator.kind == EvaluatorSpec::Kind::synthetic) {
      h.evaluator.synthetic.profile_seed = get<std::uint64_t>(ev, "profile_seed", line);
      h.evaluator.synthetic.epoch_seconds = get<double>(ev, "epoch_seconds", line);
      h.evaluator.synthetic.jitter = get<double>(ev, "jitter", line);
      h.evaluator.synthetic.simulate_durations = h.budget.clock_mode == ClockMode::simulated;
    } else {
      h.evaluator.epoch_timeout_s = get<double>(ev, "epoch_timeout_s", line);
    }
  }
  h.started_at = j.value("started_at", std::string());
  return h;
}

}  // namespace

LoadedLog parse_trial_log(const std::string& text) {
  LoadedLog log;
  bool have_header = false;
  std::optional<TrialRecord> open;
  std::size_t offset = 0;
  std::size_t line_no = 0;

  while (offset < text.size()) {
    const std::size_t nl = text.find('\n', offset);
    const bool terminated = nl != std::string::npos;
    const std::size_t end = terminated ? nl : text.size();
    const std::string line = text.substr(offset, end - offset);
    const std::size_t next = terminated ? nl + 1 : text.size();
    ++line_no;
    offset = next;
    if (line.empty()) {
      if (terminated) throw LogError(line_no, "empty line");
      break;
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      if (!terminated) break;  // interrupted final write
      throw LogError(line_no, "malformed JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw LogError(line_no, "log line needs a string \"type\"");
    }
    const std::string type = j["type"];
    if (!have_header) {
      if (type != "header") throw LogError(line_no, "first line must be the header");
      log.header = parse_header(j, line_no);
      have_header = true;
      log.complete_prefix_bytes = next;
      continue;
    }
    if (log.has_result) throw LogError(line_no, "data after the result line");

    if (type == "epoch") {
      EpochReport r;
      r.trial_id = get<std::uint64_t>(j, "trial_id", line_no);
      r.epoch = get<std::size_t>(j, "epoch", line_no);
      r.eval_loss = get<double>(j, "eval_loss", line_no);
      r.duration_s = get<double>(j, "duration_s", line_no);
      const Configuration config = parse_config(j.contains("config") ? j["config"] : nlohmann::json(), line_no);
      if (!open) {
        if (r.trial_id != log.trials.size()) throw LogError(line_no, "unexpected trial_id");
        open = TrialRecord{};
        open->trial_id = r.trial_id;
        open->config = config;
      } else if (r.trial_id != open->trial_id) {
        throw LogError(line_no, "epoch for a new trial before trial_done");
      }
      if (!(config == open->config)) throw LogError(line_no, "config changed within a trial");
      if (r.epoch != open->epochs.size()) throw LogError(line_no, "epochs out of order");
      if (r.epoch >= log.header.budget.epochs_per_trial) throw LogError(line_no, "epoch beyond the budget");
      open->epochs.push_back(r);
      log.epochs.push_back(r);
    } else if (type == "trial_done") {
      const auto id = get<std::uint64_t>(j, "trial_id", line_no);
      if (!open) {
        if (id != log.trials.size()) throw LogError(line_no, "unexpected trial_id");
        open = TrialRecord{};
        open->trial_id = id;
        open->config = parse_config(j.contains("config") ? j["config"] : nlohmann::json(), line_no);
      } else if (id != open->trial_id) {
        throw LogError(line_no, "trial_done for a trial that is not running");
      }
      try {
        open->status = parse_trial_status(get<std::string>(j, "status", line_no));
      } catch (const std::invalid_argument& e) {
        throw LogError(line_no, e.what());
      }
      if (!j.contains("objective")) throw LogError(line_no, "missing field \"objective\"");
      if (!j["objective"].is_null()) open->objective = get<double>(j, "objective", line_no);
      const bool has_obj = open->objective.has_value();
      const std::size_t n = open->epochs.size();
      const bool consistent =
          (open->status == TrialStatus::failed && !has_obj) ||
          (open->status == TrialStatus::completed && has_obj && n == log.header.budget.epochs_per_trial) ||
          (open->status == TrialStatus::cut_by_budget && has_obj && n >= 1 &&
           n < log.header.budget.epochs_per_trial);
      if (!consistent) throw LogError(line_no, "trial status inconsistent with its epochs");
      log.trials.push_back(std::move(*open));
      open.reset();
      log.complete_prefix_bytes = next;
    } else if (type == "result") {
      if (open) throw LogError(line_no, "result line inside an unfinished trial");
      log.has_result = true;
      if (!j.contains("best_trial")) throw LogError(line_no, "missing field \"best_trial\"");
      if (!j["best_trial"].is_null()) log.result_best_trial = get<std::uint64_t>(j, "best_trial", line_no);
      log.result_elapsed_s = get<double>(j, "elapsed_s", line_no);
    } else if (type == "header") {
      throw LogError(line_no, "duplicate header");
    } else {
      throw LogError(line_no, "unknown line type '" + type + "'");
    }
  }
  if (!have_header) throw LogError(0, "trial log is empty");
  if (open) log.partial_trial = open->trial_id;
  return log;
}

LoadedLog load_trial_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError(0, "cannot open trial log '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trial_log(ss.str());
}

}  // namespace vsrhpo
