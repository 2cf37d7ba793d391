#include "vsrhpo/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json_util.hpp"
#include "vsrhpo/cost_model.hpp"
#include "vsrhpo/evaluator.hpp"
#include "vsrhpo/metrics.hpp"
#include "vsrhpo/orchestrator.hpp"
#include "vsrhpo/reporting.hpp"
#include "vsrhpo/samplers.hpp"
#include "vsrhpo/search_space.hpp"
#include "vsrhpo/trial_log.hpp"

namespace vsrhpo::cli {

namespace {

/// Input problems detected by the CLI itself.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SearchSpace space_or_default(const std::string& path) {
  return path.empty() ? paper_space() : load_space_file(path);
}

/// "115200", "1920m", "32h", "90s".
double parse_duration(const std::string& text) {
  if (text.empty()) throw UsageError("empty duration");
  double scale = 1.0;
  std::string digits = text;
  switch (text.back()) {
    case 'h': scale = 3600.0; digits.pop_back(); break;
    case 'm': scale = 60.0; digits.pop_back(); break;
    case 's': digits.pop_back(); break;
    default: break;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(digits, &used);
  } catch (const std::exception&) {
    throw UsageError("bad duration '" + text + "'");
  }
  if (used != digits.size() || !(v > 0.0)) throw UsageError("bad duration '" + text + "'");
  return v * scale;
}

InputShape parse_input_shape(const std::string& text) {
  std::vector<std::int64_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      parts.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("bad input shape '" + text + "' (expected HxWxCxF)");
    }
  }
  if (parts.size() != 4) throw UsageError("bad input shape '" + text + "' (expected HxWxCxF)");
  for (auto p : parts) {
    if (p <= 0) throw UsageError("input shape '" + text + "' must be positive");
  }
  return {parts[0], parts[1], parts[2], parts[3]};
}

HofvsrAssumptions parse_architecture(const std::string& upsample, const std::string& fusion, std::int64_t kernel) {
  HofvsrAssumptions a;
  a.kernel = kernel;
  if (upsample == "shuffle-conv") a.upsample_order = UpsampleOrder::shuffle_then_conv;
  else if (upsample == "conv-shuffle") a.upsample_order = UpsampleOrder::conv_then_shuffle;
  else throw UsageError("--upsample must be shuffle-conv or conv-shuffle");
  if (fusion == "on") a.trunk_fusion_conv = true;
  else if (fusion == "off") a.trunk_fusion_conv = false;
  else throw UsageError("--trunk-fusion must be on or off");
  return a;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + it + "'");
    try {
      std::size_t used = 0;
      const std::string value = it.substr(eq + 1);
      out[it.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw UsageError("--param value must be numeric in '" + it + "'");
    }
  }
  return out;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << content;
  if (!f) throw UsageError("failed writing '" + path + "'");
}

std::string config_text(const SearchSpace& space, const Configuration& c) {
  std::string s = "{";
  for (const auto& d : space.domains()) {
    if (s.size() > 1) s += ", ";
    s += d.name + ": " + std::to_string(c.at(d.name));
  }
  return s + "}";
}

std::vector<LoadedLog> load_logs(const std::vector<std::string>& paths) {
  std::vector<LoadedLog> logs;
  for (const auto& p : paths) {
    try {
      logs.push_back(load_trial_log(p));
    } catch (const LogError& e) {
      throw LogError(e.line(), p + ": " + std::string(e.what()));
    }
  }
  return logs;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyper-parameter search for face video super-resolution networks", "vsrhpo"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Run-config file (TOML/INI) with option defaults");

  // space
  auto* space_cmd = app.add_subcommand("space", "Inspect a search space file");
  space_cmd->require_subcommand(1);
  std::string space_path;
  for (const char* name : {"size", "validate", "enumerate"}) {
    auto* sub = space_cmd->add_subcommand(name);
    sub->add_option("--space", space_path, "Space definition JSON (default: built-in space)");
  }

  // search
  auto* search_cmd = app.add_subcommand("search", "Run a hyper-parameter search");
  std::string search_space, sampler_name = "tpe", evaluator_text = "synthetic", out_path = "trials.jsonl";
  std::string wall_clock = "32h", clock_text, aggregator_text = "min";
  std::vector<std::string> param_items;
  std::size_t max_trials = 40, epochs = 20;
  std::uint64_t seed = 0, profile_seed = 0;
  double epoch_seconds = 240.0, jitter = 0.0, epoch_timeout = 3600.0;
  bool force = false, resume = false;
  search_cmd->add_option("--space", search_space, "Space definition JSON (default: built-in space)");
  search_cmd->add_option("--sampler", sampler_name, "random | tpe | smac")->capture_default_str();
  search_cmd->add_option("--param", param_items, "Sampler parameter override key=value (repeatable)");
  search_cmd->add_option("--max-trials", max_trials, "Trial budget")->capture_default_str();
  search_cmd->add_option("--epochs", epochs, "Epochs per trial")->capture_default_str();
  search_cmd->add_option("--wall-clock", wall_clock, "Wall-clock limit (seconds, or with s/m/h suffix)")
      ->capture_default_str();
  search_cmd->add_option("--seed", seed, "Sampler seed")->capture_default_str();
  search_cmd->add_option("--evaluator", evaluator_text, "synthetic | exec:<command>")->capture_default_str();
  search_cmd->add_option("--profile-seed", profile_seed, "Synthetic objective profile")->capture_default_str();
  search_cmd->add_option("--epoch-seconds", epoch_seconds, "Synthetic per-epoch duration")->capture_default_str();
  search_cmd->add_option("--epoch-jitter", jitter, "Synthetic relative duration jitter")->capture_default_str();
  search_cmd->add_option("--epoch-timeout", epoch_timeout, "Per-epoch read timeout for exec evaluators (s)")
      ->capture_default_str();
  search_cmd->add_option("--clock", clock_text, "real | simulated (default: simulated for synthetic)");
  search_cmd->add_option("--aggregator", aggregator_text, "Trial objective: min | last")->capture_default_str();
  search_cmd->add_option("--out", out_path, "Trial log path")->capture_default_str();
  search_cmd->add_flag("--force", force, "Overwrite an existing log");
  search_cmd->add_flag("--resume", resume, "Continue the log at --out");

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "Parameter and FLOP accounting");
  std::optional<std::int64_t> res_channels, n_res, up_channels;
  std::int64_t scale = 4, kernel = 3;
  std::string input_text = "36x36x1x3", graph_path, emit_graph, upsample = "shuffle-conv", fusion = "on";
  cost_cmd->add_option("--res-channels", res_channels, "Residual block width");
  cost_cmd->add_option("--n-res", n_res, "Number of residual blocks");
  cost_cmd->add_option("--up-channels", up_channels, "Up-sampling width");
  cost_cmd->add_option("--scale", scale, "Super-resolution factor")->capture_default_str();
  cost_cmd->add_option("--input", input_text, "HxWxCxF")->capture_default_str();
  cost_cmd->add_option("--upsample", upsample, "shuffle-conv | conv-shuffle")->capture_default_str();
  cost_cmd->add_option("--trunk-fusion", fusion, "on | off")->capture_default_str();
  cost_cmd->add_option("--kernel", kernel, "Convolution kernel size")->capture_default_str();
  cost_cmd->add_option("--graph", graph_path, "Architecture description JSON");
  cost_cmd->add_option("--emit-graph", emit_graph, "Also write the generated graph JSON here");

  // report
  auto* report_cmd = app.add_subcommand("report", "Reports from trial logs");
  report_cmd->require_subcommand(1);
  std::vector<std::string> log_paths;
  std::string report_out, svg_path;
  std::size_t k = 5;
  bool all_trials = false;
  std::int64_t report_scale = 4;
  std::string report_input = "36x36x1x3", report_upsample = "shuffle-conv", report_fusion = "on";
  std::int64_t report_kernel = 3;
  std::map<std::string, CLI::App*> reports;
  for (const char* name : {"top-k", "pareto", "convergence", "scatter", "budget"}) {
    auto* sub = report_cmd->add_subcommand(name);
    sub->add_option("--log", log_paths, "Trial log(s)")->required();
    sub->add_option("--out", report_out, "Output file (default: stdout)");
    reports[name] = sub;
  }
  reports["top-k"]->add_option("--k", k, "Number of trials")->capture_default_str();
  reports["scatter"]->add_option("--k", k, "Trials per strategy")->capture_default_str();
  reports["scatter"]->add_flag("--all", all_trials, "Every completed trial instead of the top k");
  reports["scatter"]->add_option("--svg", svg_path, "Also write a two-panel SVG");
  for (const char* name : {"pareto", "scatter"}) {
    reports[name]->add_option("--scale", report_scale)->capture_default_str();
    reports[name]->add_option("--input", report_input)->capture_default_str();
    reports[name]->add_option("--upsample", report_upsample)->capture_default_str();
    reports[name]->add_option("--trunk-fusion", report_fusion)->capture_default_str();
    reports[name]->add_option("--kernel", report_kernel)->capture_default_str();
  }

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Image quality of two PGM files");
  std::string metric_a, metric_b;
  metrics_cmd->add_option("a", metric_a, "Reference PGM")->required();
  metrics_cmd->add_option("b", metric_b, "Test PGM")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (space_cmd->parsed()) {
      const SearchSpace space = space_or_default(space_path);
      if (space_cmd->got_subcommand("size")) {
        out << space.size() << "\n";
      } else if (space_cmd->got_subcommand("validate")) {
        out << "ok: " << space.dimensions() << " domains, " << space.size() << " configurations\n";
      } else {
        space.for_each([&](const Configuration& c) {
          std::string line;
          for (const auto& d : space.domains()) {
            if (!line.empty()) line += ' ';
            line += d.name + "=" + std::to_string(c.at(d.name));
          }
          out << line << "\n";
        });
      }
      return kOk;
    }

    if (search_cmd->parsed()) {
      RunHeader header;
      header.space = space_or_default(search_space);
      header.sampler.kind = parse_sampler_kind(sampler_name);
      apply_overrides(header.sampler, parse_params(param_items));
      header.seed = seed;
      header.budget.max_trials = max_trials;
      header.budget.epochs_per_trial = epochs;
      header.budget.wall_clock_limit_s = parse_duration(wall_clock);
      header.aggregator = parse_aggregator(aggregator_text);
      header.evaluator = EvaluatorSpec::parse(evaluator_text);
      header.evaluator.epoch_timeout_s = epoch_timeout;
      header.evaluator.synthetic.profile_seed = profile_seed;
      header.evaluator.synthetic.epoch_seconds = epoch_seconds;
      header.evaluator.synthetic.jitter = jitter;
      const bool synthetic = header.evaluator.kind == EvaluatorSpec::Kind::synthetic;
      header.budget.clock_mode =
          clock_text.empty() ? (synthetic ? ClockMode::simulated : ClockMode::real) : parse_clock_mode(clock_text);
      header.evaluator.synthetic.simulate_durations = header.budget.clock_mode == ClockMode::simulated;
      header.budget.validate();

      SearchResult result;
      SearchSpace result_space = header.space;
      if (resume) {
        ResumeOptions ro;
        ro.expected_seed = seed;
        ro.expected_sampler = header.sampler.kind;
        if (!synthetic) ro.evaluator = header.evaluator;
        result = resume_search(out_path, ro);
        result_space = load_trial_log(out_path).header.space;
      } else {
        if (std::filesystem::exists(out_path) && !force) {
          throw UsageError("log '" + out_path + "' exists; pass --force to overwrite or --resume to continue");
        }
        header.started_at = utc_timestamp();
        auto evaluator = make_evaluator(header.space, header.evaluator);
        JsonlTrialLog sink(out_path, JsonlTrialLog::Mode::create);
        result = run_search(header, *evaluator, &sink);
      }
      out << "trials: " << result.trials.size() << " (" << result.new_trials << " new)\n";
      out << "elapsed: " << format_duration(result.elapsed_s) << "\n";
      if (!result.best) throw EmptyResult("no trial completed");
      out << "best trial: " << *result.best_trial << "\n";
      out << "best config: " << config_text(result_space, *result.best) << "\n";
      out << "best objective: " << nlohmann::json(result.best_objective).dump() << "\n";
      return kOk;
    }

    if (cost_cmd->parsed()) {
      ArchitectureGraph graph;
      if (!graph_path.empty()) {
        if (res_channels || n_res || up_channels) throw UsageError("--graph excludes the generator options");
        graph = load_graph_file(graph_path);
      } else {
        if (!res_channels || !n_res || !up_channels) {
          throw UsageError("need --res-channels, --n-res and --up-channels (or --graph)");
        }
        graph = hofvsr_graph(*res_channels, *n_res, *up_channels, scale, parse_input_shape(input_text),
                             parse_architecture(upsample, fusion, kernel));
      }
      if (!emit_graph.empty()) emit(emit_graph, graph_to_json(graph) + "\n", out);
      out << report_to_json(graph_cost(graph)) << "\n";
      return kOk;
    }

    if (report_cmd->parsed()) {
      const auto logs = load_logs(log_paths);
      CostSettings settings;
      settings.scale = report_scale;
      settings.input = parse_input_shape(report_input);
      settings.architecture = parse_architecture(report_upsample, report_fusion, report_kernel);
      auto single = [&]() -> const LoadedLog& {
        if (logs.size() != 1) throw UsageError("this report takes exactly one --log");
        return logs.front();
      };
      if (reports["top-k"]->parsed()) {
        std::vector<TrialRecord> rows;
        try {
          rows = top_k(single().trials, k);
        } catch (const ReportError& e) {
          throw EmptyResult(e.what());
        }
        emit(report_out, top_k_csv(rows), out);
      } else if (reports["pareto"]->parsed()) {
        std::vector<ScatterPoint> points;
        try {
          points = scatter_points(logs, settings, 0);
        } catch (const ReportError& e) {
          throw EmptyResult(e.what());
        }
        if (points.empty()) throw EmptyResult("no completed trials");
        emit(report_out, scatter_csv(pareto_front(points)), out);
      } else if (reports["convergence"]->parsed()) {
        std::string csv;
        try {
          csv = convergence_csv(single());
        } catch (const ReportError& e) {
          throw EmptyResult(e.what());
        }
        emit(report_out, csv, out);
      } else if (reports["scatter"]->parsed()) {
        const auto points = scatter_points(logs, settings, all_trials ? 0 : k);
        emit(report_out, scatter_csv(points), out);
        if (!svg_path.empty()) emit(svg_path, scatter_svg(points), out);
      } else {
        emit(report_out, budget_csv(budget_table(logs)), out);
      }
      return kOk;
    }

    if (metrics_cmd->parsed()) {
      const Raster a = read_pgm(metric_a);
      const Raster b = read_pgm(metric_b);
      out << "mse " << nlohmann::json(mse(a, b)).dump() << "\n";
      out << "psnr_db " << format_db(psnr(a, b)) << "\n";
      out << "ssim " << nlohmann::json(ssim(a, b)).dump() << " (8x8 non-overlapping windows)\n";
      return kOk;
    }
  } catch (const EvaluatorError& e) {
    err << "evaluator error: " << e.what() << "\n";
    return kEvaluatorError;
  } catch (const EmptyResult& e) {
    err << "empty result: " << e.what() << "\n";
    return kEmptyResult;
  } catch (const SinkError& e) {
    err << "log write error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    // SpaceError, LogError, CostError, ReportError, MetricError, SamplerError, bad arguments
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kFailure;
}

}  // namespace vsrhpo::cli
