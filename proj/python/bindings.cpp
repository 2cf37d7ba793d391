#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vsrhpo/cost_model.hpp"
#include "vsrhpo/evaluator.hpp"
#include "vsrhpo/metrics.hpp"
#include "vsrhpo/orchestrator.hpp"
#include "vsrhpo/reporting.hpp"
#include "vsrhpo/samplers.hpp"
#include "vsrhpo/search_space.hpp"

namespace py = pybind11;
using namespace vsrhpo;

namespace {

using ConfigDict = std::map<std::string, std::int64_t>;

SearchSpace space_from(const std::vector<std::pair<std::string, std::vector<std::int64_t>>>& domains) {
  return domains.empty() ? paper_space() : build_space(domains);
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> domains_of(const SearchSpace& space) {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  for (const auto& d : space.domains()) out.emplace_back(d.name, d.values);
  return out;
}

Raster raster_from(const std::vector<std::vector<double>>& rows, double max_val) {
  if (rows.empty()) throw MetricError("raster needs at least one row");
  Raster r(rows.size(), rows.front().size(), max_val);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != r.width) throw MetricError("raster rows differ in length");
    for (std::size_t j = 0; j < r.width; ++j) r.at(i, j) = rows[i][j];
  }
  return r;
}

py::dict report_dict(const CostReport& r) {
  py::dict d;
  d["label"] = r.label;
  d["total_params"] = r.total_params;
  d["total_flops"] = r.total_flops;
  d["assumptions"] = r.assumptions;
  d["convention"] = flop_convention();
  return d;
}

py::dict trial_dict(const TrialRecord& t) {
  py::dict d;
  d["trial_id"] = t.trial_id;
  d["config"] = t.config.assignments();
  d["status"] = to_string(t.status);
  d["objective"] = t.objective ? py::cast(*t.objective) : py::none();
  std::vector<double> losses;
  for (const auto& e : t.epochs) losses.push_back(e.eval_loss);
  d["losses"] = losses;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vsrhpo, m) {
  m.doc() = "Hyper-parameter search engine for a face video super-resolution network family";

  py::register_exception<SpaceError>(m, "SpaceError", PyExc_ValueError);
  py::register_exception<SamplerError>(m, "SamplerError", PyExc_ValueError);
  py::register_exception<CostError>(m, "CostError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<ReportError>(m, "ReportError", PyExc_ValueError);
  py::register_exception<LogError>(m, "LogError", PyExc_ValueError);
  py::register_exception<EvaluatorError>(m, "EvaluatorError", PyExc_RuntimeError);

  m.def("paper_space", [] { return domains_of(paper_space()); },
        "Domains of the built-in three-dimensional space as (name, values) pairs");
  m.def("load_space", [](const std::string& path) { return domains_of(load_space_file(path)); }, py::arg("path"));
  m.def("space_size", [](const std::vector<std::pair<std::string, std::vector<std::int64_t>>>& d) {
    return space_from(d).size();
  }, py::arg("domains") = std::vector<std::pair<std::string, std::vector<std::int64_t>>>{});
  m.def("encode", [](const ConfigDict& c) { return paper_space().encode(Configuration(c)); }, py::arg("config"));
  m.def("decode", [](const IndexVector& idx) { return paper_space().decode(idx).assignments(); }, py::arg("indices"));
  m.def("rank", [](const ConfigDict& c) {
    const auto s = paper_space();
    return s.rank(s.encode(Configuration(c)));
  }, py::arg("config"));
  m.def("unrank", [](std::uint64_t r) {
    const auto s = paper_space();
    return s.decode(s.unrank(r)).assignments();
  }, py::arg("rank"));

  m.def("quantile_split", [](const std::vector<double>& objectives, double gamma) {
    const auto s = paper_space();
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < objectives.size(); ++i) obs.push_back({s.decode(s.unrank(0)), objectives[i], i});
    auto [good, bad] = quantile_split(obs, gamma);
    std::vector<std::uint64_t> g, b;
    for (const auto& o : good) g.push_back(o.trial_index);
    for (const auto& o : bad) b.push_back(o.trial_index);
    return std::make_pair(g, b);
  }, py::arg("objectives"), py::arg("gamma"), "Indices of the good and bad observations");
  m.def("expected_improvement", &expected_improvement, py::arg("mean"), py::arg("std"), py::arg("incumbent"));
  m.def("propose", [](const std::string& sampler, const std::vector<std::pair<ConfigDict, double>>& history,
                      std::uint64_t seed, const std::map<std::string, double>& params) {
    const auto s = paper_space();
    SamplerSpec spec;
    spec.kind = parse_sampler_kind(sampler);
    apply_overrides(spec, params);
    SamplerState state;
    state.rng_seed = seed;
    state.proposal_count = history.size();
    for (std::size_t i = 0; i < history.size(); ++i) {
      state.observations.push_back({Configuration(history[i].first), history[i].second, i});
    }
    return propose(s, state, spec).assignments();
  }, py::arg("sampler"), py::arg("history"), py::arg("seed") = 0,
        py::arg("params") = std::map<std::string, double>{},
        "Next configuration of the built-in space given (config, objective) history");

  m.def("conv2d_cost", [](std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t h, std::int64_t w, bool bias) {
    const auto c = conv2d_cost(LayerSpec::conv(in, out, k, bias), Shape{h, w, in});
    return std::make_pair(c.params, c.flops);
  }, py::arg("in_channels"), py::arg("out_channels"), py::arg("kernel"), py::arg("height"), py::arg("width"),
        py::arg("bias") = true, "(params, flops) of a same-padded stride-1 convolution");
  m.def("network_cost", [](std::int64_t res, std::int64_t n_res, std::int64_t up, std::int64_t scale,
                           std::array<std::int64_t, 4> input) {
    return report_dict(graph_cost(hofvsr_graph(res, n_res, up, scale, {input[0], input[1], input[2], input[3]})));
  }, py::arg("res_channels"), py::arg("n_res"), py::arg("up_channels"), py::arg("scale") = 4,
        py::arg("input") = std::array<std::int64_t, 4>{36, 36, 1, 3});
  m.def("graph_cost_json", [](const std::string& text) { return report_dict(graph_cost(graph_from_json(text))); },
        py::arg("graph_json"));

  m.def("psnr", [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                   double max_val) { return psnr(raster_from(a, max_val), raster_from(b, max_val)); },
        py::arg("a"), py::arg("b"), py::arg("max_val") = 255.0);
  m.def("ssim", [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                   double max_val, std::size_t window) {
    SsimOptions o;
    o.window = window;
    return ssim(raster_from(a, max_val), raster_from(b, max_val), o);
  }, py::arg("a"), py::arg("b"), py::arg("max_val") = 255.0, py::arg("window") = 8);

  m.def("synthetic_loss", [](const ConfigDict& c, std::size_t epoch, std::uint64_t profile_seed) {
    return synthetic_evaluate(paper_space(), Configuration(c), epoch, profile_seed);
  }, py::arg("config"), py::arg("epoch"), py::arg("profile_seed"));

  m.def("run_search", [](const std::string& sampler, std::uint64_t seed, std::size_t max_trials, std::size_t epochs,
                         double wall_clock_s, std::uint64_t profile_seed, double epoch_seconds, double jitter,
                         const std::string& log_path) {
    RunHeader h;
    h.sampler.kind = parse_sampler_kind(sampler);
    h.seed = seed;
    h.budget.max_trials = max_trials;
    h.budget.epochs_per_trial = epochs;
    h.budget.wall_clock_limit_s = wall_clock_s;
    h.evaluator.synthetic.profile_seed = profile_seed;
    h.evaluator.synthetic.epoch_seconds = epoch_seconds;
    h.evaluator.synthetic.jitter = jitter;
    h.started_at = utc_timestamp();
    SyntheticEvaluator ev(h.space, h.evaluator.synthetic);
    SearchResult r;
    {
      py::gil_scoped_release release;
      if (log_path.empty()) {
        r = run_search(h, ev, nullptr);
      } else {
        JsonlTrialLog sink(log_path, JsonlTrialLog::Mode::create);
        r = run_search(h, ev, &sink);
      }
    }
    py::dict d;
    py::list trials;
    for (const auto& t : r.trials) trials.append(trial_dict(t));
    d["trials"] = trials;
    d["best_trial"] = r.best_trial ? py::cast(*r.best_trial) : py::none();
    d["best_objective"] = r.best_trial ? py::cast(r.best_objective) : py::none();
    d["elapsed_s"] = r.elapsed_s;
    return d;
  }, py::arg("sampler") = "tpe", py::arg("seed") = 0, py::arg("max_trials") = 40, py::arg("epochs") = 20,
        py::arg("wall_clock_s") = 32.0 * 3600.0, py::arg("profile_seed") = 0, py::arg("epoch_seconds") = 240.0,
        py::arg("jitter") = 0.0, py::arg("log_path") = "",
        "Search with the built-in synthetic evaluator on a simulated clock");

  m.def("top_k", [](const std::string& log_path, std::size_t k) {
    py::list out;
    for (const auto& t : top_k(load_trial_log(log_path).trials, k)) out.append(trial_dict(t));
    return out;
  }, py::arg("log_path"), py::arg("k") = 5);
  m.def("pareto_front", [](const std::vector<std::array<double, 3>>& points) {
    std::vector<ScatterPoint> pts;
    for (std::size_t i = 0; i < points.size(); ++i) {
      ScatterPoint p;
      p.objective = points[i][0];
      p.params = static_cast<std::int64_t>(points[i][1]);
      p.flops = static_cast<std::int64_t>(points[i][2]);
      p.trial_id = i;
      pts.push_back(p);
    }
    std::vector<std::size_t> idx;
    for (const auto& p : pareto_front(pts)) idx.push_back(p.trial_id);
    return idx;
  }, py::arg("points"), "Indices of the non-dominated (objective, params, flops) triples");
  m.def("format_duration", &format_duration, py::arg("seconds"));
}
