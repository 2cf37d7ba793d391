#include "vsrhpo/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "json_util.hpp"

namespace vsrhpo {

namespace {

std::string num(double v) { return nlohmann::json(v).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> config_columns(const std::vector<Configuration>& configs) {
  std::vector<std::string> names;
  for (const auto& c : configs) {
    for (const auto& [name, v] : c.assignments()) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  return names;
}

std::string config_cells(const Configuration& c, const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    out += ',';
    if (c.contains(n)) out += std::to_string(c.at(n));
  }
  return out;
}

}  // namespace

std::vector<TrialRecord> top_k(const std::vector<TrialRecord>& trials, std::size_t k) {
  if (k < 1) throw ReportError("k must be at least 1");
  std::vector<TrialRecord> done;
  for (const auto& t : trials) {
    if (t.status == TrialStatus::completed && t.objective) done.push_back(t);
  }
  if (done.empty()) throw ReportError("log has no completed trials");
  std::sort(done.begin(), done.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (*a.objective != *b.objective) return *a.objective < *b.objective;
    return a.trial_id < b.trial_id;
  });
  if (done.size() > k) done.resize(k);
  return done;
}

bool dominates(const ScatterPoint& p, const ScatterPoint& q) {
  const bool no_worse = p.objective <= q.objective && p.params <= q.params && p.flops <= q.flops;
  const bool better = p.objective < q.objective || p.params < q.params || p.flops < q.flops;
  return no_worse && better;
}

std::vector<ScatterPoint> pareto_front(const std::vector<ScatterPoint>& points) {
  // After a lexicographic sort a point can only be dominated by points that
  // precede it, and any dominated dominator is itself dominated by a front
  // member, so checking against the front built so far is enough.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = points[a];
    const auto& q = points[b];
    if (p.objective != q.objective) return p.objective < q.objective;
    if (p.params != q.params) return p.params < q.params;
    return p.flops < q.flops;
  });
  std::vector<std::size_t> front;
  for (std::size_t i : order) {
    const bool dominated =
        std::any_of(front.begin(), front.end(), [&](std::size_t f) { return dominates(points[f], points[i]); });
    if (!dominated) front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  std::vector<ScatterPoint> out;
  out.reserve(front.size());
  for (std::size_t i : front) out.push_back(points[i]);
  return out;
}

CostReport configuration_cost(const Configuration& config, const CostSettings& s) {
  try {
    const auto g = hofvsr_graph(config.at("res_channels"), config.at("n_res"), config.at("up_channels"), s.scale,
                                s.input, s.architecture);
    return graph_cost(g);
  } catch (const std::exception& e) {
    throw ReportError(std::string("configuration outside the cost generator's domain: ") + e.what());
  }
}

std::vector<ScatterPoint> scatter_points(const std::vector<LoadedLog>& logs, const CostSettings& settings,
                                         std::size_t per_strategy) {
  if (logs.empty()) throw ReportError("no strategy logs given");
  std::vector<ScatterPoint> out;
  for (const auto& log : logs) {
    std::vector<TrialRecord> chosen;
    if (per_strategy == 0) {
      for (const auto& t : log.trials) {
        if (t.status == TrialStatus::completed && t.objective) chosen.push_back(t);
      }
    } else {
      chosen = top_k(log.trials, per_strategy);
    }
    for (const auto& t : chosen) {
      const auto cost = configuration_cost(t.config, settings);
      out.push_back({t.config, *t.objective, cost.total_params, cost.total_flops,
                     to_string(log.header.sampler.kind), t.trial_id});
    }
  }
  return out;
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  std::vector<Configuration> configs;
  for (const auto& p : points) configs.push_back(p.config);
  const auto names = config_columns(configs);
  std::string out = "strategy,trial_id";
  for (const auto& n : names) out += "," + csv_field(n);
  out += ",objective,params,flops,params_M,gflops\n";
  for (const auto& p : points) {
    out += csv_field(p.strategy) + "," + std::to_string(p.trial_id) + config_cells(p.config, names);
    out += "," + num(p.objective) + "," + std::to_string(p.params) + "," + std::to_string(p.flops);
    out += "," + num(static_cast<double>(p.params) / 1e6) + "," + num(static_cast<double>(p.flops) / 1e9) + "\n";
  }
  return out;
}

namespace {

struct Panel {
  double x0, y0, w, h;
};

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

}  // namespace

std::string scatter_svg(const std::vector<ScatterPoint>& points) {
  if (points.empty()) throw ReportError("no points to plot");
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::map<std::string, std::string> color;
  for (const auto& p : points) {
    if (!color.count(p.strategy)) color[p.strategy] = kColors[color.size() % 5];
  }
  auto range = [&](auto getter) {
    double lo = getter(points.front()), hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, getter(p));
      hi = std::max(hi, getter(p));
    }
    if (hi == lo) {
      lo -= 0.5 * std::max(std::abs(lo), 1e-9);
      hi += 0.5 * std::max(std::abs(hi), 1e-9);
    }
    return std::pair{lo, hi};
  };
  const auto [ylo, yhi] = range([](const ScatterPoint& p) { return p.objective; });

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"900\" height=\"420\">\n"
    << "<title>Candidate networks: evaluation loss (raw eval_loss) against parameters and GFLOPs</title>\n"
    << "<rect width=\"900\" height=\"420\" fill=\"white\"/>\n";

  auto panel = [&](const Panel& pn, const std::string& xlabel, auto xget) {
    const auto [xlo, xhi] = range(xget);
    s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect x=\"" << pn.x0 << "\" y=\"" << pn.y0 << "\" width=\"" << pn.w << "\" height=\"" << pn.h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << pn.x0 + pn.w / 2 << "\" y=\"" << pn.y0 + pn.h + 30 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
    s << "<text x=\"" << pn.x0 - 45 << "\" y=\"" << pn.y0 + pn.h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
      << pn.x0 - 45 << " " << pn.y0 + pn.h / 2 << ")\">eval_loss</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double fx = xlo + (xhi - xlo) * t / 4.0, fy = ylo + (yhi - ylo) * t / 4.0;
      const double px = pn.x0 + pn.w * t / 4.0, py = pn.y0 + pn.h - pn.h * t / 4.0;
      s << "<text x=\"" << px << "\" y=\"" << pn.y0 + pn.h + 14 << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
      s << "<text x=\"" << pn.x0 - 4 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
    }
    for (const auto& p : points) {
      const double px = pn.x0 + 10 + (pn.w - 20) * (xget(p) - xlo) / (xhi - xlo);
      const double py = pn.y0 + pn.h - 10 - (pn.h - 20) * (p.objective - ylo) / (yhi - ylo);
      s << "<circle cx=\"" << fmt(px, 6) << "\" cy=\"" << fmt(py, 6) << "\" r=\"4\" fill=\"" << color[p.strategy]
        << "\"><title>" << p.strategy << " trial " << p.trial_id << "</title></circle>\n";
    }
    s << "</g>\n";
  };
  panel({70, 30, 340, 320}, "(a) parameters (M)", [](const ScatterPoint& p) { return p.params / 1e6; });
  panel({520, 30, 340, 320}, "(b) GFLOPs", [](const ScatterPoint& p) { return p.flops / 1e9; });

  double lx = 70;
  for (const auto& [name, c] : color) {
    s << "<circle cx=\"" << lx << "\" cy=\"405\" r=\"4\" fill=\"" << c << "\"/>"
      << "<text x=\"" << lx + 8 << "\" y=\"409\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    lx += 90;
  }
  s << "</svg>\n";
  return s.str();
}

std::string convergence_csv(const LoadedLog& log) {
  if (log.epochs.empty()) throw ReportError("log has no epoch reports");
  std::string out = "trial_id,epoch,eval_loss\n";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.trial_id) + "," + std::to_string(e.epoch) + "," + num(e.eval_loss) + "\n";
  }
  return out;
}

std::string top_k_csv(const std::vector<TrialRecord>& trials) {
  std::vector<Configuration> configs;
  for (const auto& t : trials) configs.push_back(t.config);
  const auto names = config_columns(configs);
  std::string out = "rank,trial_id,status,objective";
  for (const auto& n : names) out += "," + csv_field(n);
  out += "\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    out += std::to_string(i + 1) + "," + std::to_string(t.trial_id) + "," + to_string(t.status) + "," +
           (t.objective ? num(*t.objective) : std::string()) + config_cells(t.config, names) + "\n";
  }
  return out;
}

std::vector<BudgetRow> budget_table(const std::vector<LoadedLog>& logs) {
  std::vector<BudgetRow> rows;
  for (const auto& log : logs) {
    BudgetRow r;
    r.strategy = to_string(log.header.sampler.kind);
    r.networks = log.trials.size();
    r.epochs = log.header.budget.epochs_per_trial;
    if (log.has_result) {
      r.total_time_s = log.result_elapsed_s;
    } else {
      for (const auto& e : log.epochs) r.total_time_s += e.duration_s;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_duration(double seconds) {
  const auto minutes = static_cast<long long>(std::floor(std::max(seconds, 0.0) / 60.0 + 1e-9));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lldh %02lldmin", minutes / 60, minutes % 60);
  return buf;
}

std::string budget_csv(const std::vector<BudgetRow>& rows) {
  std::string out = "strategy,networks,epochs,time\n";
  for (const auto& r : rows) {
    out += csv_field(r.strategy) + "," + std::to_string(r.networks) + "," + std::to_string(r.epochs) + "," +
           format_duration(r.total_time_s) + "\n";
  }
  return out;
}

}  // namespace vsrhpo
