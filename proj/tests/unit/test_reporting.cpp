#include <random>
#include <sstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vsrhpo/orchestrator.hpp"
#include "vsrhpo/reporting.hpp"

using namespace vsrhpo;

namespace {

TrialRecord trial(std::uint64_t id, std::optional<double> objective, TrialStatus status = TrialStatus::completed) {
  TrialRecord t;
  t.trial_id = id;
  t.config = Configuration({{"res_channels", 64}, {"n_res", static_cast<std::int64_t>(1 + id % 8)}, {"up_channels", 64}});
  t.objective = objective;
  t.status = status;
  return t;
}

LoadedLog synthetic_log(SamplerKind kind, std::uint64_t seed, std::size_t trials) {
  RunHeader h;
  h.sampler.kind = kind;
  h.seed = seed;
  h.budget.max_trials = trials;
  h.budget.epochs_per_trial = 3;
  h.evaluator.synthetic.profile_seed = seed;
  std::ostringstream text;
  text << header_line(h) << "\n";
  SyntheticEvaluator ev(h.space, h.evaluator.synthetic);
  const auto r = run_search(h, ev, nullptr);
  for (const auto& t : r.trials) {
    for (const auto& e : t.epochs) text << epoch_line(e, t.config) << "\n";
    text << trial_done_line(t) << "\n";
  }
  text << result_line(r.best_trial, r.elapsed_s) << "\n";
  return parse_trial_log(text.str());
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("top-k orders by objective then trial id") {
  const std::vector<TrialRecord> trials{trial(0, 3.0), trial(1, 1.0), trial(2, 2.0)};
  const auto top = top_k(trials, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].trial_id == 1);
  CHECK(top[1].trial_id == 2);

  const std::vector<TrialRecord> ties{trial(5, 1.0), trial(2, 1.0), trial(9, 0.5)};
  const auto t2 = top_k(ties, 5);
  REQUIRE(t2.size() == 3);
  CHECK(t2[0].trial_id == 9);
  CHECK(t2[1].trial_id == 2);
  CHECK(t2[2].trial_id == 5);
}

TEST_CASE("top-k skips incomplete trials and rejects empty input") {
  const std::vector<TrialRecord> trials{trial(0, 0.1, TrialStatus::cut_by_budget), trial(1, std::nullopt, TrialStatus::failed),
                                        trial(2, 0.7)};
  CHECK(top_k(trials, 5).size() == 1);
  CHECK_THROWS_AS(top_k({trial(1, std::nullopt, TrialStatus::failed)}, 5), ReportError);
  CHECK_THROWS_AS(top_k(trials, 0), ReportError);
}

TEST_CASE("dominance") {
  ScatterPoint a, b;
  a.objective = 1;
  a.params = 10;
  a.flops = 100;
  b = a;
  CHECK_FALSE(dominates(a, b));
  b.flops = 101;
  CHECK(dominates(a, b));
  CHECK_FALSE(dominates(b, a));
  b.objective = 0.5;
  CHECK_FALSE(dominates(a, b));
}

TEST_CASE("pareto front equals brute force") {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    const auto pts = oracle::random_points(seed, 1 + seed % 120);
    const auto front = pareto_front(pts);
    const auto expected = oracle::brute_force_front(pts);
    REQUIRE(front.size() == expected.size());
    for (std::size_t i = 0; i < front.size(); ++i) CHECK(front[i].trial_id == pts[expected[i]].trial_id);
  }
  CHECK(pareto_front({}).empty());
}

TEST_CASE("scatter points and CSV") {
  const auto log = synthetic_log(SamplerKind::random, 3, 8);
  const auto pts = scatter_points({log}, CostSettings{}, 5);
  REQUIRE(pts.size() == 5);
  for (const auto& p : pts) {
    const auto cost = configuration_cost(p.config, CostSettings{});
    CHECK(p.params == cost.total_params);
    CHECK(p.flops == cost.total_flops);
    CHECK(p.strategy == "random");
  }
  CHECK(scatter_points({log}, CostSettings{}, 0).size() == 8);

  const auto lines = split_lines(scatter_csv(pts));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "strategy,trial_id,n_res,res_channels,up_channels,objective,params,flops,params_M,gflops");
  // params_M column equals params / 1e6
  std::istringstream row(lines[1]);
  std::vector<std::string> cells;
  for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 10);
  CHECK(std::stod(cells[8]) == doctest::Approx(std::stod(cells[6]) / 1e6).epsilon(1e-15));
  CHECK(std::stod(cells[9]) == doctest::Approx(std::stod(cells[7]) / 1e9).epsilon(1e-15));

  const auto svg = scatter_svg(pts);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("GFLOPs") != std::string::npos);
  CHECK_THROWS_AS(scatter_svg({}), ReportError);
}

TEST_CASE("configurations outside the generator domain are reported") {
  Configuration c({{"res_channels", 48}, {"n_res", 1}, {"up_channels", 32}});
  CHECK_THROWS_AS(configuration_cost(c, CostSettings{}), ReportError);
}

TEST_CASE("convergence CSV round trip") {
  const auto log = synthetic_log(SamplerKind::tpe, 1, 4);
  const auto lines = split_lines(convergence_csv(log));
  REQUIRE(lines.size() == log.epochs.size() + 1);
  CHECK(lines[0] == "trial_id,epoch,eval_loss");
  for (std::size_t i = 0; i < log.epochs.size(); ++i) {
    std::istringstream row(lines[i + 1]);
    std::string a, b, c;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    CHECK(std::stoull(a) == log.epochs[i].trial_id);
    CHECK(std::stoull(b) == log.epochs[i].epoch);
    CHECK(std::stod(c) == log.epochs[i].eval_loss);
  }
}

TEST_CASE("top-k CSV") {
  const auto csv = top_k_csv(top_k({trial(0, 3.0), trial(1, 1.0), trial(2, 2.0)}, 2));
  const auto lines = split_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "rank,trial_id,status,objective,n_res,res_channels,up_channels");
  CHECK(lines[1] == "1,1,completed,1.0,2,64,64");
}

TEST_CASE("duration formatting") {
  CHECK(format_duration(32 * 3600.0) == "32h 00min");
  CHECK(format_duration(0.0) == "0h 00min");
  CHECK(format_duration(3599.0) == "0h 59min");
  CHECK(format_duration(25 * 3600.0 + 7 * 60 + 59) == "25h 07min");
}

TEST_CASE("budget table") {
  const auto a = synthetic_log(SamplerKind::random, 0, 4);
  const auto b = synthetic_log(SamplerKind::smac, 0, 3);
  const auto rows = budget_table({a, b});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].strategy == "random");
  CHECK(rows[0].networks == 4);
  CHECK(rows[0].epochs == 3);
  CHECK(rows[0].total_time_s == doctest::Approx(4 * 3 * 240.0));
  CHECK(rows[1].networks == 3);
  const auto lines = split_lines(budget_csv(rows));
  CHECK(lines[0] == "strategy,networks,epochs,time");
  CHECK(lines[1] == "random,4,3,0h 48min");
}
