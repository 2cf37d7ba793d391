#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsrhpo/cost_model.hpp"
#include "vsrhpo/trial.hpp"
#include "vsrhpo/trial_log.hpp"

namespace vsrhpo {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The k completed trials with the lowest objective, ascending, ties by
/// trial_id. Throws ReportError when no trial completed.
std::vector<TrialRecord> top_k(const std::vector<TrialRecord>& trials, std::size_t k);

struct ScatterPoint {
  Configuration config;
  double objective = 0.0;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::string strategy;
  std::uint64_t trial_id = 0;
};

/// True when `p` is no worse than `q` in objective, params and flops and
/// strictly better in at least one.
bool dominates(const ScatterPoint& p, const ScatterPoint& q);

/// Non-dominated subset in input order. Exact duplicates of a front member
/// are all kept.
std::vector<ScatterPoint> pareto_front(const std::vector<ScatterPoint>& points);

/// How candidate configurations are turned into networks for costing.
struct CostSettings {
  std::int64_t scale = 4;
  InputShape input{36, 36, 1, 3};
  HofvsrAssumptions architecture;
};

/// Cost of one configuration of the candidate space. Throws ReportError
/// when the configuration lies outside the cost generator's domain.
CostReport configuration_cost(const Configuration& config, const CostSettings& settings);

/// One point per selected trial per log; the strategy label is the log's
/// sampler name. `per_strategy` = 0 selects every completed trial.
std::vector<ScatterPoint> scatter_points(const std::vector<LoadedLog>& logs, const CostSettings& settings,
                                         std::size_t per_strategy = 5);

/// strategy,trial_id,<config...>,objective,params,flops,params_M,gflops
std::string scatter_csv(const std::vector<ScatterPoint>& points);

/// Two-panel static SVG: objective against params (M) and against GFLOPs.
std::string scatter_svg(const std::vector<ScatterPoint>& points);

/// trial_id,epoch,eval_loss for every epoch line, in log order.
std::string convergence_csv(const LoadedLog& log);

/// rank,trial_id,status,objective,<config...>
std::string top_k_csv(const std::vector<TrialRecord>& trials);

struct BudgetRow {
  std::string strategy;
  std::size_t networks = 0;
  std::size_t epochs = 0;
  double total_time_s = 0.0;
};

std::vector<BudgetRow> budget_table(const std::vector<LoadedLog>& logs);

/// "XXh XXmin", minutes rounded down.
std::string format_duration(double seconds);

/// strategy,networks,epochs,time
std::string budget_csv(const std::vector<BudgetRow>& rows);

}  // namespace vsrhpo
