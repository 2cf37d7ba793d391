#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vsrhpo/rng.hpp"
#include "vsrhpo/search_space.hpp"

namespace vsrhpo {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration and its objective (lower is better).
struct Observation {
  Configuration config;
  double objective = 0.0;
  std::uint64_t trial_index = 0;
};

/// Everything a sampler reads. Proposals are pure functions of this state:
/// the generator for proposal k is seeded from (rng_seed, proposal_count).
struct SamplerState {
  std::vector<Observation> observations;
  std::uint64_t rng_seed = 0;
  std::uint64_t proposal_count = 0;
};

struct TpeParams {
  double gamma = 0.25;
  std::size_t n_startup = 8;
  std::size_t n_candidates = 24;
  double smoothing = 0.5;

  void validate() const;
};

struct SmacParams {
  std::size_t n_trees = 10;
  std::size_t n_startup = 8;
  std::size_t n_candidates = 100;
  std::size_t interleave_every = 2;
  double bootstrap_fraction = 1.0;

  void validate() const;
};

enum class SamplerKind { random, tpe, smac };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::tpe;
  TpeParams tpe;
  SmacParams smac;
};

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

/// Applies "key" -> value overrides (e.g. gamma, n_trees) to the params of
/// `spec.kind`. Unknown keys or invalid values throw SamplerError and leave
/// `spec` unchanged.
void apply_overrides(SamplerSpec& spec, const std::map<std::string, double>& overrides);

/// Parameters of the active sampler as a flat key/value map.
std::map<std::string, double> sampler_params(const SamplerSpec& spec);

/// Generator used for the next proposal of `state`.
Rng proposal_rng(const SamplerState& state);

Configuration random_next(const SearchSpace& space, const SamplerState& state);

/// Draw from `rng` and retry up to 10 times on already-observed points.
Configuration random_draw(const SearchSpace& space, const SamplerState& state, Rng& rng);

/// Splits into the ceil(gamma*n) lowest-objective observations and the
/// rest. Ties are broken by lower trial_index.
std::pair<std::vector<Observation>, std::vector<Observation>> quantile_split(
    const std::vector<Observation>& observations, double gamma);

/// Smoothed categorical density over the index positions of one domain:
/// prob(v) = (count(v) + smoothing) / (n + smoothing * |domain|).
std::vector<double> categorical_density(const SearchSpace& space, std::size_t dim,
                                        const std::vector<Observation>& set, double smoothing);

Configuration tpe_next(const SearchSpace& space, const SamplerState& state, const TpeParams& params);

/// Expected improvement of a Gaussian prediction below `incumbent`.
double expected_improvement(double mean, double std, double incumbent);

/// Regression forest over index-encoded configurations. Each tree is grown
/// on a bootstrap resample with random-dimension, random-midpoint splits.
class RandomForest {
 public:
  struct Prediction {
    double mean = 0.0;
    double std = 0.0;
  };

  void fit(const std::vector<IndexVector>& x, const std::vector<double>& y, std::size_t n_trees,
           double bootstrap_fraction, Rng& rng);
  Prediction predict(const IndexVector& x) const;
  std::size_t tree_count() const { return trees_.size(); }

 private:
  struct Node {
    // leaf when dim < 0
    int dim = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };
  using Tree = std::vector<Node>;

  static std::size_t grow(Tree& tree, const std::vector<IndexVector>& x, const std::vector<double>& y,
                          std::vector<std::size_t> rows, Rng& rng);

  std::vector<Tree> trees_;
};

Configuration smac_next(const SearchSpace& space, const SamplerState& state, const SmacParams& params);

/// Dispatches on spec.kind.
Configuration propose(const SearchSpace& space, const SamplerState& state, const SamplerSpec& spec);

}  // namespace vsrhpo
