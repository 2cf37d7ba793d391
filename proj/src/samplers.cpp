#include "vsrhpo/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

namespace vsrhpo {

namespace {

constexpr int kDedupRetries = 10;

std::unordered_set<std::uint64_t> observed_ranks(const SearchSpace& space, const SamplerState& state) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& o : state.observations) seen.insert(space.rank(space.encode(o.config)));
  return seen;
}

IndexVector uniform_indices(const SearchSpace& space, Rng& rng) {
  IndexVector idx(space.dimensions());
  for (std::size_t d = 0; d < idx.size(); ++d) {
    idx[d] = static_cast<std::size_t>(rng.uniform_index(space.domains()[d].size()));
  }
  return idx;
}

// Picks the best-scoring candidate. Unobserved candidates win over observed
// ones; equal scores go to the lower lexicographic rank.
template <typename ScoreFn>
IndexVector select_best(const SearchSpace& space, const std::vector<IndexVector>& candidates,
                        const std::unordered_set<std::uint64_t>& seen, ScoreFn score) {
  const IndexVector* best = nullptr;
  bool best_fresh = false;
  double best_score = 0.0;
  std::uint64_t best_rank = 0;
  for (const auto& c : candidates) {
    const std::uint64_t r = space.rank(c);
    const bool fresh = seen.count(r) == 0;
    const double s = score(c);
    bool take = false;
    if (best == nullptr) {
      take = true;
    } else if (fresh != best_fresh) {
      take = fresh;
    } else if (s > best_score) {
      take = true;
    } else if (s == best_score && r < best_rank) {
      take = true;
    }
    if (take) {
      best = &c;
      best_fresh = fresh;
      best_score = s;
      best_rank = r;
    }
  }
  return *best;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

void TpeParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw SamplerError("tpe gamma must lie in (0, 1)");
  if (n_startup < 1) throw SamplerError("tpe n_startup must be >= 1");
  if (n_candidates < 1) throw SamplerError("tpe n_candidates must be >= 1");
  if (!(smoothing > 0.0)) throw SamplerError("tpe smoothing must be > 0");
}

void SmacParams::validate() const {
  if (n_trees < 1 || n_startup < 1 || n_candidates < 1) throw SamplerError("smac counts must be >= 1");
  if (interleave_every < 1) throw SamplerError("smac interleave_every must be >= 1");
  if (!(bootstrap_fraction > 0.0)) throw SamplerError("smac bootstrap_fraction must be > 0");
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::random: return "random";
    case SamplerKind::tpe: return "tpe";
    case SamplerKind::smac: return "smac";
  }
  return "?";
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "random") return SamplerKind::random;
  if (name == "tpe") return SamplerKind::tpe;
  if (name == "smac") return SamplerKind::smac;
  throw SamplerError("unknown sampler '" + name + "' (expected random, tpe or smac)");
}

namespace {

std::size_t as_count(const std::string& key, double v) {
  if (!(v >= 0.0) || v != std::floor(v)) throw SamplerError("parameter '" + key + "' must be a whole number");
  return static_cast<std::size_t>(v);
}

}  // namespace

void apply_overrides(SamplerSpec& target, const std::map<std::string, double>& overrides) {
  SamplerSpec spec = target;
  for (const auto& [key, v] : overrides) {
    bool ok = true;
    switch (spec.kind) {
      case SamplerKind::random:
        ok = false;
        break;
      case SamplerKind::tpe:
        if (key == "gamma") spec.tpe.gamma = v;
        else if (key == "n_startup") spec.tpe.n_startup = as_count(key, v);
        else if (key == "n_candidates") spec.tpe.n_candidates = as_count(key, v);
        else if (key == "smoothing") spec.tpe.smoothing = v;
        else ok = false;
        break;
      case SamplerKind::smac:
        if (key == "n_trees") spec.smac.n_trees = as_count(key, v);
        else if (key == "n_startup") spec.smac.n_startup = as_count(key, v);
        else if (key == "n_candidates") spec.smac.n_candidates = as_count(key, v);
        else if (key == "interleave_every") spec.smac.interleave_every = as_count(key, v);
        else if (key == "bootstrap_fraction") spec.smac.bootstrap_fraction = v;
        else ok = false;
        break;
    }
    if (!ok) throw SamplerError("unknown parameter '" + key + "' for sampler " + to_string(spec.kind));
  }
  spec.tpe.validate();
  spec.smac.validate();
  target = spec;
}

std::map<std::string, double> sampler_params(const SamplerSpec& spec) {
  switch (spec.kind) {
    case SamplerKind::random: return {};
    case SamplerKind::tpe:
      return {{"gamma", spec.tpe.gamma},
              {"n_startup", static_cast<double>(spec.tpe.n_startup)},
              {"n_candidates", static_cast<double>(spec.tpe.n_candidates)},
              {"smoothing", spec.tpe.smoothing}};
    case SamplerKind::smac:
      return {{"n_trees", static_cast<double>(spec.smac.n_trees)},
              {"n_startup", static_cast<double>(spec.smac.n_startup)},
              {"n_candidates", static_cast<double>(spec.smac.n_candidates)},
              {"interleave_every", static_cast<double>(spec.smac.interleave_every)},
              {"bootstrap_fraction", spec.smac.bootstrap_fraction}};
  }
  return {};
}

Rng proposal_rng(const SamplerState& state) {
  return Rng(splitmix64(state.rng_seed ^ splitmix64(state.proposal_count)));
}

Configuration random_draw(const SearchSpace& space, const SamplerState& state, Rng& rng) {
  const auto seen = observed_ranks(space, state);
  IndexVector idx = uniform_indices(space, rng);
  for (int retry = 0; retry < kDedupRetries && seen.count(space.rank(idx)) != 0; ++retry) {
    idx = uniform_indices(space, rng);
  }
  return space.decode(idx);
}

Configuration random_next(const SearchSpace& space, const SamplerState& state) {
  Rng rng = proposal_rng(state);
  return random_draw(space, state, rng);
}

std::pair<std::vector<Observation>, std::vector<Observation>> quantile_split(
    const std::vector<Observation>& observations, double gamma) {
  if (observations.empty()) throw SamplerError("quantile_split needs at least one observation");
  std::vector<Observation> sorted = observations;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    return a.trial_index < b.trial_index;
  });
  const double raw = gamma * static_cast<double>(sorted.size());
  // 1e-9 keeps products like 0.1 * 30 from rounding up to the next integer
  auto n_good = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  n_good = std::clamp<std::size_t>(n_good, 1, sorted.size());
  std::vector<Observation> bad(sorted.begin() + static_cast<std::ptrdiff_t>(n_good), sorted.end());
  sorted.resize(n_good);
  return {std::move(sorted), std::move(bad)};
}

std::vector<double> categorical_density(const SearchSpace& space, std::size_t dim,
                                        const std::vector<Observation>& set, double smoothing) {
  const auto& domain = space.domains().at(dim);
  std::vector<double> counts(domain.size(), 0.0);
  for (const auto& o : set) counts[space.encode(o.config)[dim]] += 1.0;
  const double denom = static_cast<double>(set.size()) + smoothing * static_cast<double>(domain.size());
  for (auto& c : counts) c = (c + smoothing) / denom;
  return counts;
}

Configuration tpe_next(const SearchSpace& space, const SamplerState& state, const TpeParams& params) {
  params.validate();
  if (state.observations.size() < params.n_startup) return random_next(space, state);

  const auto [good, bad] = quantile_split(state.observations, params.gamma);
  std::vector<std::vector<double>> l(space.dimensions()), g(space.dimensions());
  for (std::size_t d = 0; d < space.dimensions(); ++d) {
    l[d] = categorical_density(space, d, good, params.smoothing);
    g[d] = categorical_density(space, d, bad, params.smoothing);
  }

  Rng rng = proposal_rng(state);
  std::vector<IndexVector> candidates;
  candidates.reserve(params.n_candidates);
  for (std::size_t k = 0; k < params.n_candidates; ++k) {
    IndexVector idx(space.dimensions());
    for (std::size_t d = 0; d < idx.size(); ++d) {
      const double u = rng.uniform01();
      double acc = 0.0;
      std::size_t pick = l[d].size() - 1;
      for (std::size_t v = 0; v < l[d].size(); ++v) {
        acc += l[d][v];
        if (u < acc) {
          pick = v;
          break;
        }
      }
      idx[d] = pick;
    }
    candidates.push_back(std::move(idx));
  }

  const auto seen = observed_ranks(space, state);
  const IndexVector best = select_best(space, candidates, seen, [&](const IndexVector& c) {
    double ratio = 1.0;
    for (std::size_t d = 0; d < c.size(); ++d) ratio *= l[d][c[d]] / g[d][c[d]];
    return ratio;
  });
  return space.decode(best);
}

double expected_improvement(double mean, double std, double incumbent) {
  if (std < 0.0) throw SamplerError("expected_improvement needs std >= 0");
  if (std == 0.0) return std::max(incumbent - mean, 0.0);
  const double z = (incumbent - mean) / std;
  return std::max(std * (z * normal_cdf(z) + normal_pdf(z)), 0.0);
}

void RandomForest::fit(const std::vector<IndexVector>& x, const std::vector<double>& y,
                       std::size_t n_trees, double bootstrap_fraction, Rng& rng) {
  if (x.empty() || x.size() != y.size()) throw SamplerError("forest needs matching nonempty x and y");
  trees_.clear();
  const auto n = x.size();
  const auto n_boot = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(bootstrap_fraction * static_cast<double>(n))));
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::vector<std::size_t> rows(n_boot);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_index(n));
    Tree tree;
    grow(tree, x, y, std::move(rows), rng);
    trees_.push_back(std::move(tree));
  }
}

std::size_t RandomForest::grow(Tree& tree, const std::vector<IndexVector>& x, const std::vector<double>& y,
                               std::vector<std::size_t> rows, Rng& rng) {
  const std::size_t id = tree.size();
  tree.emplace_back();
  double sum = 0.0;
  for (auto r : rows) sum += y[r];
  tree[id].value = sum / static_cast<double>(rows.size());

  if (rows.size() < 2) return id;
  // dimensions with at least two distinct values among the rows
  std::vector<std::size_t> splittable;
  const std::size_t dims = x[rows.front()].size();
  for (std::size_t d = 0; d < dims; ++d) {
    for (auto r : rows) {
      if (x[r][d] != x[rows.front()][d]) {
        splittable.push_back(d);
        break;
      }
    }
  }
  if (splittable.empty()) return id;

  const std::size_t dim = splittable[rng.uniform_index(splittable.size())];
  std::vector<std::size_t> levels;
  for (auto r : rows) levels.push_back(x[r][dim]);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t gap = static_cast<std::size_t>(rng.uniform_index(levels.size() - 1));
  const double threshold = 0.5 * static_cast<double>(levels[gap] + levels[gap + 1]);

  std::vector<std::size_t> left_rows, right_rows;
  for (auto r : rows) {
    (static_cast<double>(x[r][dim]) <= threshold ? left_rows : right_rows).push_back(r);
  }
  const std::size_t left = grow(tree, x, y, std::move(left_rows), rng);
  const std::size_t right = grow(tree, x, y, std::move(right_rows), rng);
  tree[id].dim = static_cast<int>(dim);
  tree[id].threshold = threshold;
  tree[id].left = left;
  tree[id].right = right;
  return id;
}

RandomForest::Prediction RandomForest::predict(const IndexVector& x) const {
  if (trees_.empty()) throw SamplerError("forest is not fitted");
  std::vector<double> outs;
  outs.reserve(trees_.size());
  for (const auto& tree : trees_) {
    std::size_t node = 0;
    while (tree[node].dim >= 0) {
      const auto d = static_cast<std::size_t>(tree[node].dim);
      node = static_cast<double>(x[d]) <= tree[node].threshold ? tree[node].left : tree[node].right;
    }
    outs.push_back(tree[node].value);
  }
  const double mean = std::accumulate(outs.begin(), outs.end(), 0.0) / static_cast<double>(outs.size());
  double var = 0.0;
  for (double o : outs) var += (o - mean) * (o - mean);
  var /= static_cast<double>(outs.size());
  return {mean, std::sqrt(var)};
}

Configuration smac_next(const SearchSpace& space, const SamplerState& state, const SmacParams& params) {
  params.validate();
  if (state.observations.size() < params.n_startup || state.proposal_count % params.interleave_every == 0) {
    return random_next(space, state);
  }

  std::vector<IndexVector> x;
  std::vector<double> y;
  const Observation* incumbent = nullptr;
  for (const auto& o : state.observations) {
    x.push_back(space.encode(o.config));
    y.push_back(o.objective);
    if (incumbent == nullptr || o.objective < incumbent->objective ||
        (o.objective == incumbent->objective && o.trial_index < incumbent->trial_index)) {
      incumbent = &o;
    }
  }

  Rng rng = proposal_rng(state);
  RandomForest forest;
  forest.fit(x, y, params.n_trees, params.bootstrap_fraction, rng);

  std::vector<IndexVector> candidates;
  for (std::size_t k = 0; k < params.n_candidates; ++k) candidates.push_back(uniform_indices(space, rng));
  const IndexVector inc = space.encode(incumbent->config);
  for (std::size_t d = 0; d < inc.size(); ++d) {
    if (inc[d] > 0) {
      IndexVector n = inc;
      --n[d];
      candidates.push_back(std::move(n));
    }
    if (inc[d] + 1 < space.domains()[d].size()) {
      IndexVector n = inc;
      ++n[d];
      candidates.push_back(std::move(n));
    }
  }

  const auto seen = observed_ranks(space, state);
  const double best_objective = incumbent->objective;
  const IndexVector best = select_best(space, candidates, seen, [&](const IndexVector& c) {
    const auto p = forest.predict(c);
    return expected_improvement(p.mean, p.std, best_objective);
  });
  return space.decode(best);
}

Configuration propose(const SearchSpace& space, const SamplerState& state, const SamplerSpec& spec) {
  switch (spec.kind) {
    case SamplerKind::random: return random_next(space, state);
    case SamplerKind::tpe: return tpe_next(space, state, spec.tpe);
    case SamplerKind::smac: return smac_next(space, state, spec.smac);
  }
  throw SamplerError("unhandled sampler kind");
}

}  // namespace vsrhpo
