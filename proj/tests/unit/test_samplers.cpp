#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "vsrhpo/samplers.hpp"

using namespace vsrhpo;

namespace {

Observation obs(const SearchSpace& space, std::uint64_t rank, double objective, std::uint64_t trial) {
  return {space.decode(space.unrank(rank)), objective, trial};
}

SamplerState state_with(const SearchSpace& space, std::size_t n, std::uint64_t seed) {
  SamplerState s;
  s.rng_seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t r = splitmix64(seed + i) % space.size();
    const auto idx = space.unrank(r);
    double y = 0.0;
    for (std::size_t d = 0; d < idx.size(); ++d) y += std::pow(static_cast<double>(idx[d]) - 3.0, 2);
    s.observations.push_back({space.decode(idx), y, i});
  }
  s.proposal_count = n;
  return s;
}

}  // namespace

TEST_CASE("quantile split sizes and tie-break") {
  const auto space = paper_space();
  std::vector<Observation> eight;
  for (std::uint64_t i = 0; i < 8; ++i) eight.push_back(obs(space, i * 7, 8.0 - static_cast<double>(i), i));
  auto [good, bad] = quantile_split(eight, 0.25);
  CHECK(good.size() == 2);
  CHECK(bad.size() == 6);
  CHECK(good[0].trial_index == 7);
  CHECK(good[1].trial_index == 6);

  auto [one_good, one_bad] = quantile_split({obs(space, 0, 1.0, 0)}, 0.9);
  CHECK(one_good.size() == 1);
  CHECK(one_bad.empty());

  std::vector<Observation> equal;
  for (std::uint64_t i = 0; i < 4; ++i) equal.push_back(obs(space, 100 - i, 5.0, 3 - i));
  auto [eq_good, eq_bad] = quantile_split(equal, 0.5);
  REQUIRE(eq_good.size() == 2);
  std::set<std::uint64_t> ids{eq_good[0].trial_index, eq_good[1].trial_index};
  CHECK(ids == std::set<std::uint64_t>{0, 1});
}

TEST_CASE("quantile split is ceil(gamma n) for every n") {
  const auto space = paper_space();
  for (double gamma : {0.1, 0.25, 0.5, 0.9}) {
    std::vector<Observation> v;
    for (std::uint64_t n = 1; n <= 40; ++n) {
      v.push_back(obs(space, n, static_cast<double>(n % 7), n));
      const auto [good, bad] = quantile_split(v, gamma);
      // integer form of ceil(gamma * n) for gamma in hundredths
      const auto hundredths = static_cast<std::uint64_t>(std::llround(gamma * 100));
      const std::uint64_t expected = (hundredths * n + 99) / 100;
      CHECK(good.size() == expected);
      CHECK(good.size() + bad.size() == n);
      const double worst_good = std::max_element(good.begin(), good.end(), [](auto& a, auto& b) {
                                  return a.objective < b.objective;
                                })->objective;
      for (const auto& b : bad) CHECK(b.objective >= worst_good);
    }
  }
}

TEST_CASE("categorical density example") {
  const auto space = build_space({{"c", {32, 64}}});
  std::vector<Observation> good, bad;
  for (std::uint64_t i = 0; i < 3; ++i) {
    good.push_back({Configuration({{"c", 64}}), 0.0, i});
    bad.push_back({Configuration({{"c", 32}}), 1.0, i + 3});
  }
  const auto l = categorical_density(space, 0, good, 1.0);
  const auto g = categorical_density(space, 0, bad, 1.0);
  CHECK(l[1] / g[1] == doctest::Approx(4.0));
  CHECK(l[0] / g[0] == doctest::Approx(0.25));
  CHECK(l[0] + l[1] == doctest::Approx(1.0));
}

TEST_CASE("tpe picks the good value when the densities are separated") {
  const auto space = build_space({{"c", {32, 64}}});
  SamplerState s;
  for (std::uint64_t i = 0; i < 3; ++i) {
    s.observations.push_back({Configuration({{"c", 64}}), 0.0, i});
    s.observations.push_back({Configuration({{"c", 32}}), 1.0, i + 3});
  }
  s.proposal_count = 6;
  TpeParams p;
  p.gamma = 0.5;
  p.n_startup = 2;
  p.smoothing = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.rng_seed = seed;
    CHECK(tpe_next(space, s, p).at("c") == 64);
  }
}

TEST_CASE("tpe during startup equals random") {
  const auto space = paper_space();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = state_with(space, 5, seed);
    CHECK(tpe_next(space, s, TpeParams{}) == random_next(space, s));
    CHECK(smac_next(space, s, SmacParams{}) == random_next(space, s));
  }
}

TEST_CASE("proposals are pure functions of the state") {
  const auto space = paper_space();
  for (auto kind : {SamplerKind::random, SamplerKind::tpe, SamplerKind::smac}) {
    SamplerSpec spec;
    spec.kind = kind;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = state_with(space, 15, seed);
      const auto a = propose(space, s, spec);
      CHECK(a == propose(space, s, spec));
      CHECK(space.contains(a));
    }
  }
}

TEST_CASE("random sampler is uniform over the space") {
  // chi-square goodness of fit over all 800 cells plus per-dimension marginals
  const auto space = paper_space();
  const std::size_t draws = 160000;
  std::vector<double> counts(space.size());
  std::vector<std::vector<double>> marginals(3);
  for (std::size_t d = 0; d < 3; ++d) marginals[d].assign(space.domains()[d].size(), 0.0);
  SamplerState s;
  s.rng_seed = 42;
  for (std::size_t i = 0; i < draws; ++i) {
    s.proposal_count = i;
    const auto idx = space.encode(random_next(space, s));
    counts[space.rank(idx)] += 1;
    for (std::size_t d = 0; d < 3; ++d) marginals[d][idx[d]] += 1;
  }
  const double expected = static_cast<double>(draws) / 800.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 799 degrees of freedom: mean 799, sd ~40; 5 sd bound
  CHECK(chi2 < 799 + 5 * std::sqrt(2.0 * 799));
  CHECK(chi2 > 799 - 5 * std::sqrt(2.0 * 799));
  for (std::size_t d = 0; d < 3; ++d) {
    const double m = static_cast<double>(draws) / static_cast<double>(marginals[d].size());
    const double p = 1.0 / static_cast<double>(marginals[d].size());
    const double sd = std::sqrt(draws * p * (1 - p));
    for (double c : marginals[d]) CHECK(std::abs(c - m) < 4 * sd);
  }
}

TEST_CASE("random sampler avoids repeats while unseen points remain") {
  const auto space = build_space({{"a", {0, 1, 2, 3}}, {"b", {0, 1, 2, 3}}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SamplerState s;
    s.rng_seed = seed;
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < 8; ++i) {
      const auto c = random_next(space, s);
      seen.insert(space.rank(space.encode(c)));
      s.observations.push_back({c, 1.0, i});
      s.proposal_count++;
    }
    CHECK(seen.size() == 8);
  }
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(2.0, 0.0, 5.0) == doctest::Approx(3.0));
  CHECK(expected_improvement(5.0, 0.0, 2.0) == 0.0);
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  // E[max(f - X, 0)] for X ~ N(m, s), checked by numerical integration
  for (double m : {-1.0, 0.0, 0.7}) {
    for (double sd : {0.3, 1.5}) {
      const double f = 0.2;
      double sum = 0.0;
      const double h = 1e-3;
      for (double x = m - 10 * sd; x < m + 10 * sd; x += h) {
        const double pdf = std::exp(-0.5 * (x - m) * (x - m) / (sd * sd)) / (sd * std::sqrt(2 * M_PI));
        sum += std::max(f - x, 0.0) * pdf * h;
      }
      CHECK(expected_improvement(m, sd, f) == doctest::Approx(sum).epsilon(1e-4));
    }
  }
}

TEST_CASE("random forest") {
  Rng rng(3);
  RandomForest single;
  single.fit({{1, 2, 3}}, {4.5}, 1, 1.0, rng);
  const auto p = single.predict({1, 2, 3});
  CHECK(p.mean == 4.5);
  CHECK(p.std == 0.0);

  std::vector<IndexVector> x;
  std::vector<double> y;
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      x.push_back({a, b});
      y.push_back(static_cast<double>(a));
    }
  }
  RandomForest forest;
  forest.fit(x, y, 10, 1.0, rng);
  CHECK(forest.tree_count() == 10);
  CHECK(forest.predict({0, 3}).mean < forest.predict({5, 3}).mean);
  for (const auto& xi : x) {
    const auto q = forest.predict(xi);
    CHECK(q.mean >= 0.0);
    CHECK(q.mean <= 5.0);
    CHECK(q.std >= 0.0);
  }
}

TEST_CASE("smac interleaves random proposals") {
  const auto space = paper_space();
  SmacParams p;
  p.n_startup = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = state_with(space, 12, seed);
    s.proposal_count = 12;  // 12 % 2 == 0 -> random
    CHECK(smac_next(space, s, p) == random_next(space, s));
  }
}

TEST_CASE("smac moves toward the minimum on a separable bowl") {
  const auto space = paper_space();
  std::size_t improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = state_with(space, 20, seed);
    s.proposal_count = 21;
    const auto c = smac_next(space, s, SmacParams{});
    const auto idx = space.encode(c);
    double y = 0.0;
    for (auto i : idx) y += std::pow(static_cast<double>(i) - 3.0, 2);
    double worst = 0.0;
    for (const auto& o : s.observations) worst = std::max(worst, o.objective);
    if (y < worst) ++improved;
  }
  CHECK(improved >= 8);
}

TEST_CASE("parameter overrides and validation") {
  SamplerSpec spec;
  spec.kind = SamplerKind::tpe;
  apply_overrides(spec, {{"gamma", 0.3}, {"n_candidates", 10}});
  CHECK(spec.tpe.gamma == 0.3);
  CHECK(spec.tpe.n_candidates == 10);
  CHECK_THROWS_AS(apply_overrides(spec, {{"n_trees", 4}}), SamplerError);
  CHECK_THROWS_AS(apply_overrides(spec, {{"gamma", 1.5}}), SamplerError);
  spec.kind = SamplerKind::smac;
  apply_overrides(spec, {{"n_trees", 4}});
  CHECK(spec.smac.n_trees == 4);
  CHECK(sampler_params(spec).at("n_trees") == 4);
  CHECK(parse_sampler_kind("smac") == SamplerKind::smac);
  CHECK_THROWS(parse_sampler_kind("grid"));
}
