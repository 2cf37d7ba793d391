#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vsrhpo/cost_model.hpp"

using namespace vsrhpo;

namespace {

const InputShape kInput{36, 36, 1, 3};

std::int64_t params_of(std::int64_t r, std::int64_t n, std::int64_t u, const HofvsrAssumptions& a = {}) {
  return graph_cost(hofvsr_graph(r, n, u, 4, kInput, a)).total_params;
}

std::int64_t flops_of(std::int64_t r, std::int64_t n, std::int64_t u, const HofvsrAssumptions& a = {}) {
  return graph_cost(hofvsr_graph(r, n, u, 4, kInput, a)).total_flops;
}

}  // namespace

TEST_CASE("single convolution costs") {
  const auto c = conv2d_cost(LayerSpec::conv(1, 64, 3), Shape{36, 36, 1});
  CHECK(c.params == 640);
  CHECK(c.flops == 1575936);
  CHECK(c.out_shape == Shape{36, 36, 64});

  CHECK(conv2d_cost(LayerSpec::conv(64, 64, 3), Shape{8, 8, 64}).params == 36928);

  const auto nobias = conv2d_cost(LayerSpec::conv(2, 3, 1, false), Shape{4, 5, 2});
  CHECK(nobias.params == 6);
  CHECK(nobias.flops == 2 * 2 * 4 * 5 * 3);

  const auto valid = conv2d_cost(LayerSpec::conv(1, 1, 3, true, Padding::valid, 2), Shape{9, 9, 1});
  CHECK(valid.out_shape == Shape{4, 4, 1});

  const auto strided = conv2d_cost(LayerSpec::conv(1, 1, 3, true, Padding::same, 2), Shape{9, 9, 1});
  CHECK(strided.out_shape == Shape{5, 5, 1});
}

TEST_CASE("convolution input validation") {
  CHECK_THROWS_AS(conv2d_cost(LayerSpec::conv(2, 4, 3), Shape{8, 8, 3}), CostError);
  CHECK_THROWS_AS(conv2d_cost(LayerSpec::conv(1, 4, 5, true, Padding::valid), Shape{3, 3, 1}), CostError);
  CHECK_THROWS_AS(conv2d_cost(LayerSpec::conv(1, 0, 3), Shape{8, 8, 1}), CostError);
}

TEST_CASE("graph cost matches a brute-force tally on random graphs") {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    const auto g = oracle::random_graph(seed);
    const auto report = graph_cost(g.graph);
    CHECK(report.total_params == g.params);
    CHECK(report.total_flops == g.flops);
    std::int64_t p = 0, f = 0;
    for (const auto& l : report.per_layer) {
      p += l.params;
      f += l.flops;
    }
    CHECK(p == report.total_params);
    CHECK(f == report.total_flops);
  }
}

TEST_CASE("graph errors") {
  ArchitectureGraph g;
  g.input = {8, 8, 1, 1};
  g.nodes.push_back({"a", LayerSpec::conv(1, 4, 3), {"input"}});
  g.nodes.push_back({"b", LayerSpec::simple(LayerKind::add), {"a", "input"}});
  CHECK_THROWS_AS(graph_cost(g), CostError);  // shape mismatch

  g.nodes.back() = {"b", LayerSpec::simple(LayerKind::relu), {"missing"}};
  CHECK_THROWS_AS(graph_cost(g), CostError);

  g.nodes.back() = {"a", LayerSpec::simple(LayerKind::relu), {"a"}};
  CHECK_THROWS_AS(graph_cost(g), CostError);  // duplicate id

  g.nodes.back() = {"b", LayerSpec::shuffle(2), {"a"}};
  CHECK(graph_cost(g).per_layer.back().out_shape == Shape{16, 16, 1});
  g.nodes.front().layer = LayerSpec::conv(1, 3, 3);
  CHECK_THROWS_AS(graph_cost(g), CostError);  // 3 channels not divisible by 4
}

TEST_CASE("residual block delta") {
  CHECK(params_of(64, 6, 64) - params_of(64, 5, 64) == 73856);
  CHECK(73856 == 2 * (64 * 64 * 9 + 64));
  const HofvsrAssumptions literal{3, UpsampleOrder::conv_then_shuffle, false};
  CHECK(params_of(64, 6, 64, literal) - params_of(64, 5, 64, literal) == 73856);
  // each block adds two convs plus a leaky activation and an add over 36x36x64
  const std::int64_t block_flops = 2 * (36 * 36 * 64 * (2 * 64 * 9 + 1)) + 2 * 36 * 36 * 64;
  CHECK(flops_of(64, 6, 64) - flops_of(64, 5, 64) == block_flops);
}

TEST_CASE("structure of the generated network") {
  const auto g = hofvsr_graph(32, 1, 32, 2, kInput);
  std::size_t shuffles = 0, adds = 0;
  for (const auto& n : g.nodes) {
    if (n.layer.kind == LayerKind::pixel_shuffle) ++shuffles;
    if (n.layer.kind == LayerKind::add) ++adds;
  }
  CHECK(shuffles == 1);
  CHECK(adds == 2);  // one residual block plus the global skip
  CHECK(g.label == "HO-FVSR {32,1,32}");
  const auto report = graph_cost(g);
  CHECK(report.per_layer.back().out_shape == Shape{72, 72, 1});
  CHECK(graph_cost(hofvsr_graph(64, 5, 64, 4, kInput)).per_layer.back().out_shape == Shape{144, 144, 1});
  CHECK(report.assumptions.count("upsample") == 1);
}

TEST_CASE("generator rejects points outside the space and bad scales") {
  CHECK_THROWS_AS(hofvsr_graph(48, 5, 64, 4, kInput), CostError);
  CHECK_THROWS_AS(hofvsr_graph(64, 9, 64, 4, kInput), CostError);
  CHECK_THROWS_AS(hofvsr_graph(64, 5, 64, 3, kInput), CostError);
  CHECK_THROWS_AS(hofvsr_graph(64, 5, 64, 1, kInput), CostError);
}

TEST_CASE("default network lands in the expected cost range") {
  const auto r = graph_cost(hofvsr_graph(64, 5, 64, 4, kInput));
  CHECK(r.total_params == 427137);
  CHECK(r.total_flops == 1562436864);
}

TEST_CASE("literal variant") {
  const HofvsrAssumptions literal{3, UpsampleOrder::conv_then_shuffle, false};
  const auto r = graph_cost(hofvsr_graph(64, 5, 64, 4, kInput, literal));
  CHECK(r.total_params > 600000);
  CHECK(r.assumptions.at("trunk_fusion_conv").find("none") != std::string::npos);
}

TEST_CASE("costs are monotone in every dimension for all variants") {
  for (auto order : {UpsampleOrder::shuffle_then_conv, UpsampleOrder::conv_then_shuffle}) {
    for (bool fusion : {true, false}) {
      const HofvsrAssumptions a{3, order, fusion};
      for (std::int64_t r = 32; r <= 320; r += 96) {
        for (std::int64_t n = 1; n <= 8; n += 3) {
          for (std::int64_t u = 32; u <= 320; u += 96) {
            const auto p = params_of(r, n, u, a), f = flops_of(r, n, u, a);
            if (r + 32 <= 320) CHECK(params_of(r + 32, n, u, a) >= p);
            if (n + 1 <= 8) CHECK(flops_of(r, n + 1, u, a) >= f);
            if (u + 32 <= 320) CHECK(params_of(r, n, u + 32, a) >= p);
            if (u + 32 <= 320) CHECK(flops_of(r, n, u + 32, a) >= f);
          }
        }
      }
    }
  }
}

TEST_CASE("graph JSON round trip") {
  const auto g = hofvsr_graph(96, 3, 128, 4, kInput);
  const auto back = graph_from_json(graph_to_json(g));
  CHECK(graph_cost(back).total_params == graph_cost(g).total_params);
  CHECK(graph_cost(back).total_flops == graph_cost(g).total_flops);
  CHECK(back.label == g.label);
  CHECK_THROWS_AS(graph_from_json(R"({"input": {"height": 4, "width": 4, "channels": 1}, "nodes": [], "x": 1})"),
                  CostError);
}

TEST_CASE("report JSON carries the convention and integer totals") {
  const auto text = report_to_json(graph_cost(hofvsr_graph(64, 5, 64, 4, kInput)));
  CHECK(text.find("\"total_params\": 427137") != std::string::npos);
  CHECK(text.find("convention") != std::string::npos);
  CHECK(text.find("assumptions") != std::string::npos);
  CHECK(flop_convention().size() >= 3);
}
