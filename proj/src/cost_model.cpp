#include "vsrhpo/cost_model.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json_util.hpp"
#include "vsrhpo/search_space.hpp"

namespace vsrhpo {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::add: return "add";
    case LayerKind::concat: return "concat";
    case LayerKind::pixel_shuffle: return "pixel_shuffle";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
  for (auto k : {LayerKind::conv2d, LayerKind::relu, LayerKind::leaky_relu, LayerKind::add, LayerKind::concat,
                 LayerKind::pixel_shuffle}) {
    if (to_string(k) == name) return k;
  }
  throw CostError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv(std::int64_t in, std::int64_t out, std::int64_t k, bool bias, Padding pad,
                          std::int64_t stride) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_h = k;
  s.kernel_w = k;
  s.stride = stride;
  s.padding = pad;
  s.has_bias = bias;
  return s;
}

LayerSpec LayerSpec::shuffle(std::int64_t factor) {
  LayerSpec s;
  s.kind = LayerKind::pixel_shuffle;
  s.factor = factor;
  return s;
}

LayerSpec LayerSpec::simple(LayerKind kind) {
  LayerSpec s;
  s.kind = kind;
  return s;
}

std::map<std::string, std::string> flop_convention() {
  return {{"mac", "2 flops"},
          {"bias", "1 flop per output element"},
          {"elementwise", "1 flop per output element (relu, leaky_relu, add)"},
          {"data_movement", "0 flops (concat, pixel_shuffle)"}};
}

namespace {

std::int64_t conv_out_dim(std::int64_t in, std::int64_t k, std::int64_t stride, Padding pad) {
  if (pad == Padding::same) return (in + stride - 1) / stride;
  return in >= k ? (in - k) / stride + 1 : 0;
}

}  // namespace

LayerCost conv2d_cost(const LayerSpec& layer, const Shape& in) {
  if (layer.kind != LayerKind::conv2d) throw CostError("conv2d_cost called on a non-conv layer");
  if (layer.in_channels <= 0 || layer.out_channels <= 0 || layer.kernel_h <= 0 || layer.kernel_w <= 0 ||
      layer.stride <= 0) {
    throw CostError("conv2d fields must be positive");
  }
  if (in.channels != layer.in_channels) {
    throw CostError("conv2d expects " + std::to_string(layer.in_channels) + " input channels, got " +
                    std::to_string(in.channels));
  }
  Shape out{conv_out_dim(in.height, layer.kernel_h, layer.stride, layer.padding),
            conv_out_dim(in.width, layer.kernel_w, layer.stride, layer.padding), layer.out_channels};
  if (out.height <= 0 || out.width <= 0) throw CostError("conv2d output has non-positive spatial size");

  const std::int64_t fan_in = layer.in_channels * layer.kernel_h * layer.kernel_w;
  LayerCost c;
  c.kind = LayerKind::conv2d;
  c.params = layer.out_channels * fan_in + (layer.has_bias ? layer.out_channels : 0);
  const std::int64_t macs = out.height * out.width * layer.out_channels * fan_in;
  c.flops = 2 * macs + (layer.has_bias ? out.elements() : 0);
  c.out_shape = out;
  return c;
}

CostReport graph_cost(const ArchitectureGraph& graph) {
  const Shape input = graph.input.folded();
  if (input.height <= 0 || input.width <= 0 || input.channels <= 0 || graph.input.frames <= 0) {
    throw CostError("graph input shape must be positive");
  }
  if (graph.nodes.empty()) throw CostError("graph has no nodes");

  std::unordered_map<std::string, Shape> shapes{{kGraphInput, input}};
  CostReport report;
  report.label = graph.label;
  report.assumptions = graph.assumptions;

  for (const auto& node : graph.nodes) {
    if (node.id.empty() || shapes.count(node.id)) throw CostError("duplicate or empty layer id '" + node.id + "'");
    std::vector<Shape> ins;
    for (const auto& src : node.inputs) {
      auto it = shapes.find(src);
      if (it == shapes.end()) throw CostError("layer '" + node.id + "' reads undefined input '" + src + "'");
      ins.push_back(it->second);
    }
    const auto& spec = node.layer;
    const bool unary = spec.kind == LayerKind::conv2d || spec.kind == LayerKind::relu ||
                       spec.kind == LayerKind::leaky_relu || spec.kind == LayerKind::pixel_shuffle;
    if (unary && ins.size() != 1) throw CostError("layer '" + node.id + "' takes exactly one input");
    if (!unary && ins.size() < 2) throw CostError("layer '" + node.id + "' needs at least two inputs");

    LayerCost c;
    switch (spec.kind) {
      case LayerKind::conv2d:
        try {
          c = conv2d_cost(spec, ins[0]);
        } catch (const CostError& e) {
          throw CostError("layer '" + node.id + "': " + e.what());
        }
        break;
      case LayerKind::relu:
      case LayerKind::leaky_relu:
        c.out_shape = ins[0];
        c.flops = c.out_shape.elements();
        break;
      case LayerKind::add:
        for (const auto& s : ins) {
          if (!(s == ins[0])) throw CostError("shape mismatch at add layer '" + node.id + "'");
        }
        c.out_shape = ins[0];
        c.flops = c.out_shape.elements();
        break;
      case LayerKind::concat:
        c.out_shape = {ins[0].height, ins[0].width, 0};
        for (const auto& s : ins) {
          if (s.height != ins[0].height || s.width != ins[0].width) {
            throw CostError("shape mismatch at concat layer '" + node.id + "'");
          }
          c.out_shape.channels += s.channels;
        }
        break;
      case LayerKind::pixel_shuffle: {
        const auto f = spec.factor;
        if (f <= 0) throw CostError("pixel_shuffle factor must be positive at '" + node.id + "'");
        if (ins[0].channels % (f * f) != 0) {
          throw CostError("pixel_shuffle at '" + node.id + "' needs channels divisible by factor^2");
        }
        c.out_shape = {ins[0].height * f, ins[0].width * f, ins[0].channels / (f * f)};
        break;
      }
    }
    c.id = node.id;
    c.kind = spec.kind;
    shapes.emplace(node.id, c.out_shape);
    report.total_params += c.params;
    report.total_flops += c.flops;
    report.per_layer.push_back(std::move(c));
  }
  return report;
}

std::map<std::string, std::string> HofvsrAssumptions::describe() const {
  const std::string k = std::to_string(kernel) + "x" + std::to_string(kernel);
  return {{"kernel", k + " for every convolution"},
          {"upsample", upsample_order == UpsampleOrder::shuffle_then_conv
                           ? "x2 sub-pixel stages: pixel_shuffle(2) -> conv(up_channels) -> leaky_relu"
                           : "x2 sub-pixel stages: conv(4*up_channels) -> pixel_shuffle(2) -> leaky_relu"},
          {"trunk_fusion_conv", trunk_fusion_conv ? "conv after residual blocks, global skip add from entry"
                                                  : "none"},
          {"flow_net", "excluded (fixed across candidates)"},
          {"frames", "folded into entry conv input channels"}};
}

ArchitectureGraph hofvsr_graph(std::int64_t res_channels, std::int64_t n_res, std::int64_t up_channels,
                               std::int64_t scale, const InputShape& in_shape, const HofvsrAssumptions& a) {
  const SearchSpace space = paper_space();
  const Configuration cfg({{"res_channels", res_channels}, {"n_res", n_res}, {"up_channels", up_channels}});
  try {
    space.validate(cfg);
  } catch (const SpaceError& e) {
    throw CostError(std::string("architecture outside the candidate domains: ") + e.what());
  }
  if (scale < 2 || (scale & (scale - 1)) != 0) throw CostError("scale must be a power of two >= 2");
  if (in_shape.height <= 0 || in_shape.width <= 0 || in_shape.channels <= 0 || in_shape.frames <= 0) {
    throw CostError("input shape must be positive");
  }
  if (a.kernel <= 0 || a.kernel % 2 == 0) throw CostError("kernel must be odd and positive");

  ArchitectureGraph g;
  g.input = in_shape;
  g.label = "HO-FVSR {" + std::to_string(res_channels) + "," + std::to_string(n_res) + "," +
            std::to_string(up_channels) + "}";
  g.assumptions = a.describe();
  g.assumptions["scale"] = "x" + std::to_string(scale);

  const auto k = a.kernel;
  auto add = [&](std::string id, LayerSpec spec, std::vector<std::string> inputs) {
    g.nodes.push_back({std::move(id), spec, std::move(inputs)});
    return g.nodes.back().id;
  };

  const std::string entry = add("entry", LayerSpec::conv(in_shape.channels * in_shape.frames, res_channels, k), {kGraphInput});
  std::string x = entry;
  for (std::int64_t b = 0; b < n_res; ++b) {
    const std::string p = "res" + std::to_string(b) + ".";
    std::string h = add(p + "conv1", LayerSpec::conv(res_channels, res_channels, k), {x});
    h = add(p + "act", LayerSpec::simple(LayerKind::leaky_relu), {h});
    h = add(p + "conv2", LayerSpec::conv(res_channels, res_channels, k), {h});
    x = add(p + "add", LayerSpec::simple(LayerKind::add), {h, x});
  }
  if (a.trunk_fusion_conv) {
    const std::string f = add("trunk.conv", LayerSpec::conv(res_channels, res_channels, k), {x});
    x = add("trunk.add", LayerSpec::simple(LayerKind::add), {f, entry});
  }

  std::int64_t channels = res_channels;
  int stage = 0;
  for (std::int64_t s = scale; s > 1; s /= 2, ++stage) {
    const std::string p = "up" + std::to_string(stage) + ".";
    if (a.upsample_order == UpsampleOrder::shuffle_then_conv) {
      x = add(p + "shuffle", LayerSpec::shuffle(2), {x});
      x = add(p + "conv", LayerSpec::conv(channels / 4, up_channels, k), {x});
    } else {
      x = add(p + "conv", LayerSpec::conv(channels, up_channels * 4, k), {x});
      x = add(p + "shuffle", LayerSpec::shuffle(2), {x});
    }
    x = add(p + "act", LayerSpec::simple(LayerKind::leaky_relu), {x});
    channels = up_channels;
  }
  add("exit", LayerSpec::conv(channels, in_shape.channels, k), {x});
  return g;
}

namespace {

using detail::ordered_json;

ordered_json layer_to_json(const GraphNode& n) {
  ordered_json j;
  j["id"] = n.id;
  j["kind"] = to_string(n.layer.kind);
  if (n.layer.kind == LayerKind::conv2d) {
    j["in_channels"] = n.layer.in_channels;
    j["out_channels"] = n.layer.out_channels;
    j["kernel_h"] = n.layer.kernel_h;
    j["kernel_w"] = n.layer.kernel_w;
    j["stride"] = n.layer.stride;
    j["padding"] = n.layer.padding == Padding::same ? "same" : "valid";
    j["has_bias"] = n.layer.has_bias;
  } else if (n.layer.kind == LayerKind::pixel_shuffle) {
    j["factor"] = n.layer.factor;
  }
  j["inputs"] = n.inputs;
  return j;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw CostError(where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CostError(where + ": bad value for \"" + key + "\"");
  }
}

}  // namespace

std::string graph_to_json(const ArchitectureGraph& g) {
  ordered_json doc;
  doc["label"] = g.label;
  doc["input"] = {{"height", g.input.height}, {"width", g.input.width}, {"channels", g.input.channels},
                  {"frames", g.input.frames}};
  doc["assumptions"] = ordered_json::object();
  for (const auto& [k, v] : g.assumptions) doc["assumptions"][k] = v;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes) doc["nodes"].push_back(layer_to_json(n));
  return doc.dump(2);
}

ArchitectureGraph graph_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CostError("line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": malformed JSON");
  }
  if (!doc.is_object()) throw CostError("graph document must be an object");
  if (auto bad = detail::first_unknown_key(doc, {"label", "input", "assumptions", "nodes"}); !bad.empty()) {
    throw CostError("unknown key '" + bad + "' in graph document");
  }
  ArchitectureGraph g;
  if (doc.contains("label")) g.label = field<std::string>(doc, "label", "graph");
  if (!doc.contains("input") || !doc["input"].is_object()) throw CostError("graph needs an \"input\" object");
  const auto& in = doc["input"];
  if (auto bad = detail::first_unknown_key(in, {"height", "width", "channels", "frames"}); !bad.empty()) {
    throw CostError("unknown key '" + bad + "' in graph input");
  }
  g.input.height = field<std::int64_t>(in, "height", "input");
  g.input.width = field<std::int64_t>(in, "width", "input");
  g.input.channels = field<std::int64_t>(in, "channels", "input");
  g.input.frames = in.contains("frames") ? field<std::int64_t>(in, "frames", "input") : 1;
  if (doc.contains("assumptions")) {
    g.assumptions = field<std::map<std::string, std::string>>(doc, "assumptions", "graph");
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw CostError("graph needs a \"nodes\" array");
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& j = doc["nodes"][i];
    const std::string where = "node " + std::to_string(i);
    if (!j.is_object()) throw CostError(where + " must be an object");
    if (auto bad = detail::first_unknown_key(j, {"id", "kind", "in_channels", "out_channels", "kernel_h", "kernel_w",
                                                 "stride", "padding", "has_bias", "factor", "inputs"});
        !bad.empty()) {
      throw CostError(where + ": unknown key '" + bad + "'");
    }
    GraphNode n;
    n.id = field<std::string>(j, "id", where);
    n.layer.kind = parse_layer_kind(field<std::string>(j, "kind", where));
    if (n.layer.kind == LayerKind::conv2d) {
      n.layer.in_channels = field<std::int64_t>(j, "in_channels", where);
      n.layer.out_channels = field<std::int64_t>(j, "out_channels", where);
      n.layer.kernel_h = field<std::int64_t>(j, "kernel_h", where);
      n.layer.kernel_w = field<std::int64_t>(j, "kernel_w", where);
      n.layer.stride = j.contains("stride") ? field<std::int64_t>(j, "stride", where) : 1;
      const std::string pad = j.contains("padding") ? field<std::string>(j, "padding", where) : "same";
      if (pad != "same" && pad != "valid") throw CostError(where + ": padding must be same or valid");
      n.layer.padding = pad == "same" ? Padding::same : Padding::valid;
      n.layer.has_bias = j.contains("has_bias") ? field<bool>(j, "has_bias", where) : true;
    } else if (n.layer.kind == LayerKind::pixel_shuffle) {
      n.layer.factor = field<std::int64_t>(j, "factor", where);
    }
    n.inputs = field<std::vector<std::string>>(j, "inputs", where);
    g.nodes.push_back(std::move(n));
  }
  return g;
}

ArchitectureGraph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CostError("cannot open graph file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

std::string report_to_json(const CostReport& r) {
  ordered_json doc;
  doc["label"] = r.label;
  doc["convention"] = ordered_json::object();
  for (const auto& [k, v] : flop_convention()) doc["convention"][k] = v;
  doc["assumptions"] = ordered_json::object();
  for (const auto& [k, v] : r.assumptions) doc["assumptions"][k] = v;
  doc["total_params"] = r.total_params;
  doc["total_flops"] = r.total_flops;
  doc["params_M"] = static_cast<double>(r.total_params) / 1e6;
  doc["gflops"] = static_cast<double>(r.total_flops) / 1e9;
  doc["per_layer"] = ordered_json::array();
  for (const auto& l : r.per_layer) {
    doc["per_layer"].push_back({{"id", l.id},
                                {"kind", to_string(l.kind)},
                                {"params", l.params},
                                {"flops", l.flops},
                                {"out_shape", {l.out_shape.height, l.out_shape.width, l.out_shape.channels}}});
  }
  return doc.dump(2);
}

}  // namespace vsrhpo
