#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsrhpo {

class CostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayerKind { conv2d, relu, leaky_relu, add, concat, pixel_shuffle };
enum class Padding { same, valid };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::conv2d;
  // conv2d
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t stride = 1;
  Padding padding = Padding::same;
  bool has_bias = true;
  // pixel_shuffle
  std::int64_t factor = 0;

  static LayerSpec conv(std::int64_t in, std::int64_t out, std::int64_t k, bool bias = true,
                        Padding pad = Padding::same, std::int64_t stride = 1);
  static LayerSpec shuffle(std::int64_t factor);
  static LayerSpec simple(LayerKind kind);
};

struct Shape {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;

  std::int64_t elements() const { return height * width * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Declared network input. Frames are folded into channels at the entry.
struct InputShape {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::int64_t frames = 1;

  Shape folded() const { return {height, width, channels * frames}; }
};

struct GraphNode {
  std::string id;
  LayerSpec layer;
  std::vector<std::string> inputs;
};

/// Reserved node id that refers to the graph input tensor.
inline constexpr const char* kGraphInput = "input";

struct ArchitectureGraph {
  InputShape input;
  std::vector<GraphNode> nodes;
  std::string label;
  std::map<std::string, std::string> assumptions;
};

struct LayerCost {
  std::string id;
  LayerKind kind = LayerKind::conv2d;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  Shape out_shape;
};

struct CostReport {
  std::string label;
  std::map<std::string, std::string> assumptions;
  std::int64_t total_params = 0;
  std::int64_t total_flops = 0;
  std::vector<LayerCost> per_layer;
};

/// Counting convention shared by every report: one multiply-accumulate is
/// two FLOPs, bias adds and element-wise activations are counted, concat
/// and pixel shuffle are free.
std::map<std::string, std::string> flop_convention();

/// Params, FLOPs and output shape of a single convolution.
LayerCost conv2d_cost(const LayerSpec& layer, const Shape& in_shape);

/// Propagates shapes in node order and sums per-layer costs exactly.
CostReport graph_cost(const ArchitectureGraph& graph);

enum class UpsampleOrder { conv_then_shuffle, shuffle_then_conv };

/// Architectural details the candidate-network family leaves open. Every
/// field is echoed into the report's assumption block.
struct HofvsrAssumptions {
  std::int64_t kernel = 3;
  UpsampleOrder upsample_order = UpsampleOrder::shuffle_then_conv;
  bool trunk_fusion_conv = true;

  std::map<std::string, std::string> describe() const;
};

/// Residual trunk plus sub-pixel up-sampling network for one point of the
/// search space. `scale` must be a power of two >= 2; each x2 stage is one
/// pixel shuffle with a convolution. The optical-flow front end is fixed
/// across candidates and not part of the graph.
ArchitectureGraph hofvsr_graph(std::int64_t res_channels, std::int64_t n_res, std::int64_t up_channels,
                               std::int64_t scale, const InputShape& in_shape,
                               const HofvsrAssumptions& assumptions = {});

std::string graph_to_json(const ArchitectureGraph& graph);
ArchitectureGraph graph_from_json(const std::string& text);
ArchitectureGraph load_graph_file(const std::string& path);

/// Report as JSON with integer totals and the convention/assumption header.
std::string report_to_json(const CostReport& report);

}  // namespace vsrhpo
