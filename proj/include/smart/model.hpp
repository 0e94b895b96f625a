#ifndef SMART_MODEL_HPP
#define SMART_MODEL_HPP

#include "smart/autodiff.hpp"
#include "smart/eb2f.hpp"
#include "smart/numeric.hpp"
#include "smart/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smart {

/// Per-position affine map: W x + b applied to every column.
struct Dense {
  Tensor w;
  Tensor b;  // out x 1
};

/// x + outer(relu(inner(x))).
struct ResidualBlock {
  Dense inner;
  Dense outer;
};

struct ModelShape {
  int in_channels = 8;
  int hidden = 32;
  int classes = 4;
};

/// Shared encoder, two task nets, plain and fused decoders per task, and one fusion
/// module per direction.
struct ModelParams {
  ModelShape shape;
  Dense enc1;
  Dense enc2;
  ResidualBlock seg_net;
  ResidualBlock dep_net;
  Dense seg_dec_plain;
  Dense seg_dec_fused;
  Dense dep_dec_plain;
  Dense dep_dec_fused;
  FusionParams fusion_seg;  // produces fused segmentation features
  FusionParams fusion_dep;  // produces fused depth features
  /// When false the fused decoders read the task features directly (no-fusion baseline).
  bool fusion_enabled = true;

  static ModelParams init(const ModelShape& shape, FusionScheme scheme, double gamma, int steps, Rng rng);

  /// Visits every trainable tensor with a stable name, in a fixed order.
  void for_each(const std::function<void(const std::string&, const Tensor&)>& f) const;
  void for_each_mutable(const std::function<void(const std::string&, Tensor&)>& f);

  bool all_finite() const;
};

enum class Mode { Train, Infer };

struct Predictions {
  Tensor seg_plain;  // K x N, empty in Infer mode
  Tensor seg_fused;  // K x N
  Tensor dep_plain;  // 1 x N, empty in Infer mode
  Tensor dep_fused;  // 1 x N
};

/// How often each decoder ran; used to check the inference contract.
struct EvalCounters {
  int plain_decoder_calls = 0;
  int fused_decoder_calls = 0;
};

namespace ad {

/// ModelParams registered as graph leaves.
struct ModelVars {
  struct DenseVars {
    Var w, b;
  };
  DenseVars enc1, enc2, seg_in, seg_out, dep_in, dep_out, seg_plain, seg_fused, dep_plain, dep_fused;
  FusionVars fusion_seg;
  FusionVars fusion_dep;
  /// Every leaf in ModelParams::for_each order.
  std::vector<Var> leaves;
};

struct Heads {
  std::optional<Var> seg_plain;
  std::optional<Var> seg_fused;
  std::optional<Var> dep_plain;
  std::optional<Var> dep_fused;
};

ModelVars bind(Graph& g, const ModelParams& model);

/// Gradient of every trainable tensor, in ModelParams::for_each order.
std::vector<Tensor> parameter_gradients(const Gradients& grads, const ModelVars& vars);

Heads forward(const ModelParams& model, const ModelVars& vars, Var features, Mode mode,
              EvalCounters* counters = nullptr);

}  // namespace ad

Predictions forward_pass(const ModelParams& model, const Tensor& features, Mode mode,
                         EvalCounters* counters = nullptr);

}  // namespace smart

#endif  // SMART_MODEL_HPP
