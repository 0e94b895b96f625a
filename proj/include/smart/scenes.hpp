#ifndef SMART_SCENES_HPP
#define SMART_SCENES_HPP

#include "smart/numeric.hpp"
#include "smart/objectives.hpp"
#include "smart/rng.hpp"

#include <vector>

namespace smart {

enum class Domain { Source, Target };

struct SceneDims {
  int h = 16;
  int w = 16;
  int k = 4;
  int channels = 8;

  Index positions() const { return static_cast<Index>(h) * w; }
  void validate() const;
};

/// One synthetic image. Positions are flattened row-major (index = row * w + col).
struct Scene {
  Tensor features;  // channels x N
  LabelMap labels;
  RowVector depth;            // depth label used for training: ground truth (source) or pseudo (target)
  RowVector reference_depth;  // true depth, evaluation only
  Domain domain = Domain::Source;
  SceneDims dims;
};

/// Domain gap applied to target scenes.
struct ShiftSpec {
  RowVector feature_shift;  // per channel
  RowVector feature_scale;  // per channel, > 0
  double noise_sd = 0.0;
  double depth_noise_sd = 0.0;

  /// Per-channel vectors from scalar knobs: channel c is shifted by (-1)^c * shift.
  static ShiftSpec from_scalars(int channels, double shift, double scale, double noise_sd, double depth_noise_sd);
  static ShiftSpec none(int channels) { return from_scalars(channels, 0.0, 1.0, 0.0, 0.0); }

  void validate(int channels) const;
};

struct DomainPair {
  std::vector<Scene> source;
  std::vector<Scene> target;
};

/// Smallest depth a corrupted pseudo-depth value may take.
inline constexpr double kDepthFloor = 1e-3;

/// Base depth of class `k`; strictly increasing in k.
double class_base_depth(int k);

/// Fixed random map from (one-hot class, depth) to feature channels; depends only on dims.
Tensor feature_embedding(int channels, int k);

/// Piecewise-constant class map from random rectangles, class-dependent depth with a
/// vertical ramp, and features embedded through feature_embedding() plus noise.
Scene gen_scene(Rng rng, const SceneDims& dims);

/// Apply a ShiftSpec to a generated source scene; `rng` drives the extra noise.
Scene shift_scene(const Scene& scene, const ShiftSpec& spec, Rng rng);

/// Source scene i comes from rng.derive(2i), target scene i from rng.derive(2i + 1) then
/// shift_scene with rng.derive(2i + 1).derive(1).
DomainPair make_domain_pair(Rng rng, const ShiftSpec& spec, int n_scenes, const SceneDims& dims);

}  // namespace smart

#endif  // SMART_SCENES_HPP
