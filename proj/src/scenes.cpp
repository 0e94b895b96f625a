#include "smart/scenes.hpp"

#include <algorithm>
#include <set>

namespace smart {

namespace {

constexpr std::uint64_t kEmbeddingSeed = 0x5eed'0f'e4'7e'11ULL;
constexpr double kFeatureNoiseSd = 1.5;
constexpr double kDepthNoiseSd = 0.05;
constexpr double kDepthRamp = 0.8;

void paint_rectangle(Eigen::RowVectorXi& labels, const SceneDims& dims, Rng& rng, int cls) {
  const int rh = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, dims.h / 2))));
  const int rw = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, dims.w / 2))));
  const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims.h - std::min(rh, dims.h) + 1)));
  const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims.w - std::min(rw, dims.w) + 1)));
  for (int r = r0; r < std::min(dims.h, r0 + rh); ++r)
    for (int c = c0; c < std::min(dims.w, c0 + rw); ++c) labels(r * dims.w + c) = cls;
}

}  // namespace

void SceneDims::validate() const {
  require(h >= 1 && w >= 1, "SceneDims: grid must be at least 1x1");
  require(k >= 2, "SceneDims: need k >= 2 classes");
  require(static_cast<Index>(k) <= positions(),
          "SceneDims: k = " + std::to_string(k) + " exceeds h*w = " + std::to_string(positions()));
  require(channels >= 1, "SceneDims: need at least one channel");
}

ShiftSpec ShiftSpec::from_scalars(int channels, double shift, double scale, double noise_sd, double depth_noise_sd) {
  ShiftSpec s;
  s.feature_shift.resize(channels);
  for (int c = 0; c < channels; ++c) s.feature_shift(c) = (c % 2 == 0) ? shift : -shift;
  s.feature_scale = RowVector::Constant(channels, scale);
  s.noise_sd = noise_sd;
  s.depth_noise_sd = depth_noise_sd;
  return s;
}

void ShiftSpec::validate(int channels) const {
  require(feature_shift.size() == channels && feature_scale.size() == channels,
          "ShiftSpec: per-channel vectors must have " + std::to_string(channels) + " entries");
  require((feature_scale.array() > 0.0).all(), "ShiftSpec: feature_scale must be positive");
  require(noise_sd >= 0.0, "ShiftSpec: noise_sd must be non-negative");
  require(depth_noise_sd >= 0.0, "ShiftSpec: depth_noise_sd must be non-negative");
  require(all_finite(feature_shift) && all_finite(feature_scale), "ShiftSpec: non-finite entries");
}

double class_base_depth(int k) { return 1.0 + 1.5 * static_cast<double>(k); }

Tensor feature_embedding(int channels, int k) {
  Rng rng(kEmbeddingSeed ^ (static_cast<std::uint64_t>(channels) << 32) ^ static_cast<std::uint64_t>(k));
  Tensor e = rng.normal_tensor(channels, k + 1);
  return e;
}

Scene gen_scene(Rng rng, const SceneDims& dims) {
  dims.validate();
  const Index n = dims.positions();
  Scene s;
  s.dims = dims;
  s.domain = Domain::Source;

  Eigen::RowVectorXi labels = Eigen::RowVectorXi::Constant(n, static_cast<int>(rng.below(dims.k)));
  const int rectangles = 3 + static_cast<int>(rng.below(4));
  for (int i = 0; i < rectangles; ++i) paint_rectangle(labels, dims, rng, static_cast<int>(rng.below(dims.k)));
  std::set<int> present(labels.data(), labels.data() + n);
  while (present.size() < 2) {
    // Force a second class onto a single position if the painting collapsed.
    const int other = (*present.begin() + 1) % dims.k;
    labels(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))) = other;
    present.insert(other);
  }
  s.labels.labels = labels;
  s.labels.source = LabelSource::GroundTruth;

  s.depth.resize(n);
  for (int r = 0; r < dims.h; ++r) {
    const double ramp = dims.h > 1 ? kDepthRamp * r / (dims.h - 1) : 0.0;
    for (int c = 0; c < dims.w; ++c) {
      const Index i = static_cast<Index>(r) * dims.w + c;
      s.depth(i) = std::max(kDepthFloor, class_base_depth(labels(i)) + ramp + kDepthNoiseSd * rng.normal());
    }
  }
  s.reference_depth = s.depth;

  const Tensor embed = feature_embedding(dims.channels, dims.k);
  Tensor code = Tensor::Zero(dims.k + 1, n);
  for (Index i = 0; i < n; ++i) {
    code(labels(i), i) = 1.0;
    code(dims.k, i) = s.depth(i) / class_base_depth(dims.k - 1);
  }
  s.features = embed * code + rng.normal_tensor(dims.channels, n, kFeatureNoiseSd);
  return s;
}

Scene shift_scene(const Scene& scene, const ShiftSpec& spec, Rng rng) {
  spec.validate(scene.dims.channels);
  Scene t = scene;
  t.domain = Domain::Target;
  for (Index j = 0; j < t.features.cols(); ++j)
    for (Index c = 0; c < t.features.rows(); ++c) {
      double v = spec.feature_scale(c) * scene.features(c, j) + spec.feature_shift(c);
      if (spec.noise_sd > 0.0) v += spec.noise_sd * rng.normal();
      t.features(c, j) = v;
    }
  for (Index i = 0; i < t.depth.size(); ++i) {
    double d = scene.reference_depth(i);
    if (spec.depth_noise_sd > 0.0) d += spec.depth_noise_sd * rng.normal();
    t.depth(i) = std::max(kDepthFloor, d);
  }
  t.labels.evaluation_only = true;
  return t;
}

DomainPair make_domain_pair(Rng rng, const ShiftSpec& spec, int n_scenes, const SceneDims& dims) {
  require(n_scenes >= 1, "make_domain_pair: n_scenes must be >= 1");
  dims.validate();
  spec.validate(dims.channels);
  DomainPair pair;
  pair.source.reserve(static_cast<std::size_t>(n_scenes));
  pair.target.reserve(static_cast<std::size_t>(n_scenes));
  for (int i = 0; i < n_scenes; ++i) {
    const auto si = static_cast<std::uint64_t>(i);
    pair.source.push_back(gen_scene(rng.derive(2 * si), dims));
    const Rng target_rng = rng.derive(2 * si + 1);
    pair.target.push_back(shift_scene(gen_scene(target_rng, dims), spec, target_rng.derive(1)));
  }
  return pair;
}

}  // namespace smart
