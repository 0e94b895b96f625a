#ifndef SMART_TRAIN_HPP
#define SMART_TRAIN_HPP

#include "smart/model.hpp"
#include "smart/objectives.hpp"
#include "smart/scenes.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace smart {

struct TrainConfig {
  int t1 = 600;  // phase 1: supervised + pseudo-label loss
  int t2 = 150;  // phase 2: adds the reliability loss
  double lr = 0.05;
  double lr_phase2_mult = 0.1;
  double alpha = 0.001;
  double beta = 1.0;
  double gamma = 1.0;
  int steps = 1;
  double pseudo_threshold = 0.9;
  FusionScheme scheme = FusionScheme::Add;
  std::uint64_t seed = 1;
  /// Off for the no-fusion baseline; not a config-file key.
  bool fusion_enabled = true;
  int hidden = 32;

  void validate() const;
};

/// Fresh model for `cfg`, initialized from a stream derived from cfg.seed.
ModelParams make_model(const TrainConfig& cfg, int in_channels, int classes);

/// Per-term values of one step; the bundle holds the composed totals.
struct TraceRow {
  int phase = 1;
  int step = 0;
  double seg_src_plain = 0.0, seg_src_fused = 0.0, seg_tgt_plain = 0.0, seg_tgt_fused = 0.0;
  double dep_src_plain = 0.0, dep_src_fused = 0.0, dep_tgt_plain = 0.0, dep_tgt_fused = 0.0;
  double rfa_src = 0.0, rfa_tgt = 0.0;
  Index mask_src = 0, mask_tgt = 0;  // positions where the fused branch teaches (segmentation)
  Index pseudo_labeled = 0;
  LossBundle bundle;
};

struct TrainStats {
  int phase1_rfa_calls = 0;
  int phase2_rfa_source_calls = 0;
  int phase2_rfa_target_calls = 0;
};

struct TrainResult {
  ModelParams model;
  std::vector<TraceRow> trace;
  TrainStats stats;
};

/// Raised when a loss term turns non-finite; the message names the term.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labels that may enter a training loss; throws for evaluation-only (target) labels.
const LabelMap& training_labels(const Scene& scene);

/// Two-phase SGD. Phase 1 runs t1 steps on L_s, phase 2 runs t2 steps on L_s + beta * L_RFA
/// with the reliability loss evaluated on the source and target scene of every step.
/// One source and one target scene per step, cycled in order.
TrainResult train(ModelParams model, const std::vector<Scene>& source, const std::vector<Scene>& target,
                  const TrainConfig& cfg);

}  // namespace smart

#endif  // SMART_TRAIN_HPP
