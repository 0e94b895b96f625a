#ifndef SMART_OBJECTIVES_HPP
#define SMART_OBJECTIVES_HPP

#include "smart/autodiff.hpp"
#include "smart/numeric.hpp"

namespace smart {

enum class LabelSource { GroundTruth, Pseudo };

/// Per-position class labels (flattened H x W). Entries are in [0, K) or kIgnore.
struct LabelMap {
  static constexpr int kIgnore = -1;

  Eigen::RowVectorXi labels;
  LabelSource source = LabelSource::GroundTruth;
  /// Set on target-domain ground truth: usable for evaluation, never for a training loss.
  bool evaluation_only = false;

  Index size() const { return labels.size(); }
  Index labeled_count() const;
  void validate(int num_classes) const;
};

/// Loss values of one training step.
struct LossBundle {
  double seg_total = 0.0;
  double dep_total = 0.0;
  double supervised = 0.0;
  double rfa = 0.0;
  double overall = 0.0;
  double alpha = 0.001;
  double beta = 1.0;

  static LossBundle compose(double seg_total, double dep_total, double rfa, double alpha, double beta);
  /// Both arithmetic identities (supervised and overall) hold within `tol`.
  bool consistent(double tol = 1e-12) const;
};

/// Mean over labeled positions of -P^y + lse(P); 0 when every position is ignored.
double seg_nll(const Tensor& logits, const LabelMap& labels);

/// c = max |pred - gt| / 5 over the image.
double berhu_threshold(const RowVector& residual);

/// Mean berHu of pred - gt with the per-image threshold.
double berhu_loss(const RowVector& pred, const RowVector& gt);

double four_term_total(double src_plain, double src_fused, double tgt_plain, double tgt_fused);
double supervised_loss(double seg_total, double dep_total, double alpha = 0.001);
double overall_loss(double supervised, double rfa, double beta = 1.0);

/// Argmax class where the top softmax probability reaches `threshold`, kIgnore elsewhere.
LabelMap pseudo_label(const Tensor& logits, double threshold = 0.9);

namespace ad {

Var seg_nll(Var logits, const LabelMap& labels);
/// The threshold is computed from the current residual values and held constant.
Var berhu_loss(Var pred, const RowVector& gt);

}  // namespace ad
}  // namespace smart

#endif  // SMART_OBJECTIVES_HPP
