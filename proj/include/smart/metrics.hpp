#ifndef SMART_METRICS_HPP
#define SMART_METRICS_HPP

#include "smart/model.hpp"
#include "smart/scenes.hpp"

#include <vector>

namespace smart {

/// counts(t, p): positions with true class t predicted as p. Ignored labels are skipped.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  void add(const Eigen::RowVectorXi& predicted, const Eigen::RowVectorXi& truth);
  const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& counts() const { return counts_; }
  int classes() const { return static_cast<int>(counts_.rows()); }

  /// tp / (tp + fp + fn); NaN for a class absent from the ground truth.
  RowVector iou() const;
  /// Mean IoU over the classes present in the ground truth; NaN when none are.
  double miou() const;

 private:
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts_;
};

/// Column-wise argmax, lowest index on ties.
Eigen::RowVectorXi argmax_cols(const Tensor& logits);

struct Evaluation {
  RowVector iou;  // per class, NaN when absent
  double miou = 0.0;
  double depth_mae = 0.0;
  double mean_energy_plain = 0.0;  // mean free energy of the plain seg head
  double mean_energy_fused = 0.0;
};

/// Fused-head argmax against the true labels, fused depth against reference depth.
/// Energies come from a separate diagnostic pass that also runs the plain heads.
/// Per-scene contributions are combined in sorted order, so scene order does not matter.
Evaluation evaluate(const ModelParams& model, const std::vector<Scene>& scenes, EvalCounters* counters = nullptr);

}  // namespace smart

#endif  // SMART_METRICS_HPP
