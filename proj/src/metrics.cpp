#include "smart/metrics.hpp"

#include "smart/rfa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smart {

ConfusionMatrix::ConfusionMatrix(int classes) {
  require(classes >= 1, "ConfusionMatrix: need at least one class");
  counts_.setZero(classes, classes);
}

void ConfusionMatrix::add(const Eigen::RowVectorXi& predicted, const Eigen::RowVectorXi& truth) {
  require(predicted.size() == truth.size(), "ConfusionMatrix::add: " + std::to_string(predicted.size()) +
                                                " predictions vs " + std::to_string(truth.size()) + " labels");
  const int k = classes();
  for (Index i = 0; i < truth.size(); ++i) {
    const int t = truth(i);
    if (t < 0) continue;
    const int p = predicted(i);
    require(t < k && p >= 0 && p < k, "ConfusionMatrix::add: class out of range at position " + std::to_string(i));
    ++counts_(t, p);
  }
}

RowVector ConfusionMatrix::iou() const {
  const int k = classes();
  RowVector out(k);
  for (int c = 0; c < k; ++c) {
    const long long tp = counts_(c, c);
    const long long gt = counts_.row(c).sum();
    const long long pred = counts_.col(c).sum();
    out(c) = gt == 0 ? std::numeric_limits<double>::quiet_NaN()
                     : static_cast<double>(tp) / static_cast<double>(gt + pred - tp);
  }
  return out;
}

double ConfusionMatrix::miou() const {
  const RowVector v = iou();
  double sum = 0.0;
  int present = 0;
  for (Index c = 0; c < v.size(); ++c) {
    if (std::isnan(v(c))) continue;
    sum += v(c);
    ++present;
  }
  return present == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / present;
}

Eigen::RowVectorXi argmax_cols(const Tensor& logits) {
  Eigen::RowVectorXi out(logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    Index best = 0;
    for (Index r = 1; r < logits.rows(); ++r)
      if (logits(r, j) > logits(best, j)) best = r;
    out(j) = static_cast<int>(best);
  }
  return out;
}

namespace {

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

Evaluation evaluate(const ModelParams& model, const std::vector<Scene>& scenes, EvalCounters* counters) {
  require(!scenes.empty(), "evaluate: no scenes");
  ConfusionMatrix cm(model.shape.classes);
  std::vector<double> abs_err, e_plain, e_fused;
  Index positions = 0;
  for (const Scene& s : scenes) {
    const Predictions p = forward_pass(model, s.features, Mode::Infer, counters);
    cm.add(argmax_cols(p.seg_fused), s.labels.labels);
    abs_err.push_back(seq_sum((p.dep_fused.row(0) - s.reference_depth).cwiseAbs()));
    positions += s.reference_depth.size();

    const Predictions diag = forward_pass(model, s.features, Mode::Train);
    e_plain.push_back(seq_sum(free_energy_map(diag.seg_plain)));
    e_fused.push_back(seq_sum(free_energy_map(diag.seg_fused)));
  }
  Evaluation ev;
  ev.iou = cm.iou();
  ev.miou = cm.miou();
  const auto n = static_cast<double>(positions);
  ev.depth_mae = sorted_sum(abs_err) / n;
  ev.mean_energy_plain = sorted_sum(e_plain) / n;
  ev.mean_energy_fused = sorted_sum(e_fused) / n;
  return ev;
}

}  // namespace smart
