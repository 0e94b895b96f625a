#include "smart/objectives.hpp"

#include <cmath>

namespace smart {

Index LabelMap::labeled_count() const {
  Index n = 0;
  for (Index i = 0; i < labels.size(); ++i) n += labels(i) != kIgnore ? 1 : 0;
  return n;
}

void LabelMap::validate(int num_classes) const {
  for (Index i = 0; i < labels.size(); ++i) {
    const int y = labels(i);
    require(y == kIgnore || (y >= 0 && y < num_classes),
            "LabelMap: label " + std::to_string(y) + " at position " + std::to_string(i) +
                " outside [0, " + std::to_string(num_classes) + ")");
  }
}

LossBundle LossBundle::compose(double seg_total, double dep_total, double rfa, double alpha, double beta) {
  LossBundle b;
  b.seg_total = seg_total;
  b.dep_total = dep_total;
  b.rfa = rfa;
  b.alpha = alpha;
  b.beta = beta;
  b.supervised = supervised_loss(seg_total, dep_total, alpha);
  b.overall = overall_loss(b.supervised, rfa, beta);
  return b;
}

bool LossBundle::consistent(double tol) const {
  return std::abs(supervised - (seg_total + alpha * dep_total)) <= tol &&
         std::abs(overall - (supervised + beta * rfa)) <= tol;
}

namespace {

void check_labels(Index classes, Index positions, const LabelMap& labels) {
  require(labels.size() == positions, "seg_nll: " + std::to_string(labels.size()) + " labels for " +
                                          std::to_string(positions) + " positions");
  labels.validate(static_cast<int>(classes));
}

}  // namespace

double seg_nll(const Tensor& logits, const LabelMap& labels) {
  check_labels(logits.rows(), logits.cols(), labels);
  double total = 0.0;
  Index count = 0;
  for (Index j = 0; j < logits.cols(); ++j) {
    const int y = labels.labels(j);
    if (y == LabelMap::kIgnore) continue;
    total += -logits(y, j) + lse(logits.col(j));
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double berhu_threshold(const RowVector& residual) {
  return residual.size() == 0 ? 0.0 : residual.cwiseAbs().maxCoeff() / 5.0;
}

double berhu_loss(const RowVector& pred, const RowVector& gt) {
  require(pred.size() == gt.size(),
          "berhu_loss: shape mismatch " + shape_string(pred) + " vs " + shape_string(gt));
  require(pred.size() > 0, "berhu_loss: empty depth map");
  const RowVector residual = pred - gt;
  const double c = berhu_threshold(residual);
  double total = 0.0;
  for (Index i = 0; i < residual.size(); ++i) total += ad::berhu_value(residual(i), c);
  return total / static_cast<double>(residual.size());
}

double four_term_total(double src_plain, double src_fused, double tgt_plain, double tgt_fused) {
  return src_plain + tgt_plain + src_fused + tgt_fused;
}

double supervised_loss(double seg_total, double dep_total, double alpha) { return seg_total + alpha * dep_total; }

double overall_loss(double supervised, double rfa, double beta) { return supervised + beta * rfa; }

LabelMap pseudo_label(const Tensor& logits, double threshold) {
  require(threshold >= 0.0 && threshold <= 1.0, "pseudo_label: threshold must lie in [0, 1]");
  LabelMap out;
  out.source = LabelSource::Pseudo;
  out.labels.resize(logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    Index best = 0;
    logits.col(j).maxCoeff(&best);
    // Top probability is exp(max - lse) = 1 / sum(exp(x - max)).
    const double confidence = std::exp(logits(best, j) - lse(logits.col(j)));
    out.labels(j) = confidence >= threshold ? static_cast<int>(best) : LabelMap::kIgnore;
  }
  return out;
}

namespace ad {

Var seg_nll(Var logits, const LabelMap& labels) {
  const Tensor& p = logits.value();
  check_labels(p.rows(), p.cols(), labels);
  Graph& g = *logits.graph;
  const Index count = labels.labeled_count();
  if (count == 0) return g.constant(Tensor::Zero(1, 1));
  const double w = 1.0 / static_cast<double>(count);
  Tensor picked = Tensor::Zero(p.rows(), p.cols());
  Tensor valid = Tensor::Zero(1, p.cols());
  for (Index j = 0; j < p.cols(); ++j) {
    const int y = labels.labels(j);
    if (y == LabelMap::kIgnore) continue;
    picked(y, j) = w;
    valid(0, j) = w;
  }
  // -P^y + lse(P), averaged over labeled positions
  return sum(hadamard(g.constant(valid), lse_cols(logits))) - sum(hadamard(g.constant(picked), logits));
}

Var berhu_loss(Var pred, const RowVector& gt) {
  require(pred.rows() == 1 && pred.cols() == gt.size(),
          "berhu_loss: shape mismatch " + shape_string(pred.value()) + " vs " + shape_string(gt));
  Graph& g = *pred.graph;
  const Var residual = pred - g.constant(gt);
  const double c = berhu_threshold(residual.value().row(0));
  return mean(berhu(residual, c));
}

}  // namespace ad
}  // namespace smart
