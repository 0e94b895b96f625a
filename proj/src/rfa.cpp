#include "smart/rfa.hpp"

#include <cmath>

namespace smart {

RowVector ReliabilityMask::as_weights() const { return bits.cast<double>().matrix(); }

RowVector free_energy_map(const Tensor& logits) {
  require(logits.rows() >= 2, "free_energy_map: need K >= 2 classes, got " + std::to_string(logits.rows()));
  return -lse_cols(logits);
}

RowVector depth_energy_map(const RowVector& pred, const RowVector& ref, double c) {
  require(pred.size() == ref.size(),
          "depth_energy_map: shape mismatch " + shape_string(pred) + " vs " + shape_string(ref));
  require(c >= 0.0, "depth_energy_map: threshold must be non-negative");
  RowVector out(pred.size());
  for (Index i = 0; i < pred.size(); ++i) out(i) = ad::berhu_value(pred(i) - ref(i), c);
  return out;
}

ReliabilityMask reliability_mask(const RowVector& e_plain, const RowVector& e_fused) {
  require(e_plain.size() == e_fused.size(),
          "reliability_mask: shape mismatch " + shape_string(e_plain) + " vs " + shape_string(e_fused));
  ReliabilityMask m;
  m.bits.resize(e_plain.size());
  for (Index i = 0; i < e_plain.size(); ++i) {
    m.bits(i) = e_fused(i) < e_plain(i) ? 1 : 0;
    m.count += m.bits(i);
  }
  return m;
}

double kl_divergence(const Eigen::Ref<const Vector>& p_logits, const Eigen::Ref<const Vector>& q_logits) {
  require(p_logits.size() == q_logits.size(), "kl_divergence: class count mismatch");
  const double lse_p = lse(p_logits);
  const double lse_q = lse(q_logits);
  double kl = 0.0;
  for (Index k = 0; k < p_logits.size(); ++k) {
    const double log_p = p_logits(k) - lse_p;
    const double log_q = q_logits(k) - lse_q;
    kl += std::exp(log_p) * (log_p - log_q);
  }
  return kl;
}

namespace {

void check_mask(const ReliabilityMask& mask, Index positions, const char* who) {
  require(mask.size() == positions, std::string(who) + ": mask covers " + std::to_string(mask.size()) +
                                        " positions, predictions " + std::to_string(positions));
}

/// Weights 1/(N-M) on m = 0 positions and 1/M on m = 1 positions; empty halves get no weight.
std::pair<RowVector, RowVector> half_weights(const ReliabilityMask& mask) {
  const Index n = mask.size();
  const Index m = mask.count;
  RowVector w0 = RowVector::Zero(n);
  RowVector w1 = RowVector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (mask.bits(i))
      w1(i) = 1.0 / static_cast<double>(m);
    else
      w0(i) = 1.0 / static_cast<double>(n - m);
  }
  return {w0, w1};
}

}  // namespace

double rfa_seg_loss(const Tensor& p_plain, const Tensor& p_fused, const ReliabilityMask& mask) {
  require(p_plain.rows() == p_fused.rows() && p_plain.cols() == p_fused.cols(),
          "rfa_seg_loss: shape mismatch " + shape_string(p_plain) + " vs " + shape_string(p_fused));
  check_mask(mask, p_plain.cols(), "rfa_seg_loss");
  const auto [w0, w1] = half_weights(mask);
  double loss = 0.0;
  for (Index j = 0; j < p_plain.cols(); ++j) {
    if (mask.bits(j))
      loss += w1(j) * kl_divergence(p_fused.col(j), p_plain.col(j));
    else
      loss += w0(j) * kl_divergence(p_plain.col(j), p_fused.col(j));
  }
  return loss;
}

double rfa_dep_loss(const RowVector& d_plain, const RowVector& d_fused, const ReliabilityMask& mask, double c) {
  require(d_plain.size() == d_fused.size(),
          "rfa_dep_loss: shape mismatch " + shape_string(d_plain) + " vs " + shape_string(d_fused));
  check_mask(mask, d_plain.size(), "rfa_dep_loss");
  const auto [w0, w1] = half_weights(mask);
  double loss = 0.0;
  for (Index j = 0; j < d_plain.size(); ++j) {
    if (mask.bits(j))
      loss += w1(j) * ad::berhu_value(d_fused(j) - d_plain(j), c);
    else
      loss += w0(j) * ad::berhu_value(d_plain(j) - d_fused(j), c);
  }
  return loss;
}

double rfa_total(double seg_loss, double dep_loss, const EnergyConfig& cfg) {
  require(cfg.alpha > 0.0, "rfa_total: alpha must be positive");
  return seg_loss + cfg.alpha * dep_loss;
}

IdentityCheck energy_softmax_identity(const Eigen::Ref<const Vector>& logits) {
  require(logits.size() >= 2, "energy_softmax_identity: need K >= 2");
  IdentityCheck r;
  const double top = logits.maxCoeff();
  r.lhs = std::log(softmax(logits).maxCoeff());
  r.rhs = -lse(logits) + top;
  r.diff = std::abs(r.lhs - r.rhs);
  return r;
}

namespace ad {

Var rfa_seg_loss(Var p_plain, Var p_fused, const ReliabilityMask& mask) {
  return rfa_seg_loss(p_plain, p_fused, mask, p_plain.value(), p_fused.value());
}

Var rfa_seg_loss(Var p_plain, Var p_fused, const ReliabilityMask& mask, const Tensor& plain_teacher,
                 const Tensor& fused_teacher) {
  const Tensor& a = plain_teacher;
  const Tensor& b = fused_teacher;
  require(a.rows() == b.rows() && a.cols() == b.cols() && p_plain.rows() == a.rows() &&
              p_plain.cols() == a.cols() && p_fused.rows() == a.rows() && p_fused.cols() == a.cols(),
          "rfa_seg_loss: shape mismatch " + shape_string(p_plain.value()) + " vs " + shape_string(p_fused.value()));
  check_mask(mask, a.cols(), "rfa_seg_loss");
  Graph& g = *p_plain.graph;
  const auto [w0, w1] = half_weights(mask);

  // Teacher distribution per column and its weighted entropy term (constant).
  Tensor teacher_to_fused = Tensor::Zero(a.rows(), a.cols());
  Tensor teacher_to_plain = Tensor::Zero(a.rows(), a.cols());
  double entropy_term = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    const bool fused_teaches = mask.bits(j) != 0;
    const auto col = fused_teaches ? b.col(j) : a.col(j);
    const double l = lse(col);
    const double w = fused_teaches ? w1(j) : w0(j);
    for (Index k = 0; k < a.rows(); ++k) {
      const double log_p = col(k) - l;
      const double p = std::exp(log_p);
      entropy_term += w * p * log_p;
      (fused_teaches ? teacher_to_plain : teacher_to_fused)(k, j) = w * p;
    }
  }
  const Var cross = sum(hadamard(g.constant(teacher_to_fused), log_softmax_cols(p_fused))) +
                    sum(hadamard(g.constant(teacher_to_plain), log_softmax_cols(p_plain)));
  return g.constant(Tensor::Constant(1, 1, entropy_term)) - cross;
}

Var rfa_dep_loss(Var d_plain, Var d_fused, const ReliabilityMask& mask, double c) {
  return rfa_dep_loss(d_plain, d_fused, mask, c, d_plain.value(), d_fused.value());
}

Var rfa_dep_loss(Var d_plain, Var d_fused, const ReliabilityMask& mask, double c, const Tensor& plain_teacher,
                 const Tensor& fused_teacher) {
  require(d_plain.rows() == 1 && d_fused.rows() == 1 && d_plain.cols() == d_fused.cols() &&
              plain_teacher.rows() == 1 && fused_teacher.rows() == 1 && plain_teacher.cols() == d_plain.cols() &&
              fused_teacher.cols() == d_plain.cols(),
          "rfa_dep_loss: shape mismatch " + shape_string(d_plain.value()) + " vs " +
              shape_string(d_fused.value()));
  check_mask(mask, d_plain.cols(), "rfa_dep_loss");
  Graph& g = *d_plain.graph;
  const auto [w0, w1] = half_weights(mask);
  const Var fused_student = berhu(d_fused - g.constant(plain_teacher), c);
  const Var plain_student = berhu(d_plain - g.constant(fused_teacher), c);
  return sum(hadamard(g.constant(w0), fused_student)) + sum(hadamard(g.constant(w1), plain_student));
}

}  // namespace ad
}  // namespace smart
