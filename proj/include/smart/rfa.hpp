#ifndef SMART_RFA_HPP
#define SMART_RFA_HPP

#include "smart/autodiff.hpp"
#include "smart/numeric.hpp"

#include <cstdint>

namespace smart {

struct EnergyConfig {
  /// Gibbs temperature; fixed.
  static constexpr double tau = 1.0;
  double alpha = 0.001;
};

/// 1 where the fused branch has strictly lower energy than the plain one.
struct ReliabilityMask {
  Eigen::Array<std::uint8_t, 1, Eigen::Dynamic> bits;
  Index count = 0;

  Index size() const { return bits.size(); }
  /// 0/1 as doubles, handy as constant weights.
  RowVector as_weights() const;
};

/// -lse over the class logits of each position (K x N -> 1 x N).
RowVector free_energy_map(const Tensor& logits);

/// berHu(pred - ref) per position with threshold c; all zeros when c == 0.
RowVector depth_energy_map(const RowVector& pred, const RowVector& ref, double c);

/// Ties produce 0, so the plain branch stays the teacher.
ReliabilityMask reliability_mask(const RowVector& e_plain, const RowVector& e_fused);

/// sum_k p_k (log p_k - log q_k) for logit columns p, q.
double kl_divergence(const Eigen::Ref<const Vector>& p_logits, const Eigen::Ref<const Vector>& q_logits);

/// Masked bidirectional KL. Where m = 0 the plain prediction teaches the fused one, where
/// m = 1 the reverse; each half is averaged over its own positions and dropped when empty.
double rfa_seg_loss(const Tensor& p_plain, const Tensor& p_fused, const ReliabilityMask& mask);

/// Depth counterpart of rfa_seg_loss with berHu residuals at threshold c.
double rfa_dep_loss(const RowVector& d_plain, const RowVector& d_fused, const ReliabilityMask& mask, double c);

double rfa_total(double seg_loss, double dep_loss, const EnergyConfig& cfg);

struct IdentityCheck {
  double lhs = 0.0;  // log max_y softmax(logits)_y
  double rhs = 0.0;  // -lse(logits) + max(logits)
  double diff = 0.0;
};

IdentityCheck energy_softmax_identity(const Eigen::Ref<const Vector>& logits);

namespace ad {

/// Teacher halves enter as constants, so gradients flow only into the student of each term.
Var rfa_seg_loss(Var p_plain, Var p_fused, const ReliabilityMask& mask);
Var rfa_dep_loss(Var d_plain, Var d_fused, const ReliabilityMask& mask, double c);

/// Same losses with the teacher values given explicitly, e.g. frozen at another point.
Var rfa_seg_loss(Var p_plain, Var p_fused, const ReliabilityMask& mask, const Tensor& plain_teacher,
                 const Tensor& fused_teacher);
Var rfa_dep_loss(Var d_plain, Var d_fused, const ReliabilityMask& mask, double c, const Tensor& plain_teacher,
                 const Tensor& fused_teacher);

}  // namespace ad
}  // namespace smart

#endif  // SMART_RFA_HPP
