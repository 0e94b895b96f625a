#ifndef SMART_EB2F_HPP
#define SMART_EB2F_HPP

#include "smart/autodiff.hpp"
#include "smart/numeric.hpp"
#include "smart/rng.hpp"

#include <optional>

namespace smart {

/// Input patterns xi (d x N, one column per position) and stored patterns nu (d x M).
struct PatternPair {
  Tensor xi;
  Tensor nu;

  void validate() const;
};

enum class FusionScheme { Add, Gated };

const char* scheme_name(FusionScheme s);
FusionScheme parse_scheme(const std::string& s);

/// Settings of one energy-based fusion direction.
struct FusionParams {
  FusionScheme scheme = FusionScheme::Add;
  double gamma = 1.0;
  int steps = 1;
  Tensor w1;  // d x d, Gated only
  Tensor w2;  // d x d, Gated only

  static FusionParams add(double gamma, int steps);
  /// W1 starts at zero so the gate passes nu through unchanged; W2 ~ U(-0.01, 0.01).
  static FusionParams gated(Index channels, double gamma, int steps, Rng& rng);

  void validate(Index channels) const;
};

/// E(xi; nu) = 0.5 xi^T xi - lse(nu^T xi) for a single input column.
template <typename DXi, typename DNu>
typename DXi::Scalar hopfield_energy(const Eigen::MatrixBase<DXi>& xi, const Eigen::MatrixBase<DNu>& nu) {
  require(xi.cols() == 1, "hopfield_energy: xi must be a column, got " + shape_string(xi));
  require(xi.rows() == nu.rows(),
          "hopfield_energy: dimension mismatch xi " + shape_string(xi) + " nu " + shape_string(nu));
  require(nu.cols() >= 1, "hopfield_energy: no stored patterns");
  using Scalar = typename DXi::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores = nu.transpose() * xi;
  return Scalar(0.5) * xi.squaredNorm() - lse(scores);
}

/// grad_xi E = xi - nu softmax(nu^T xi).
template <typename DXi, typename DNu>
Eigen::Matrix<typename DXi::Scalar, Eigen::Dynamic, 1> hopfield_gradient(const Eigen::MatrixBase<DXi>& xi,
                                                                         const Eigen::MatrixBase<DNu>& nu) {
  require(xi.cols() == 1, "hopfield_gradient: xi must be a column, got " + shape_string(xi));
  require(xi.rows() == nu.rows(),
          "hopfield_gradient: dimension mismatch xi " + shape_string(xi) + " nu " + shape_string(nu));
  require(nu.cols() >= 1, "hopfield_gradient: no stored patterns");
  using Scalar = typename DXi::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores = nu.transpose() * xi;
  return xi - nu * softmax(scores);
}

/// Energy of every column of `xi` against the same stored set, summed.
double hopfield_energy_total(const Tensor& xi, const Tensor& nu);

/// Which algebraic form of the damped update to evaluate.
enum class UpdateForm { Convex, GradientStep };

/// xi <- (1 - gamma) xi + gamma nu softmax(nu^T xi), every column independently, `steps` times.
/// gamma == 0 or steps == 0 returns xi unchanged.
Tensor hopfield_update(const PatternPair& pair, double gamma, int steps,
                       UpdateForm form = UpdateForm::Convex);

/// Add: xi + nu. Gated: nu + (W1 xi) .* sigmoid(W2 xi), W acting per position on channels.
Tensor fuse(const Tensor& xi_updated, const Tensor& nu, const FusionParams& params);

/// Fused features for `query_task`: the other task's features are the input patterns being
/// updated, the query task's features are the stored patterns.
Tensor eb2f_apply(const Tensor& query_task, const Tensor& other_task, const FusionParams& params);

namespace ad {

/// Graph handles for the trainable parts of FusionParams.
struct FusionVars {
  FusionScheme scheme = FusionScheme::Add;
  double gamma = 1.0;
  int steps = 1;
  std::optional<Var> w1;
  std::optional<Var> w2;
};

Var hopfield_update(Var xi, Var nu, double gamma, int steps);
Var fuse(Var xi_updated, Var nu, const FusionVars& fusion);
Var eb2f_apply(Var query_task, Var other_task, const FusionVars& fusion);

}  // namespace ad
}  // namespace smart

#endif  // SMART_EB2F_HPP
