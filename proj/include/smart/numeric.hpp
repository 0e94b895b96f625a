#ifndef SMART_NUMERIC_HPP
#define SMART_NUMERIC_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace smart {

/// Dense double-precision matrix. Feature maps are stored channels x positions,
/// so each column is one spatial position.
using Tensor = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Raised when a caller breaks an operation's precondition (shape, range, emptiness).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

inline std::string shape_string(Index rows, Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

/// log(sum(exp(x))) over a vector expression. The maximum is subtracted before
/// exponentiation and the sum runs left to right.
template <typename Derived>
typename Derived::Scalar lse(const Eigen::MatrixBase<Derived>& x) {
  using std::exp;
  using std::log;
  using Scalar = typename Derived::Scalar;
  require(x.size() > 0, "lse: empty input");
  const auto v = x.derived().eval();
  require(v.rows() == 1 || v.cols() == 1, "lse: expected a vector, got " + shape_string(v));
  const Scalar m = v.maxCoeff();
  Scalar acc(0);
  for (Index i = 0; i < v.size(); ++i) acc += exp(v(i) - m);
  return m + log(acc);
}

/// Probability vector exp(x - lse(x)), same orientation as the input.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& x) {
  using std::exp;
  using Scalar = typename Derived::Scalar;
  require(x.size() > 0, "softmax: empty input");
  auto v = x.derived().eval();
  require(v.rows() == 1 || v.cols() == 1, "softmax: expected a vector, got " + shape_string(v));
  const Scalar m = v.maxCoeff();
  Scalar acc(0);
  for (Index i = 0; i < v.size(); ++i) {
    v(i) = exp(v(i) - m);
    acc += v(i);
  }
  v /= acc;
  return v;
}

/// Column-wise lse: one value per column (per position).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> lse_cols(const Eigen::MatrixBase<Derived>& x) {
  require(x.rows() > 0 && x.cols() > 0, "lse_cols: empty input " + shape_string(x));
  Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> out(x.cols());
  for (Index j = 0; j < x.cols(); ++j) out(j) = lse(x.col(j));
  return out;
}

/// Column-wise softmax: each column becomes a probability vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_cols(
    const Eigen::MatrixBase<Derived>& x) {
  require(x.rows() > 0 && x.cols() > 0, "softmax_cols: empty input " + shape_string(x));
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) out.col(j) = softmax(x.col(j));
  return out;
}

template <typename Scalar>
Scalar logistic(Scalar z) {
  using std::exp;
  // Branches keep exp() from overflowing for large |z|.
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// Plain left-to-right sum of all coefficients (column-major order).
template <typename Derived>
typename Derived::Scalar seq_sum(const Eigen::DenseBase<Derived>& m) {
  const auto v = m.derived().eval();
  typename Derived::Scalar acc(0);
  for (Index i = 0; i < v.size(); ++i) acc += v.data()[i];
  return acc;
}

/// Matrix product with a shape check that names both operands.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(),
          "matmul: shape mismatch " + shape_string(a) + " x " + shape_string(b));
  return a * b;
}

}  // namespace smart

#endif  // SMART_NUMERIC_HPP
