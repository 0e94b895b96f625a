#ifndef SMART_AUTODIFF_HPP
#define SMART_AUTODIFF_HPP

#include "smart/numeric.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace smart::ad {

enum class Op {
  Leaf,
  Constant,
  Add,
  Sub,
  Hadamard,
  Scale,
  MatMul,
  Transpose,
  AddColBroadcast,  // a (r x n) + b (r x 1) added to every column
  AddRowBroadcast,  // a (r x n) + b (1 x n) added to every row
  Exp,
  Log,
  Sigmoid,
  Relu,
  Abs,
  SoftmaxCols,
  LseCols,
  Sum,
  StopGradient,
  Berhu,
};

const char* op_name(Op op);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
};

class Gradients {
 public:
  Gradients(std::vector<Tensor> grads, std::vector<Index> rows, std::vector<Index> cols,
            std::size_t visited)
      : grads_(std::move(grads)), rows_(std::move(rows)), cols_(std::move(cols)), visited_(visited) {}

  /// d(output)/d(v); zeros when v does not reach the output.
  Tensor of(Var v) const;
  /// Number of nodes whose adjoint was propagated.
  std::size_t nodes_visited() const { return visited_; }

 private:
  std::vector<Tensor> grads_;
  std::vector<Index> rows_;
  std::vector<Index> cols_;
  std::size_t visited_;
};

/// Tape of tensor operations. Nodes are appended in evaluation order, so every
/// input id precedes its consumer and the reverse sweep is a single pass.
/// Single writer: one graph is mutated by at most one thread.
class Graph {
 public:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Tensor value;
    double param = 0.0;
    bool requires_grad = false;
  };

  Var leaf(Tensor value);
  Var constant(Tensor value);

  Var push(Op op, Tensor value, int a, int b = -1, double param = 0.0);

  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  Gradients backward(Var output) const;

 private:
  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(double s, Var a);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add_col_broadcast(Var a, Var column);
Var add_row_broadcast(Var a, Var row);
Var exp(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var abs(Var a);
Var softmax_cols(Var a);
Var lse_cols(Var a);
Var sum(Var a);
Var mean(Var a);
Var stop_gradient(Var a);
/// Elementwise reverse Huber with a fixed threshold c (not differentiated).
Var berhu(Var a, double c);
/// Columns of a minus their lse: log-probabilities per column.
Var log_softmax_cols(Var a);

/// Scalar berHu: |e| for |e| <= c, (e^2 + c^2) / (2c) otherwise; 0 when c == 0.
double berhu_value(double e, double c);

using ScalarFn = std::function<double(const Tensor&)>;
using GradientFn = std::function<Tensor(const Tensor&)>;
using GraphFn = std::function<Var(Graph&, Var)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  Tensor analytic;
  Tensor numeric;
};

/// Central finite differences against an analytic gradient. The relative error
/// per coordinate is |a - fd| / max(floor, |a| + |fd|).
GradCheckResult grad_check(const ScalarFn& f, const GradientFn& gradient, const Tensor& point,
                           double h = 1e-5, double floor = 1e-12);

/// Same check with the analytic gradient taken from a reverse sweep of the graph `f` builds.
GradCheckResult grad_check(const GraphFn& f, const Tensor& point, double h = 1e-5,
                           double floor = 1e-12);

}  // namespace smart::ad

#endif  // SMART_AUTODIFF_HPP
