#include "smart/autodiff.hpp"

#include <cmath>

namespace smart::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Hadamard: return "hadamard";
    case Op::Scale: return "scale";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::AddColBroadcast: return "add_col_broadcast";
    case Op::AddRowBroadcast: return "add_row_broadcast";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::Abs: return "abs";
    case Op::SoftmaxCols: return "softmax_cols";
    case Op::LseCols: return "lse_cols";
    case Op::Sum: return "sum";
    case Op::StopGradient: return "stop_gradient";
    case Op::Berhu: return "berhu";
  }
  return "?";
}

const Tensor& Var::value() const {
  require(graph != nullptr, "Var: detached handle");
  return graph->node(id).value;
}

double Var::scalar() const {
  const Tensor& v = value();
  require(v.size() == 1, "Var::scalar: value has shape " + shape_string(v));
  return v(0, 0);
}

Tensor Gradients::of(Var v) const {
  const auto i = static_cast<std::size_t>(v.id);
  require(i < grads_.size(), "Gradients::of: node not in graph");
  if (grads_[i].size() == 0) return Tensor::Zero(rows_[i], cols_[i]);
  return grads_[i];
}

Var Graph::leaf(Tensor value) {
  nodes_.push_back(Node{Op::Leaf, -1, -1, std::move(value), 0.0, true});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{Op::Constant, -1, -1, std::move(value), 0.0, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::push(Op op, Tensor value, int a, int b, double param) {
  bool rg = false;
  if (op != Op::StopGradient) {
    if (a >= 0) rg = rg || nodes_[static_cast<std::size_t>(a)].requires_grad;
    if (b >= 0) rg = rg || nodes_[static_cast<std::size_t>(b)].requires_grad;
  }
  nodes_.push_back(Node{op, a, b, std::move(value), param, rg});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

namespace {

void accumulate(std::vector<Tensor>& grads, const std::vector<Graph::Node>& nodes, int id,
                const Tensor& delta) {
  if (id < 0) return;
  const auto i = static_cast<std::size_t>(id);
  if (!nodes[i].requires_grad) return;
  if (grads[i].size() == 0)
    grads[i] = delta;
  else
    grads[i] += delta;
}

Graph& same_graph(Var a, Var b) {
  require(a.graph != nullptr && a.graph == b.graph, "autodiff: operands belong to different graphs");
  return *a.graph;
}

}  // namespace

Gradients Graph::backward(Var output) const {
  require(output.graph == this, "backward: output is not a node of this graph");
  const Tensor& out = node(output.id).value;
  require(out.size() == 1, "backward: output must be scalar, got " + shape_string(out));

  std::vector<Tensor> grads(nodes_.size());
  std::vector<Index> rows(nodes_.size());
  std::vector<Index> cols(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    rows[i] = nodes_[i].value.rows();
    cols[i] = nodes_[i].value.cols();
  }
  std::size_t visited = 0;
  if (!nodes_[static_cast<std::size_t>(output.id)].requires_grad)
    return Gradients(std::move(grads), std::move(rows), std::move(cols), visited);
  grads[static_cast<std::size_t>(output.id)] = Tensor::Ones(1, 1);

  for (int id = output.id; id >= 0; --id) {
    const auto i = static_cast<std::size_t>(id);
    if (grads[i].size() == 0) continue;
    ++visited;
    const Node& n = nodes_[i];
    const Tensor& g = grads[i];
    const Tensor& y = n.value;
    auto in = [&](int k) -> const Tensor& { return nodes_[static_cast<std::size_t>(k)].value; };
    auto push_a = [&](const Tensor& d) { accumulate(grads, nodes_, n.a, d); };
    auto push_b = [&](const Tensor& d) { accumulate(grads, nodes_, n.b, d); };

    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
      case Op::StopGradient:
        break;
      case Op::Add:
        push_a(g);
        push_b(g);
        break;
      case Op::Sub:
        push_a(g);
        push_b(-g);
        break;
      case Op::Hadamard:
        push_a(g.cwiseProduct(in(n.b)));
        push_b(g.cwiseProduct(in(n.a)));
        break;
      case Op::Scale:
        push_a(n.param * g);
        break;
      case Op::MatMul:
        push_a(g * in(n.b).transpose());
        push_b(in(n.a).transpose() * g);
        break;
      case Op::Transpose:
        push_a(g.transpose());
        break;
      case Op::AddColBroadcast:
        push_a(g);
        push_b(g.rowwise().sum());
        break;
      case Op::AddRowBroadcast:
        push_a(g);
        push_b(g.colwise().sum());
        break;
      case Op::Exp:
        push_a(g.cwiseProduct(y));
        break;
      case Op::Log:
        push_a(g.cwiseQuotient(in(n.a)));
        break;
      case Op::Sigmoid:
        push_a((g.array() * y.array() * (1.0 - y.array())).matrix());
        break;
      case Op::Relu:
        push_a((in(n.a).array() > 0.0).select(g.array(), 0.0).matrix());
        break;
      case Op::Abs:
        push_a((g.array() * in(n.a).array().sign()).matrix());
        break;
      case Op::SoftmaxCols: {
        // dL/dx_j = y_j * (g_j - <g, y>) per column
        const RowVector dots = g.cwiseProduct(y).colwise().sum();
        Tensor d = g;
        d.rowwise() -= dots;
        push_a(d.cwiseProduct(y));
        break;
      }
      case Op::LseCols: {
        Tensor d = smart::softmax_cols(in(n.a));
        for (Index j = 0; j < d.cols(); ++j) d.col(j) *= g(0, j);
        push_a(d);
        break;
      }
      case Op::Sum:
        push_a(Tensor::Constant(in(n.a).rows(), in(n.a).cols(), g(0, 0)));
        break;
      case Op::Berhu: {
        const double c = n.param;
        const Tensor& x = in(n.a);
        Tensor d(x.rows(), x.cols());
        for (Index r = 0; r < x.rows(); ++r)
          for (Index k = 0; k < x.cols(); ++k) {
            const double e = x(r, k);
            double slope = 0.0;
            if (c > 0.0) slope = std::abs(e) <= c ? (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) : e / c;
            d(r, k) = g(r, k) * slope;
          }
        push_a(d);
        break;
      }
    }
  }
  return Gradients(std::move(grads), std::move(rows), std::move(cols), visited);
}

Var operator+(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "add: shape mismatch " + shape_string(a.value()) + " + " + shape_string(b.value()));
  return g.push(Op::Add, a.value() + b.value(), a.id, b.id);
}

Var operator-(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "sub: shape mismatch " + shape_string(a.value()) + " - " + shape_string(b.value()));
  return g.push(Op::Sub, a.value() - b.value(), a.id, b.id);
}

Var operator*(double s, Var a) { return scale(a, s); }

Var hadamard(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "hadamard: shape mismatch " + shape_string(a.value()) + " .* " + shape_string(b.value()));
  return g.push(Op::Hadamard, a.value().cwiseProduct(b.value()), a.id, b.id);
}

Var scale(Var a, double s) { return a.graph->push(Op::Scale, s * a.value(), a.id, -1, s); }

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  return g.push(Op::MatMul, smart::matmul(a.value(), b.value()), a.id, b.id);
}

Var transpose(Var a) { return a.graph->push(Op::Transpose, a.value().transpose(), a.id); }

Var add_col_broadcast(Var a, Var column) {
  Graph& g = same_graph(a, column);
  require(column.cols() == 1 && column.rows() == a.rows(),
          "add_col_broadcast: " + shape_string(a.value()) + " with " + shape_string(column.value()));
  Tensor v = a.value();
  v.colwise() += column.value().col(0);
  return g.push(Op::AddColBroadcast, std::move(v), a.id, column.id);
}

Var add_row_broadcast(Var a, Var row) {
  Graph& g = same_graph(a, row);
  require(row.rows() == 1 && row.cols() == a.cols(),
          "add_row_broadcast: " + shape_string(a.value()) + " with " + shape_string(row.value()));
  Tensor v = a.value();
  v.rowwise() += row.value().row(0);
  return g.push(Op::AddRowBroadcast, std::move(v), a.id, row.id);
}

Var exp(Var a) { return a.graph->push(Op::Exp, a.value().array().exp().matrix(), a.id); }

Var log(Var a) {
  require((a.value().array() > 0.0).all(), "log: non-positive input");
  return a.graph->push(Op::Log, a.value().array().log().matrix(), a.id);
}

Var sigmoid(Var a) {
  return a.graph->push(Op::Sigmoid, a.value().unaryExpr([](double z) { return logistic(z); }), a.id);
}

Var relu(Var a) { return a.graph->push(Op::Relu, a.value().cwiseMax(0.0), a.id); }

Var abs(Var a) { return a.graph->push(Op::Abs, a.value().cwiseAbs(), a.id); }

Var softmax_cols(Var a) { return a.graph->push(Op::SoftmaxCols, smart::softmax_cols(a.value()), a.id); }

Var lse_cols(Var a) { return a.graph->push(Op::LseCols, Tensor(smart::lse_cols(a.value())), a.id); }

Var sum(Var a) {
  // Sequential left-to-right accumulation in storage order.
  const Tensor& v = a.value();
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += v.data()[i];
  return a.graph->push(Op::Sum, Tensor::Constant(1, 1, acc), a.id);
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var stop_gradient(Var a) { return a.graph->push(Op::StopGradient, a.value(), a.id); }

double berhu_value(double e, double c) {
  if (c <= 0.0) return 0.0;
  const double m = std::abs(e);
  return m <= c ? m : (e * e + c * c) / (2.0 * c);
}

Var berhu(Var a, double c) {
  require(c >= 0.0, "berhu: threshold must be non-negative");
  return a.graph->push(Op::Berhu, a.value().unaryExpr([c](double e) { return berhu_value(e, c); }),
                       a.id, -1, c);
}

Var log_softmax_cols(Var a) { return add_row_broadcast(a, scale(lse_cols(a), -1.0)); }

GradCheckResult grad_check(const ScalarFn& f, const GradientFn& gradient, const Tensor& point,
                           double h, double floor) {
  GradCheckResult r;
  r.analytic = gradient(point);
  require(r.analytic.rows() == point.rows() && r.analytic.cols() == point.cols(),
          "grad_check: gradient shape " + shape_string(r.analytic) + " differs from point " +
              shape_string(point));
  r.numeric = Tensor::Zero(point.rows(), point.cols());
  Tensor x = point;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double fp = f(x);
    x.data()[i] = orig - h;
    const double fm = f(x);
    x.data()[i] = orig;
    r.numeric.data()[i] = (fp - fm) / (2.0 * h);
  }
  for (Index i = 0; i < x.size(); ++i) {
    const double a = r.analytic.data()[i];
    const double n = r.numeric.data()[i];
    const double abs_err = std::abs(a - n);
    r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
    r.max_relative_error =
        std::max(r.max_relative_error, abs_err / std::max(floor, std::abs(a) + std::abs(n)));
  }
  return r;
}

GradCheckResult grad_check(const GraphFn& f, const Tensor& point, double h, double floor) {
  auto value = [&](const Tensor& x) {
    Graph g;
    return f(g, g.leaf(x)).scalar();
  };
  auto gradient = [&](const Tensor& x) {
    Graph g;
    Var in = g.leaf(x);
    Var out = f(g, in);
    return g.backward(out).of(in);
  };
  return grad_check(value, gradient, point, h, floor);
}

}  // namespace smart::ad
