#include "smart/objectives.hpp"
#include "smart/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace smart;

namespace {

LabelMap labels_of(std::initializer_list<int> v) {
  LabelMap y;
  y.labels.resize(static_cast<Index>(v.size()));
  Index i = 0;
  for (int l : v) y.labels(i++) = l;
  return y;
}

Tensor col(std::initializer_list<double> v) {
  Tensor t(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) t(i++, 0) = x;
  return t;
}

RowVector row(std::initializer_list<double> v) {
  RowVector t(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) t(i++) = x;
  return t;
}

/// Oracle: mean of -log softmax(p)_y computed directly from exponentials.
double ce_oracle(const Tensor& p, const LabelMap& y) {
  double total = 0;
  int n = 0;
  for (Index j = 0; j < p.cols(); ++j) {
    if (y.labels(j) < 0) continue;
    double z = 0;
    for (Index k = 0; k < p.rows(); ++k) z += std::exp(p(k, j));
    total -= std::log(std::exp(p(y.labels(j), j)) / z);
    ++n;
  }
  return n == 0 ? 0.0 : total / n;
}

}  // namespace

TEST_CASE("seg_nll examples") {
  CHECK(seg_nll(col({2, 0}), labels_of({0})) == doctest::Approx(0.126928).epsilon(1e-6));
  for (int label : {0, 1, 2}) CHECK(std::abs(seg_nll(Tensor::Constant(3, 1, 0.4), labels_of({label})) - std::log(3.0)) < 1e-15);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Tensor p = rng.normal_tensor(4, 6, 2.0);
    LabelMap y;
    y.labels.resize(6);
    for (Index j = 0; j < 6; ++j) y.labels(j) = static_cast<int>(rng.below(5)) - 1;  // includes ignore
    CHECK(std::abs(seg_nll(p, y) - ce_oracle(p, y)) < 1e-12);
    CHECK(seg_nll(p, y) >= -1e-12);
  }
  CHECK(seg_nll(col({1, 2}), labels_of({LabelMap::kIgnore})) == 0.0);
  CHECK_THROWS_AS(seg_nll(col({1, 2}), labels_of({2})), ContractViolation);
  CHECK_THROWS_AS(seg_nll(Tensor::Zero(2, 3), labels_of({0, 1})), ContractViolation);
}

TEST_CASE("berhu examples") {
  CHECK(berhu_loss(row({1, 2}), row({1, 2})) == 0.0);
  CHECK(berhu_threshold(row({5, 0})) == 1.0);
  CHECK(berhu_loss(row({5, 0}), row({0, 0})) == doctest::Approx(6.5).epsilon(1e-15));
  CHECK(berhu_loss(row({1, 1}), row({0, 0})) == doctest::Approx(2.6).epsilon(1e-14));
  CHECK_THROWS_AS(berhu_loss(row({1, 1}), row({0})), ContractViolation);
  for (double c : {0.3, 1.0, 7.0}) {
    const double eps = 1e-8;
    CHECK(std::abs(ad::berhu_value(c + eps, c) - ad::berhu_value(c - eps, c)) < 1e-6);
    CHECK(ad::berhu_value(-0.7 * c, c) == ad::berhu_value(0.7 * c, c));
  }
  CHECK(ad::berhu_value(0.1, 1.0) == 0.1);
  CHECK(ad::berhu_value(2.0, 1.0) == 2.5);
  CHECK(ad::berhu_value(3.0, 0.0) == 0.0);
}

TEST_CASE("composite losses") {
  CHECK(four_term_total(1, 2, 3, 4) == 10);
  CHECK(four_term_total(0, 0, 0, 0) == 0);
  CHECK(four_term_total(1.5, 1.5, 2.5, 2.5) == 2 * (1.5 + 2.5));
  CHECK(supervised_loss(1, 0, 0.001) == 1);
  CHECK(supervised_loss(0, 1000, 0.001) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(supervised_loss(0, 1000) == doctest::Approx(1.0).epsilon(1e-15));  // default alpha
  CHECK(overall_loss(2, 3, 0.5) == 3.5);
  CHECK(overall_loss(2, 3, 0.0) == 2);
  CHECK(overall_loss(2, 3) == 5);  // default beta
  const LossBundle b = LossBundle::compose(1.25, 7.0, 0.3, 0.001, 1.0);
  CHECK(b.consistent());
  CHECK(std::abs(b.overall - (1.25 + 0.007 + 0.3)) < 1e-12);
  LossBundle broken = b;
  broken.overall += 1e-6;
  CHECK_FALSE(broken.consistent());
}

TEST_CASE("pseudo_label examples") {
  const Tensor p = col({2, 0});
  CHECK(pseudo_label(p, 0.9).labels(0) == LabelMap::kIgnore);
  CHECK(pseudo_label(p, 0.8).labels(0) == 0);
  CHECK(pseudo_label(p, 0.8).source == LabelSource::Pseudo);
  Rng rng(2);
  const Tensor q = rng.normal_tensor(4, 50, 2.0);
  const LabelMap all = pseudo_label(q, 0.0);
  for (Index j = 0; j < 50; ++j) {
    Index arg;
    q.col(j).maxCoeff(&arg);
    CHECK(all.labels(j) == arg);
  }
  CHECK(pseudo_label(q, 1.0).labeled_count() == 0);
  CHECK_THROWS_AS(pseudo_label(q, 1.2), ContractViolation);
  // monotone: raising the threshold never labels an ignored position
  LabelMap prev = pseudo_label(q, 0.0);
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    const LabelMap cur = pseudo_label(q, t);
    for (Index j = 0; j < 50; ++j)
      if (prev.labels(j) == LabelMap::kIgnore) CHECK(cur.labels(j) == LabelMap::kIgnore);
    prev = cur;
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    LabelMap y;
    y.labels.resize(5);
    for (Index j = 0; j < 5; ++j) y.labels(j) = static_cast<int>(rng.below(4)) - 1;
    const auto nll = [&](ad::Graph&, ad::Var p) { return ad::seg_nll(p, y); };
    CHECK(ad::grad_check(nll, rng.normal_tensor(3, 5), 1e-6, 1e-8).max_relative_error < 1e-4);

    const RowVector gt = rng.normal_tensor(1, 6);
    const Tensor pred = rng.normal_tensor(1, 6);
    // the threshold is held constant under differentiation, so the oracle freezes it too
    const double c = berhu_threshold(pred.row(0) - gt);
    const auto frozen = [&](const Tensor& x) {
      double s = 0;
      for (Index j = 0; j < 6; ++j) s += ad::berhu_value(x(0, j) - gt(j), c);
      return s / 6;
    };
    const auto analytic = [&](const Tensor& x) {
      ad::Graph g;
      const ad::Var v = g.leaf(x);
      return g.backward(ad::berhu_loss(v, gt)).of(v);
    };
    CHECK(ad::grad_check(frozen, analytic, pred, 1e-6, 1e-8).max_relative_error < 1e-4);
    ad::Graph g;
    CHECK(std::abs(ad::berhu_loss(g.leaf(pred), gt).scalar() - berhu_loss(pred.row(0), gt)) < 1e-15);
  }
}
