#include "smart/eb2f.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace smart;

namespace {

/// Independent oracle: energy from scratch in long double, no max shift.
double energy_oracle(const Tensor& xi, const Tensor& nu) {
  long double sq = 0, s = 0;
  for (Index i = 0; i < xi.rows(); ++i) sq += static_cast<long double>(xi(i, 0)) * xi(i, 0);
  for (Index j = 0; j < nu.cols(); ++j) {
    long double dot = 0;
    for (Index i = 0; i < xi.rows(); ++i) dot += static_cast<long double>(nu(i, j)) * xi(i, 0);
    s += std::exp(dot);
  }
  return static_cast<double>(0.5L * sq - std::log(s));
}

/// Independent oracle for one update step of one column.
Vector update_oracle(const Vector& xi, const Tensor& nu, double gamma) {
  Vector w(nu.cols());
  for (Index j = 0; j < nu.cols(); ++j) w(j) = std::exp(nu.col(j).dot(xi));
  w /= w.sum();
  return (1.0 - gamma) * xi + gamma * nu * w;
}

}  // namespace

TEST_CASE("hopfield_energy examples") {
  CHECK(std::abs(hopfield_energy(Vector::Zero(3), Tensor::Random(3, 2)) + std::log(2.0)) < 1e-15);
  const Vector e1 = Vector::Unit(3, 0);
  CHECK(std::abs(hopfield_energy(e1, Tensor(e1)) + 0.5) < 1e-15);
  Rng rng(1);
  const Tensor nu = rng.normal_tensor(4, 6);
  const Vector xi = rng.normal_tensor(4, 1);
  std::vector<Index> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const Tensor permuted = nu(Eigen::all, perm);
  CHECK(std::abs(hopfield_energy(xi, permuted) - hopfield_energy(xi, nu)) < 1e-12);
  for (int i = 0; i < 100; ++i) {
    const Tensor n = rng.normal_tensor(5, 7);
    const Tensor x = rng.normal_tensor(5, 1);
    CHECK(std::abs(hopfield_energy(x, n) - energy_oracle(x, n)) < 1e-12);
  }
  CHECK_THROWS_AS(hopfield_energy(Vector::Zero(3), Tensor::Zero(2, 2)), ContractViolation);
}

TEST_CASE("energy functions are scalar-generic") {
  const Eigen::VectorXf xi = Eigen::VectorXf::Unit(2, 0);
  const Eigen::MatrixXf nu = Eigen::MatrixXf::Identity(2, 2);
  const float e = hopfield_energy(xi, nu);
  CHECK(e == doctest::Approx(0.5 - std::log(std::exp(1.0) + 1.0)).epsilon(1e-6));
  const Eigen::VectorXf g = hopfield_gradient(xi, nu);
  CHECK(g(0) == doctest::Approx(1.0 - 0.731059).epsilon(1e-5));
}

TEST_CASE("hopfield_gradient examples") {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Index d = 1 + static_cast<Index>(rng.below(8)), m = 1 + static_cast<Index>(rng.below(16));
    const Tensor nu = rng.normal_tensor(d, m);
    const auto r = ad::grad_check([&](const Tensor& x) { return energy_oracle(x, nu); },
                                  [&](const Tensor& x) { return Tensor(hopfield_gradient(x, nu)); },
                                  rng.normal_tensor(d, 1));
    CHECK(r.max_relative_error < 1e-6);
  }
  // symmetric pair cancels at the origin
  Tensor pm(2, 2);
  pm << 1.5, -1.5, -0.5, 0.5;
  CHECK(hopfield_gradient(Vector::Zero(2), pm).cwiseAbs().maxCoeff() == 0.0);
  // fixed point: a single stored pattern equal to xi
  const Vector v = rng.normal_tensor(3, 1);
  CHECK(hopfield_gradient(v, Tensor(v)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hopfield_update examples") {
  Rng rng(3);
  const PatternPair p{rng.normal_tensor(4, 5), rng.normal_tensor(4, 7)};
  CHECK(hopfield_update(p, 0.0, 3) == p.xi);
  CHECK(hopfield_update(p, 0.7, 0) == p.xi);

  const Tensor out = hopfield_update(PatternPair{Tensor(Vector::Unit(2, 0)), Tensor::Identity(2, 2)}, 1.0, 1);
  CHECK(out(0, 0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(out(1, 0) == doctest::Approx(0.268941).epsilon(1e-6));

  for (int i = 0; i < 100; ++i) {
    const double gamma = rng.uniform();
    const PatternPair q{rng.normal_tensor(3, 4), rng.normal_tensor(3, 6)};
    const Tensor a = hopfield_update(q, gamma, 2);
    const Tensor b = hopfield_update(q, gamma, 2, UpdateForm::GradientStep);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    for (Index c = 0; c < 4; ++c) {
      const Vector expect = update_oracle(update_oracle(q.xi.col(c), q.nu, gamma), q.nu, gamma);
      CHECK((a.col(c) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  CHECK_THROWS_AS(hopfield_update(p, 1.5, 1), ContractViolation);
  CHECK_THROWS_AS(hopfield_update(p, -0.1, 1), ContractViolation);
  CHECK_THROWS_AS(hopfield_update(p, 0.5, -1), ContractViolation);
}

TEST_CASE("energy descent") {
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const Index d = 1 + static_cast<Index>(rng.below(8)), m = 1 + static_cast<Index>(rng.below(16));
    const Tensor nu = rng.normal_tensor(d, m, 2.0);
    const Tensor xi = rng.normal_tensor(d, 1, 2.0);
    const Tensor next = hopfield_update(PatternPair{xi, nu}, 1.0, 1);
    CHECK(energy_oracle(next, nu) <= energy_oracle(xi, nu) + 1e-10);
  }
}

TEST_CASE("fuse examples") {
  Rng rng(5);
  const Tensor xi = rng.normal_tensor(3, 4);
  CHECK(fuse(xi, Tensor::Zero(3, 4), FusionParams::add(1.0, 1)) == xi);
  Tensor a(2, 1), b(2, 1);
  a << 1, 2;
  b << 3, 4;
  const Tensor s = fuse(a, b, FusionParams::add(1.0, 1));
  CHECK(s(0, 0) == 4);
  CHECK(s(1, 0) == 6);

  FusionParams g = FusionParams::gated(3, 1.0, 1, rng);
  g.w1.setZero();
  const Tensor nu = rng.normal_tensor(3, 4);
  CHECK(fuse(xi, nu, g) == nu);

  // gated oracle: nu + (W1 xi) * sigmoid(W2 xi), elementwise
  g.w1 = rng.normal_tensor(3, 3);
  const Tensor out = fuse(xi, nu, g);
  for (Index c = 0; c < 4; ++c)
    for (Index r = 0; r < 3; ++r) {
      const double z = g.w2.row(r).dot(xi.col(c));
      const double expect = nu(r, c) + g.w1.row(r).dot(xi.col(c)) / (1.0 + std::exp(-z));
      CHECK(std::abs(out(r, c) - expect) < 1e-14);
    }

  FusionParams missing;
  missing.scheme = FusionScheme::Gated;
  CHECK_THROWS_AS(fuse(xi, nu, missing), ContractViolation);
  CHECK_THROWS_AS(fuse(xi, Tensor::Zero(3, 5), FusionParams::add(1.0, 1)), ContractViolation);
}

TEST_CASE("eb2f_apply examples") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const Index d = 1 + static_cast<Index>(rng.below(8)), n = 1 + static_cast<Index>(rng.below(32));
    const Tensor query = rng.normal_tensor(d, n), other = rng.normal_tensor(d, n);
    const Tensor out = eb2f_apply(query, other, FusionParams::add(rng.uniform(), 1 + static_cast<int>(rng.below(3))));
    CHECK(out.rows() == d);
    CHECK(out.cols() == n);
    CHECK(eb2f_apply(query, other, FusionParams::add(0.6, 0)) == fuse(other, query, FusionParams::add(0.6, 0)));
  }

  // steps 1, gamma 1, Add: nu + nu softmax(nu^T xi) column by column, xi = other, nu = query
  const Tensor query = rng.normal_tensor(3, 5), other = rng.normal_tensor(3, 5);
  const Tensor out = eb2f_apply(query, other, FusionParams::add(1.0, 1));
  for (Index c = 0; c < 5; ++c) {
    const Vector expect = query.col(c) + update_oracle(other.col(c), query, 1.0);
    CHECK((out.col(c) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(eb2f_apply(query, Tensor::Zero(3, 4), FusionParams::add(1.0, 1)), ContractViolation);
}

TEST_CASE("gamma 0 equals plain fuse bit-exactly") {
  Rng rng(7);
  for (int steps : {0, 1, 2, 5}) {
    const Tensor query = rng.normal_tensor(4, 6), other = rng.normal_tensor(4, 6);
    FusionParams add = FusionParams::add(0.0, steps);
    CHECK(eb2f_apply(query, other, add) == fuse(other, query, add));
    FusionParams gated = FusionParams::gated(4, 0.0, steps, rng);
    gated.w1 = rng.normal_tensor(4, 4);
    CHECK(eb2f_apply(query, other, gated) == fuse(other, query, gated));

    ad::Graph g;
    ad::FusionVars fv;
    fv.gamma = 0.0;
    fv.steps = steps;
    const ad::Var out = ad::eb2f_apply(g.leaf(query), g.leaf(other), fv);
    CHECK(out.value() == fuse(other, query, add));
  }
}

TEST_CASE("graph eb2f matches the value-level implementation") {
  Rng rng(8);
  for (auto scheme : {FusionScheme::Add, FusionScheme::Gated}) {
    FusionParams p = scheme == FusionScheme::Add ? FusionParams::add(0.7, 2) : FusionParams::gated(3, 0.7, 2, rng);
    if (scheme == FusionScheme::Gated) p.w1 = rng.normal_tensor(3, 3);
    const Tensor query = rng.normal_tensor(3, 4), other = rng.normal_tensor(3, 4);
    ad::Graph g;
    ad::FusionVars fv{p.scheme, p.gamma, p.steps, std::nullopt, std::nullopt};
    if (scheme == FusionScheme::Gated) {
      fv.w1 = g.leaf(p.w1);
      fv.w2 = g.leaf(p.w2);
    }
    const ad::Var out = ad::eb2f_apply(g.leaf(query), g.leaf(other), fv);
    CHECK((out.value() - eb2f_apply(query, other, p)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("gradients through eb2f_apply match finite differences") {
  Rng rng(9);
  for (auto scheme : {FusionScheme::Add, FusionScheme::Gated}) {
    for (int steps : {0, 1, 2}) {
      const Index d = 3, n = 4;
      const Tensor other = rng.normal_tensor(d, n);
      const Tensor w1 = rng.normal_tensor(d, d), w2 = rng.normal_tensor(d, d);
      const Tensor weights = rng.normal_tensor(d, n);
      const auto f = [&](ad::Graph& g, ad::Var query) {
        ad::FusionVars fv{scheme, 0.8, steps, std::nullopt, std::nullopt};
        if (scheme == FusionScheme::Gated) {
          fv.w1 = g.constant(w1);
          fv.w2 = g.constant(w2);
        }
        return ad::sum(ad::hadamard(ad::eb2f_apply(query, g.constant(other), fv), g.constant(weights)));
      };
      CHECK(ad::grad_check(f, rng.normal_tensor(d, n), 1e-6, 1e-7).max_relative_error < 1e-4);
    }
  }
}
