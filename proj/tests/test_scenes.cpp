#include "smart/scenes.hpp"
#include "smart/train.hpp"

#include <doctest.h>

#include <set>

using namespace smart;

TEST_CASE("gen_scene is deterministic and well formed") {
  const SceneDims dims{16, 16, 4, 8};
  const Scene a = gen_scene(Rng(5), dims), b = gen_scene(Rng(5), dims), c = gen_scene(Rng(6), dims);
  CHECK(a.features == b.features);
  CHECK(a.labels.labels == b.labels.labels);
  CHECK(a.depth == b.depth);
  CHECK(a.features != c.features);
  CHECK(a.features.rows() == 8);
  CHECK(a.features.cols() == 256);
  CHECK(a.domain == Domain::Source);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Scene t = gen_scene(Rng(s), SceneDims{3, 3, 4, 2});
    const std::set<int> present(t.labels.labels.data(), t.labels.labels.data() + t.labels.size());
    CHECK(present.size() >= 2);
    CHECK(*present.begin() >= 0);
    CHECK(*present.rbegin() < 4);
    CHECK((t.depth.array() > 0).all());
  }
  CHECK_THROWS_AS(gen_scene(Rng(1), SceneDims{2, 2, 5, 3}), ContractViolation);
  CHECK_THROWS_AS(gen_scene(Rng(1), SceneDims{4, 4, 1, 3}), ContractViolation);
}

TEST_CASE("class index and mean depth are positively correlated") {
  const SceneDims dims{16, 16, 4, 8};
  std::vector<double> sum(4, 0.0), count(4, 0.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Scene t = gen_scene(Rng(1000 + s), dims);
    for (Index i = 0; i < t.labels.size(); ++i) {
      sum[static_cast<std::size_t>(t.labels.labels(i))] += t.depth(i);
      count[static_cast<std::size_t>(t.labels.labels(i))] += 1.0;
    }
  }
  std::vector<double> mean(4);
  for (std::size_t k = 0; k < 4; ++k) {
    REQUIRE(count[k] > 0);
    mean[k] = sum[k] / count[k];
  }
  // Pearson correlation between class index and per-class mean depth
  double mk = 1.5, md = (mean[0] + mean[1] + mean[2] + mean[3]) / 4, cov = 0, vk = 0, vd = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    cov += (k - mk) * (mean[k] - md);
    vk += (k - mk) * (k - mk);
    vd += (mean[k] - md) * (mean[k] - md);
  }
  CHECK(cov / std::sqrt(vk * vd) > 0.0);
  for (std::size_t k = 1; k < 4; ++k) CHECK(mean[k] > mean[k - 1]);
}

TEST_CASE("make_domain_pair") {
  const SceneDims dims{8, 8, 3, 4};
  const DomainPair p = make_domain_pair(Rng(9), ShiftSpec::from_scalars(4, 0.5, 1.3, 0.4, 0.2), 5, dims);
  const DomainPair q = make_domain_pair(Rng(9), ShiftSpec::from_scalars(4, 0.5, 1.3, 0.4, 0.2), 5, dims);
  REQUIRE(p.source.size() == 5);
  REQUIRE(p.target.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(p.source[i].domain == Domain::Source);
    CHECK(p.target[i].domain == Domain::Target);
    CHECK_FALSE(p.source[i].labels.evaluation_only);
    CHECK(p.target[i].labels.evaluation_only);
    CHECK(p.target[i].features == q.target[i].features);
    CHECK(p.target[i].depth != p.target[i].reference_depth);
    CHECK_THROWS_AS((void)training_labels(p.target[i]), ContractViolation);
    CHECK(&training_labels(p.source[i]) == &p.source[i].labels);
  }
  CHECK_THROWS_AS(make_domain_pair(Rng(1), ShiftSpec::none(4), 0, dims), ContractViolation);
  CHECK_THROWS_AS(make_domain_pair(Rng(1), ShiftSpec::from_scalars(4, 0, -1, 0, 0), 1, dims), ContractViolation);
}

TEST_CASE("null shift leaves features and depth unchanged") {
  const SceneDims dims{8, 8, 3, 4};
  const Scene s = gen_scene(Rng(3), dims);
  const Scene t = shift_scene(s, ShiftSpec::none(4), Rng(4));
  CHECK(t.features == s.features);
  CHECK(t.depth == s.reference_depth);
  const Scene u = shift_scene(s, ShiftSpec::from_scalars(4, 0.7, 2.0, 0.5, 0.0), Rng(4));
  CHECK(u.depth == s.reference_depth);
  CHECK(u.labels.labels == s.labels.labels);

  // shift and scale act per channel: (-1)^c * shift, constant scale
  const Scene v = shift_scene(s, ShiftSpec::from_scalars(4, 0.7, 2.0, 0.0, 0.0), Rng(4));
  for (Index c = 0; c < 4; ++c) {
    const double off = c % 2 == 0 ? 0.7 : -0.7;
    CHECK((v.features.row(c).array() - (2.0 * s.features.row(c).array() + off)).abs().maxCoeff() == 0.0);
  }
}
