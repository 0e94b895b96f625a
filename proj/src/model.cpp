#include "smart/model.hpp"

#include <cmath>

namespace smart {

namespace {

Dense make_dense(int out, int in, double bound, Rng& rng) {
  return Dense{rng.uniform_tensor(out, in, -bound, bound), Tensor::Zero(out, 1)};
}

double lecun_bound(int fan_in) { return std::sqrt(3.0 / fan_in); }

}  // namespace

ModelParams ModelParams::init(const ModelShape& shape, FusionScheme scheme, double gamma, int steps, Rng rng) {
  require(shape.in_channels >= 1 && shape.hidden >= 1 && shape.classes >= 2, "ModelParams: invalid shape");
  ModelParams m;
  m.shape = shape;
  const int c = shape.in_channels;
  const int h = shape.hidden;
  m.enc1 = make_dense(h, c, lecun_bound(c), rng);
  m.enc2 = make_dense(h, h, lecun_bound(h), rng);
  m.seg_net = ResidualBlock{make_dense(h, h, lecun_bound(h), rng), make_dense(h, h, 0.1 * lecun_bound(h), rng)};
  m.dep_net = ResidualBlock{make_dense(h, h, lecun_bound(h), rng), make_dense(h, h, 0.1 * lecun_bound(h), rng)};
  const double dec = std::sqrt(1.0 / h);
  m.seg_dec_plain = make_dense(shape.classes, h, dec, rng);
  m.seg_dec_fused = make_dense(shape.classes, h, dec, rng);
  m.dep_dec_plain = make_dense(1, h, dec, rng);
  m.dep_dec_fused = make_dense(1, h, dec, rng);
  if (scheme == FusionScheme::Gated) {
    m.fusion_seg = FusionParams::gated(h, gamma, steps, rng);
    m.fusion_dep = FusionParams::gated(h, gamma, steps, rng);
  } else {
    m.fusion_seg = FusionParams::add(gamma, steps);
    m.fusion_dep = FusionParams::add(gamma, steps);
  }
  m.fusion_seg.validate(h);
  m.fusion_dep.validate(h);
  return m;
}

namespace {

template <typename Model, typename F>
void visit(Model& m, F&& f) {
  auto dense = [&](const std::string& name, auto& d) {
    f(name + ".w", d.w);
    f(name + ".b", d.b);
  };
  dense("enc1", m.enc1);
  dense("enc2", m.enc2);
  dense("seg_net.inner", m.seg_net.inner);
  dense("seg_net.outer", m.seg_net.outer);
  dense("dep_net.inner", m.dep_net.inner);
  dense("dep_net.outer", m.dep_net.outer);
  dense("seg_dec_plain", m.seg_dec_plain);
  dense("seg_dec_fused", m.seg_dec_fused);
  dense("dep_dec_plain", m.dep_dec_plain);
  dense("dep_dec_fused", m.dep_dec_fused);
  if (m.fusion_seg.scheme == FusionScheme::Gated) {
    f(std::string("fusion_seg.w1"), m.fusion_seg.w1);
    f(std::string("fusion_seg.w2"), m.fusion_seg.w2);
  }
  if (m.fusion_dep.scheme == FusionScheme::Gated) {
    f(std::string("fusion_dep.w1"), m.fusion_dep.w1);
    f(std::string("fusion_dep.w2"), m.fusion_dep.w2);
  }
}

}  // namespace

void ModelParams::for_each_mutable(const std::function<void(const std::string&, Tensor&)>& f) { visit(*this, f); }

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& f) const {
  visit(*this, f);
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Tensor& t) { ok = ok && smart::all_finite(t); });
  return ok;
}

namespace ad {

ModelVars bind(Graph& g, const ModelParams& model) {
  std::vector<Var> leaves;
  model.for_each([&](const std::string&, const Tensor& t) { leaves.push_back(g.leaf(t)); });
  ModelVars v;
  std::size_t i = 0;
  auto next = [&]() { return ModelVars::DenseVars{leaves[i], leaves[i + 1]}; };
  for (auto* d : {&v.enc1, &v.enc2, &v.seg_in, &v.seg_out, &v.dep_in, &v.dep_out, &v.seg_plain, &v.seg_fused,
                  &v.dep_plain, &v.dep_fused}) {
    *d = next();
    i += 2;
  }
  auto fusion = [&](const FusionParams& p, FusionVars& fv) {
    fv.scheme = p.scheme;
    fv.gamma = p.gamma;
    fv.steps = p.steps;
    if (p.scheme == FusionScheme::Gated) {
      fv.w1 = leaves[i];
      fv.w2 = leaves[i + 1];
      i += 2;
    }
  };
  fusion(model.fusion_seg, v.fusion_seg);
  fusion(model.fusion_dep, v.fusion_dep);
  v.leaves = std::move(leaves);
  return v;
}

std::vector<Tensor> parameter_gradients(const Gradients& grads, const ModelVars& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.leaves.size());
  for (const Var& leaf : vars.leaves) out.push_back(grads.of(leaf));
  return out;
}

namespace {

Var apply(const ModelVars::DenseVars& d, Var x) { return add_col_broadcast(matmul(d.w, x), d.b); }

}  // namespace

Heads forward(const ModelParams& model, const ModelVars& vars, Var features, Mode mode, EvalCounters* counters) {
  require(features.rows() == model.shape.in_channels,
          "forward_pass: features have " + std::to_string(features.rows()) + " channels, encoder expects " +
              std::to_string(model.shape.in_channels));
  const Var h = relu(apply(vars.enc2, relu(apply(vars.enc1, features))));
  const Var f_seg = h + apply(vars.seg_out, relu(apply(vars.seg_in, h)));
  const Var f_dep = h + apply(vars.dep_out, relu(apply(vars.dep_in, h)));

  Heads heads;
  if (mode == Mode::Train) {
    heads.seg_plain = apply(vars.seg_plain, f_seg);
    heads.dep_plain = apply(vars.dep_plain, f_dep);
    if (counters) counters->plain_decoder_calls += 2;
  }
  Var fused_seg = f_seg;
  Var fused_dep = f_dep;
  if (model.fusion_enabled) {
    fused_seg = eb2f_apply(f_seg, f_dep, vars.fusion_seg);
    fused_dep = eb2f_apply(f_dep, f_seg, vars.fusion_dep);
  }
  heads.seg_fused = apply(vars.seg_fused, fused_seg);
  heads.dep_fused = apply(vars.dep_fused, fused_dep);
  if (counters) counters->fused_decoder_calls += 2;
  return heads;
}

}  // namespace ad

Predictions forward_pass(const ModelParams& model, const Tensor& features, Mode mode, EvalCounters* counters) {
  ad::Graph g;
  const ad::ModelVars vars = ad::bind(g, model);
  const ad::Heads heads = ad::forward(model, vars, g.constant(features), mode, counters);
  Predictions p;
  if (heads.seg_plain) p.seg_plain = heads.seg_plain->value();
  if (heads.dep_plain) p.dep_plain = heads.dep_plain->value();
  p.seg_fused = heads.seg_fused->value();
  p.dep_fused = heads.dep_fused->value();
  return p;
}

}  // namespace smart
