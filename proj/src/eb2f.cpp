#include "smart/eb2f.hpp"

namespace smart {

void PatternPair::validate() const {
  require(xi.rows() == nu.rows(),
          "PatternPair: channel mismatch xi " + shape_string(xi) + " nu " + shape_string(nu));
  require(xi.cols() >= 1 && nu.cols() >= 1, "PatternPair: need at least one input and one stored pattern");
}

const char* scheme_name(FusionScheme s) { return s == FusionScheme::Add ? "add" : "gated"; }

FusionScheme parse_scheme(const std::string& s) {
  if (s == "add") return FusionScheme::Add;
  if (s == "gated") return FusionScheme::Gated;
  throw ContractViolation("unknown fusion scheme '" + s + "' (expected add|gated)");
}

FusionParams FusionParams::add(double gamma, int steps) {
  FusionParams p;
  p.scheme = FusionScheme::Add;
  p.gamma = gamma;
  p.steps = steps;
  return p;
}

FusionParams FusionParams::gated(Index channels, double gamma, int steps, Rng& rng) {
  FusionParams p;
  p.scheme = FusionScheme::Gated;
  p.gamma = gamma;
  p.steps = steps;
  p.w1 = Tensor::Zero(channels, channels);
  p.w2 = rng.uniform_tensor(channels, channels, -0.01, 0.01);
  return p;
}

void FusionParams::validate(Index channels) const {
  require(gamma >= 0.0 && gamma <= 1.0, "FusionParams: gamma must lie in [0, 1], got " + std::to_string(gamma));
  require(steps >= 0, "FusionParams: steps must be >= 0");
  if (scheme == FusionScheme::Gated) {
    require(w1.rows() == channels && w1.cols() == channels && w2.rows() == channels && w2.cols() == channels,
            "FusionParams: gated scheme needs w1, w2 of shape " + shape_string(channels, channels));
  } else {
    require(w1.size() == 0 && w2.size() == 0, "FusionParams: add scheme takes no weights");
  }
}

double hopfield_energy_total(const Tensor& xi, const Tensor& nu) {
  double total = 0.0;
  for (Index j = 0; j < xi.cols(); ++j) total += hopfield_energy(xi.col(j), nu);
  return total;
}

Tensor hopfield_update(const PatternPair& pair, double gamma, int steps, UpdateForm form) {
  pair.validate();
  require(gamma >= 0.0 && gamma <= 1.0, "hopfield_update: gamma must lie in [0, 1], got " + std::to_string(gamma));
  require(steps >= 0, "hopfield_update: steps must be >= 0");
  Tensor xi = pair.xi;
  if (gamma == 0.0) return xi;
  for (int s = 0; s < steps; ++s) {
    const Tensor retrieved = pair.nu * softmax_cols(Tensor(pair.nu.transpose() * xi));
    if (form == UpdateForm::Convex)
      xi = (1.0 - gamma) * xi + gamma * retrieved;
    else
      xi = xi - gamma * (xi - retrieved);
  }
  return xi;
}

Tensor fuse(const Tensor& xi_updated, const Tensor& nu, const FusionParams& params) {
  require(xi_updated.rows() == nu.rows() && xi_updated.cols() == nu.cols(),
          "fuse: shape mismatch " + shape_string(xi_updated) + " vs " + shape_string(nu));
  if (params.scheme == FusionScheme::Add) return xi_updated + nu;
  require(params.w1.size() > 0 && params.w2.size() > 0, "fuse: gated scheme requires w1 and w2");
  params.validate(nu.rows());
  const Tensor gate = (params.w2 * xi_updated).unaryExpr([](double z) { return logistic(z); });
  return nu + (params.w1 * xi_updated).cwiseProduct(gate);
}

Tensor eb2f_apply(const Tensor& query_task, const Tensor& other_task, const FusionParams& params) {
  require(query_task.rows() == other_task.rows() && query_task.cols() == other_task.cols(),
          "eb2f_apply: feature maps differ " + shape_string(query_task) + " vs " + shape_string(other_task));
  params.validate(query_task.rows());
  const Tensor updated = hopfield_update(PatternPair{other_task, query_task}, params.gamma, params.steps);
  return fuse(updated, query_task, params);
}

namespace ad {

Var hopfield_update(Var xi, Var nu, double gamma, int steps) {
  require(xi.rows() == nu.rows(), "hopfield_update: channel mismatch " + shape_string(xi.value()) + " vs " +
                                      shape_string(nu.value()));
  require(gamma >= 0.0 && gamma <= 1.0, "hopfield_update: gamma must lie in [0, 1]");
  require(steps >= 0, "hopfield_update: steps must be >= 0");
  if (gamma == 0.0) return xi;
  const Var nu_t = transpose(nu);
  for (int s = 0; s < steps; ++s) {
    const Var retrieved = matmul(nu, softmax_cols(matmul(nu_t, xi)));
    xi = gamma == 1.0 ? retrieved : scale(xi, 1.0 - gamma) + scale(retrieved, gamma);
  }
  return xi;
}

Var fuse(Var xi_updated, Var nu, const FusionVars& fusion) {
  if (fusion.scheme == FusionScheme::Add) return xi_updated + nu;
  require(fusion.w1.has_value() && fusion.w2.has_value(), "fuse: gated scheme requires w1 and w2");
  return nu + hadamard(matmul(*fusion.w1, xi_updated), sigmoid(matmul(*fusion.w2, xi_updated)));
}

Var eb2f_apply(Var query_task, Var other_task, const FusionVars& fusion) {
  require(query_task.rows() == other_task.rows() && query_task.cols() == other_task.cols(),
          "eb2f_apply: feature maps differ " + shape_string(query_task.value()) + " vs " +
              shape_string(other_task.value()));
  return fuse(hopfield_update(other_task, query_task, fusion.gamma, fusion.steps), query_task, fusion);
}

}  // namespace ad
}  // namespace smart
