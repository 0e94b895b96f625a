#include "smart/train.hpp"

#include "smart/rfa.hpp"

#include <cmath>

namespace smart {

void TrainConfig::validate() const {
  require(t1 >= 0 && t2 >= 0, "TrainConfig: t1, t2 must be >= 0");
  require(lr > 0.0, "TrainConfig: lr must be positive");
  require(lr_phase2_mult > 0.0, "TrainConfig: lr_phase2_mult must be positive");
  require(alpha > 0.0, "TrainConfig: alpha must be positive");
  require(beta >= 0.0, "TrainConfig: beta must be non-negative");
  require(gamma >= 0.0 && gamma <= 1.0, "TrainConfig: gamma must lie in [0, 1]");
  require(steps >= 0, "TrainConfig: steps must be >= 0");
  require(pseudo_threshold >= 0.0 && pseudo_threshold <= 1.0, "TrainConfig: pseudo_threshold must lie in [0, 1]");
  require(hidden >= 1, "TrainConfig: hidden must be >= 1");
}

ModelParams make_model(const TrainConfig& cfg, int in_channels, int classes) {
  cfg.validate();
  ModelParams m = ModelParams::init(ModelShape{in_channels, cfg.hidden, classes}, cfg.scheme, cfg.gamma,
                                    cfg.steps, Rng(cfg.seed).derive(0x6d6f64656cULL));
  m.fusion_enabled = cfg.fusion_enabled;
  return m;
}

const LabelMap& training_labels(const Scene& scene) {
  if (scene.labels.evaluation_only)
    throw ContractViolation("training_labels: evaluation-only labels cannot enter a training loss");
  return scene.labels;
}

namespace {

void check_finite(double v, const char* term, int phase, int step) {
  if (!std::isfinite(v))
    throw TrainingDiverged(std::string("non-finite loss term '") + term + "' at phase " + std::to_string(phase) +
                           " step " + std::to_string(step));
}

void check_heads(const ad::Heads& h, const char* domain, int phase, int step) {
  const std::pair<const char*, const std::optional<ad::Var>*> heads[] = {
      {"seg_plain", &h.seg_plain}, {"seg_fused", &h.seg_fused}, {"dep_plain", &h.dep_plain}, {"dep_fused", &h.dep_fused}};
  for (const auto& [name, v] : heads)
    if (*v && !all_finite((*v)->value()))
      throw TrainingDiverged(std::string("non-finite prediction '") + name + "' on " + domain + " at phase " +
                             std::to_string(phase) + " step " + std::to_string(step));
}

struct DomainLosses {
  ad::Var seg_plain, seg_fused, dep_plain, dep_fused;
};

DomainLosses supervised_terms(const ad::Heads& heads, const LabelMap& labels, const RowVector& depth) {
  return DomainLosses{ad::seg_nll(*heads.seg_plain, labels), ad::seg_nll(*heads.seg_fused, labels),
                      ad::berhu_loss(*heads.dep_plain, depth), ad::berhu_loss(*heads.dep_fused, depth)};
}

/// Reliability loss of one domain; returns the loss and the segmentation mask count.
std::pair<ad::Var, Index> reliability_terms(const ad::Heads& heads, const RowVector& depth, double alpha,
                                            int phase, Domain domain, TrainStats& stats) {
  if (phase == 1)
    ++stats.phase1_rfa_calls;
  else if (domain == Domain::Source)
    ++stats.phase2_rfa_source_calls;
  else
    ++stats.phase2_rfa_target_calls;
  const Tensor& sp = heads.seg_plain->value();
  const Tensor& sf = heads.seg_fused->value();
  const ReliabilityMask seg_mask = reliability_mask(free_energy_map(sp), free_energy_map(sf));

  const RowVector dp = heads.dep_plain->value().row(0);
  const RowVector df = heads.dep_fused->value().row(0);
  // Each branch's depth energy is its own per-position berHu loss against the depth label.
  const RowVector e_plain = depth_energy_map(dp, depth, berhu_threshold(dp - depth));
  const RowVector e_fused = depth_energy_map(df, depth, berhu_threshold(df - depth));
  const ReliabilityMask dep_mask = reliability_mask(e_plain, e_fused);
  const double c = berhu_threshold(dp - df);

  const ad::Var seg = ad::rfa_seg_loss(*heads.seg_plain, *heads.seg_fused, seg_mask);
  const ad::Var dep = ad::rfa_dep_loss(*heads.dep_plain, *heads.dep_fused, dep_mask, c);
  return {seg + scale(dep, alpha), seg_mask.count};
}

}  // namespace

TrainResult train(ModelParams model, const std::vector<Scene>& source, const std::vector<Scene>& target,
                  const TrainConfig& cfg) {
  cfg.validate();
  require(!source.empty() && !target.empty(), "train: source and target sets must be nonempty");
  TrainResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.t1 + cfg.t2));

  const int total = cfg.t1 + cfg.t2;
  for (int t = 0; t < total; ++t) {
    const int phase = t < cfg.t1 ? 1 : 2;
    const Scene& src = source[static_cast<std::size_t>(t) % source.size()];
    const Scene& tgt = target[static_cast<std::size_t>(t) % target.size()];

    ad::Graph g;
    const ad::ModelVars vars = ad::bind(g, model);
    const ad::Heads hs = ad::forward(model, vars, g.constant(src.features), Mode::Train);
    const ad::Heads ht = ad::forward(model, vars, g.constant(tgt.features), Mode::Train);

    check_heads(hs, "source", phase, t);
    check_heads(ht, "target", phase, t);

    const LabelMap pseudo = pseudo_label(ht.seg_fused->value(), cfg.pseudo_threshold);
    const DomainLosses ls = supervised_terms(hs, training_labels(src), src.depth);
    const DomainLosses lt = supervised_terms(ht, pseudo, tgt.depth);

    const ad::Var seg_total = ls.seg_plain + ls.seg_fused + lt.seg_plain + lt.seg_fused;
    const ad::Var dep_total = ls.dep_plain + ls.dep_fused + lt.dep_plain + lt.dep_fused;
    ad::Var objective = seg_total + scale(dep_total, cfg.alpha);

    TraceRow row;
    row.phase = phase;
    row.step = t;
    row.seg_src_plain = ls.seg_plain.scalar();
    row.seg_src_fused = ls.seg_fused.scalar();
    row.seg_tgt_plain = lt.seg_plain.scalar();
    row.seg_tgt_fused = lt.seg_fused.scalar();
    row.dep_src_plain = ls.dep_plain.scalar();
    row.dep_src_fused = ls.dep_fused.scalar();
    row.dep_tgt_plain = lt.dep_plain.scalar();
    row.dep_tgt_fused = lt.dep_fused.scalar();
    row.pseudo_labeled = pseudo.labeled_count();

    double rfa_value = 0.0;
    if (phase == 2) {
      const auto [rfa_src, mask_src] = reliability_terms(hs, src.depth, cfg.alpha, phase, src.domain, result.stats);
      const auto [rfa_tgt, mask_tgt] = reliability_terms(ht, tgt.depth, cfg.alpha, phase, tgt.domain, result.stats);
      row.rfa_src = rfa_src.scalar();
      row.rfa_tgt = rfa_tgt.scalar();
      row.mask_src = mask_src;
      row.mask_tgt = mask_tgt;
      const ad::Var rfa = rfa_src + rfa_tgt;
      rfa_value = rfa.scalar();
      objective = objective + scale(rfa, cfg.beta);
    }

    const char* names[] = {"seg_src_plain", "seg_src_fused", "seg_tgt_plain", "seg_tgt_fused",
                           "dep_src_plain", "dep_src_fused", "dep_tgt_plain", "dep_tgt_fused",
                           "rfa_src",       "rfa_tgt"};
    const double values[] = {row.seg_src_plain, row.seg_src_fused, row.seg_tgt_plain, row.seg_tgt_fused,
                             row.dep_src_plain, row.dep_src_fused, row.dep_tgt_plain, row.dep_tgt_fused,
                             row.rfa_src,       row.rfa_tgt};
    for (std::size_t i = 0; i < std::size(values); ++i) check_finite(values[i], names[i], phase, t);

    row.bundle = LossBundle::compose(
        four_term_total(row.seg_src_plain, row.seg_src_fused, row.seg_tgt_plain, row.seg_tgt_fused),
        four_term_total(row.dep_src_plain, row.dep_src_fused, row.dep_tgt_plain, row.dep_tgt_fused), rfa_value,
        cfg.alpha, phase == 2 ? cfg.beta : 0.0);
    check_finite(row.bundle.overall, "overall", phase, t);

    const ad::Gradients grads = g.backward(objective);
    const std::vector<Tensor> dparams = ad::parameter_gradients(grads, vars);
    const double lr = phase == 1 ? cfg.lr : cfg.lr * cfg.lr_phase2_mult;
    std::size_t i = 0;
    model.for_each_mutable([&](const std::string& name, Tensor& p) {
      const Tensor& d = dparams[i++];
      if (!all_finite(d)) throw TrainingDiverged("non-finite gradient for '" + name + "' at step " + std::to_string(t));
      p -= lr * d;
    });
    result.trace.push_back(row);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace smart
