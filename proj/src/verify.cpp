#include "smart/verify.hpp"

#include "smart/eb2f.hpp"
#include "smart/objectives.hpp"
#include "smart/rfa.hpp"
#include "smart/scenes.hpp"
#include "smart/tensor_io.hpp"
#include "smart/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace smart {

bool VerifyReport::passed() const {
  return std::all_of(lines.begin(), lines.end(), [](const VerifyLine& l) { return l.passed; });
}

const VerifyLine* VerifyReport::find(const std::string& name) const {
  for (const auto& l : lines)
    if (l.name == name) return &l;
  return nullptr;
}

namespace {

/// measured <= tolerance passes.
void at_most(VerifyReport& r, const std::string& name, double measured, double tol) {
  r.lines.push_back(VerifyLine{name, measured, tol, std::isfinite(measured) && measured <= tol});
}

/// measured < tolerance passes.
void below(VerifyReport& r, const std::string& name, double measured, double tol) {
  r.lines.push_back(VerifyLine{name, measured, tol, std::isfinite(measured) && measured < tol});
}

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

Tensor unit_columns(Tensor t) {
  for (Index j = 0; j < t.cols(); ++j) {
    const double n = t.col(j).norm();
    if (n > 0.0) t.col(j) /= n;
  }
  return t;
}

void identity_suite(VerifyReport& r, const VerifyOptions& opt) {
  Rng rng = Rng(opt.seed).derive(1);
  double two_form = 0.0, fe = 0.0, nll = 0.0;
  for (int i = 0; i < opt.instances; ++i) {
    const int d = pick(rng, 1, 8), m = pick(rng, 1, 16), n = pick(rng, 1, 4);
    const PatternPair pair{rng.normal_tensor(d, n), rng.normal_tensor(d, m)};
    const double gamma = rng.uniform();
    const int steps = pick(rng, 1, 3);
    const Tensor a = hopfield_update(pair, gamma, steps, UpdateForm::Convex);
    const Tensor b = hopfield_update(pair, gamma, steps, UpdateForm::GradientStep);
    two_form = std::max(two_form, (a - b).cwiseAbs().maxCoeff());

    const int k = pick(rng, 2, 16);
    const Vector logits = rng.uniform_tensor(k, 1, -50.0, 50.0);
    fe = std::max(fe, energy_softmax_identity(logits).diff);

    const int cols = pick(rng, 1, 6);
    const Tensor p = rng.normal_tensor(k, cols, 2.0);
    LabelMap y;
    y.labels.resize(cols);
    for (int j = 0; j < cols; ++j) y.labels(j) = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const Tensor probs = softmax_cols(p);
    double ce = 0.0;
    for (int j = 0; j < cols; ++j) ce -= std::log(probs(y.labels(j), j));
    nll = std::max(nll, std::abs(seg_nll(p, y) - ce / cols));
  }
  below(r, "update_two_form_equivalence", two_form, 1e-12);
  below(r, "free_energy_softmax_identity", fe, 1e-12);
  below(r, "seg_nll_equals_cross_entropy", nll, 1e-12);
}

void gradient_suite(VerifyReport& r, const VerifyOptions& opt) {
  Rng rng = Rng(opt.seed).derive(2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = pick(rng, 1, 8), m = pick(rng, 1, 16);
    const Tensor nu = rng.normal_tensor(d, m);
    const Tensor xi = rng.normal_tensor(d, 1);
    const auto res = ad::grad_check([&](const Tensor& x) { return hopfield_energy(x, nu); },
                                    [&](const Tensor& x) { return Tensor(opt.gradient_scale * hopfield_gradient(x, nu)); },
                                    xi, 1e-5, 1e-6);
    worst = std::max(worst, res.max_relative_error);
  }
  below(r, "hopfield_gradient_vs_finite_differences", worst, 1e-6);

  // Tiny two-branch model: every loss term, both schemes, one and two update steps.
  double e2e = 0.0;
  const int c = 3, d = 3, n = 5, k = 3;
  for (FusionScheme scheme : {FusionScheme::Add, FusionScheme::Gated}) {
    for (int steps : {1, 2}) {
      std::vector<Tensor> params = {rng.normal_tensor(d, c, 0.5), rng.normal_tensor(d, c, 0.5),
                                    rng.normal_tensor(k, d, 0.5), rng.normal_tensor(k, d, 0.5),
                                    rng.normal_tensor(1, d, 0.5), rng.normal_tensor(1, d, 0.5),
                                    rng.normal_tensor(d, d, 0.5), rng.normal_tensor(d, d, 0.5)};
      const Tensor x = rng.normal_tensor(c, n);
      LabelMap y;
      y.labels.resize(n);
      for (int j = 0; j < n; ++j) y.labels(j) = j % k;
      const RowVector gt = rng.normal_tensor(1, n).row(0);
      const double gamma = 0.7;

      struct Fixed {
        ReliabilityMask seg, dep;
        double c_plain = 0, c_fused = 0, c_rfa = 0;
        Tensor sp, sf, dp, df;  // teachers frozen at the base point
      };
      auto build = [&](ad::Graph& g, int which, ad::Var var, const Fixed* fixed, Fixed* capture) {
        std::vector<ad::Var> p;
        for (std::size_t j = 0; j < params.size(); ++j)
          p.push_back(static_cast<int>(j) == which ? var : g.constant(params[j]));
        ad::FusionVars fv{scheme, gamma, steps, std::nullopt, std::nullopt};
        if (scheme == FusionScheme::Gated) {
          fv.w1 = p[6];
          fv.w2 = p[7];
        }
        const ad::Var xv = g.constant(x);
        const ad::Var fs = ad::matmul(p[0], xv), fd = ad::matmul(p[1], xv);
        const ad::Var sp = ad::matmul(p[2], fs), sf = ad::matmul(p[3], ad::eb2f_apply(fs, fd, fv));
        const ad::Var dp = ad::matmul(p[4], fd), df = ad::matmul(p[5], ad::eb2f_apply(fd, fs, fv));
        if (capture) {
          capture->seg = reliability_mask(free_energy_map(sp.value()), free_energy_map(sf.value()));
          capture->c_plain = berhu_threshold(dp.value().row(0) - gt);
          capture->c_fused = berhu_threshold(df.value().row(0) - gt);
          capture->dep = reliability_mask(depth_energy_map(dp.value().row(0), gt, capture->c_plain),
                                          depth_energy_map(df.value().row(0), gt, capture->c_fused));
          capture->c_rfa = berhu_threshold(dp.value().row(0) - df.value().row(0));
          capture->sp = sp.value();
          capture->sf = sf.value();
          capture->dp = dp.value();
          capture->df = df.value();
          return g.constant(Tensor::Zero(1, 1));
        }
        const ad::Var gtv = g.constant(gt);
        return ad::seg_nll(sp, y) + ad::seg_nll(sf, y) + ad::mean(ad::berhu(dp - gtv, fixed->c_plain)) +
               ad::mean(ad::berhu(df - gtv, fixed->c_fused)) + ad::rfa_seg_loss(sp, sf, fixed->seg, fixed->sp, fixed->sf) +
               ad::rfa_dep_loss(dp, df, fixed->dep, fixed->c_rfa, fixed->dp, fixed->df);
      };
      Fixed fixed;
      {
        ad::Graph g;
        build(g, -1, ad::Var{}, nullptr, &fixed);
      }
      const int trainable = scheme == FusionScheme::Gated ? 8 : 6;
      for (int which = 0; which < trainable; ++which) {
        const auto res = ad::grad_check(
            [&](ad::Graph& g, ad::Var v) { return build(g, which, v, &fixed, nullptr); }, params[static_cast<std::size_t>(which)],
            1e-6, 1e-7);
        e2e = std::max(e2e, res.max_relative_error);
      }
    }
  }
  below(r, "end_to_end_gradient_vs_finite_differences", e2e, 1e-4);
}

void descent_suite(VerifyReport& r, const VerifyOptions& opt) {
  Rng rng = Rng(opt.seed).derive(3);
  double rise = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < opt.instances; ++i) {
    const int d = pick(rng, 1, 8), m = pick(rng, 1, 16);
    const Tensor nu = rng.normal_tensor(d, m, 2.0);
    const Tensor xi = rng.normal_tensor(d, 1, 2.0);
    const Tensor next = hopfield_update(PatternPair{xi, nu}, 1.0, 1);
    rise = std::max(rise, hopfield_energy(next, nu) - hopfield_energy(xi, nu));
  }
  at_most(r, "energy_descent_gamma_1", rise, 1e-10);

  double rise_damped = -std::numeric_limits<double>::infinity();
  for (double gamma : {0.25, 0.5, 1.0}) {
    for (int i = 0; i < opt.instances / 3; ++i) {
      const int d = pick(rng, 1, 8), m = pick(rng, 1, 16);
      const Tensor nu = unit_columns(rng.normal_tensor(d, m));
      const Tensor xi = rng.normal_tensor(d, 1);
      const Tensor next = hopfield_update(PatternPair{xi, nu}, gamma, 1);
      rise_damped = std::max(rise_damped, hopfield_energy(next, nu) - hopfield_energy(xi, nu));
    }
  }
  at_most(r, "energy_descent_damped_unit_norm", rise_damped, 1e-10);

  // d >= 3: in one or two dimensions balanced pattern sets put a fixed point at a bifurcation
  // (xi <- tanh(xi) for d = 1), where convergence is sublinear.
  int worst_iters = 0;
  double step_growth = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    const int d = pick(rng, 3, 8), m = pick(rng, 1, 16);
    const Tensor nu = unit_columns(rng.normal_tensor(d, m));
    Tensor xi = rng.normal_tensor(d, 1);
    double prev = std::numeric_limits<double>::infinity();
    int it = 1;
    for (; it <= 10000; ++it) {
      const Tensor next = hopfield_update(PatternPair{xi, nu}, 1.0, 1);
      const double step = (next - xi).norm();
      // growth relative to the previous step, ignoring steps already at rounding level
      if (std::isfinite(prev) && prev > 1e-12) step_growth = std::max(step_growth, (step - prev) / prev);
      prev = step;
      xi = next;
      if (step < 1e-6) break;
    }
    worst_iters = std::max(worst_iters, it);
  }
  at_most(r, "convergence_iterations_unit_norm", worst_iters, 500);
  at_most(r, "step_norm_non_increasing_unit_norm", step_growth, 1e-9);
}

void rfa_suite(VerifyReport& r, const VerifyOptions& opt) {
  Rng rng = Rng(opt.seed).derive(4);
  double mismatches = 0.0, kl_min = std::numeric_limits<double>::infinity(), kl_self = 0.0;
  double kl_distinct_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opt.instances; ++i) {
    const int n = pick(rng, 1, 20);
    RowVector ep(n), ef(n);
    for (int j = 0; j < n; ++j) {
      ep(j) = std::round(rng.normal() * 2.0) / 2.0;  // coarse grid to produce ties
      ef(j) = std::round(rng.normal() * 2.0) / 2.0;
    }
    const ReliabilityMask mask = reliability_mask(ep, ef);
    Index ones = 0;
    for (int j = 0; j < n; ++j) {
      if ((mask.bits(j) != 0) != (ef(j) < ep(j))) mismatches += 1;
      ones += mask.bits(j);
    }
    if (ones != mask.count || mask.count + (n - mask.count) != n) mismatches += 1;

    const int k = pick(rng, 2, 8);
    const Vector p = rng.normal_tensor(k, 1, 2.0), q = rng.normal_tensor(k, 1, 2.0);
    kl_min = std::min(kl_min, kl_divergence(p, q));
    kl_self = std::max(kl_self, std::abs(kl_divergence(p, p)));
    if ((softmax(p) - softmax(q)).cwiseAbs().maxCoeff() > 1e-3) kl_distinct_min = std::min(kl_distinct_min, kl_divergence(p, q));
  }
  at_most(r, "mask_partition_mismatches", mismatches, 0.0);
  at_most(r, "kl_negativity", -kl_min, 1e-12);
  below(r, "kl_equal_distributions", kl_self, 1e-12);
  r.lines.push_back(VerifyLine{"kl_distinct_distributions_positive", kl_distinct_min, 1e-12, kl_distinct_min > 1e-12});

  double teacher = 0.0, nonfinite = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = pick(rng, 1, 12), k = pick(rng, 2, 5);
    const Tensor a = rng.normal_tensor(k, n), b = rng.normal_tensor(k, n);
    const Tensor da = rng.normal_tensor(1, n), db = rng.normal_tensor(1, n);
    ReliabilityMask mask;
    mask.bits.resize(n);
    const int mode = i % 3;  // mixed, all zero, all one
    for (int j = 0; j < n; ++j) {
      mask.bits(j) = mode == 0 ? static_cast<std::uint8_t>(rng.below(2)) : mode == 1 ? 0 : 1;
      mask.count += mask.bits(j);
    }
    ad::Graph g;
    const ad::Var pa = g.leaf(a), pb = g.leaf(b), qa = g.leaf(da), qb = g.leaf(db);
    const ad::Var seg = ad::rfa_seg_loss(pa, pb, mask);
    const ad::Var dep = ad::rfa_dep_loss(qa, qb, mask, berhu_threshold(da.row(0) - db.row(0)));
    const ad::Gradients gs = g.backward(seg + dep);
    const Tensor ga = gs.of(pa), gb = gs.of(pb), gqa = gs.of(qa), gqb = gs.of(qb);
    for (int j = 0; j < n; ++j) {
      // m = 0: plain teaches, so the plain column gets nothing; m = 1 the reverse
      const bool fused_teaches = mask.bits(j) != 0;
      const double t = fused_teaches ? gb.col(j).cwiseAbs().maxCoeff() + std::abs(gqb(0, j))
                                     : ga.col(j).cwiseAbs().maxCoeff() + std::abs(gqa(0, j));
      teacher = std::max(teacher, t);
    }
    const double vs = rfa_seg_loss(a, b, mask), vd = rfa_dep_loss(da.row(0), db.row(0), mask, 0.5);
    if (!std::isfinite(vs) || !std::isfinite(vd) || !std::isfinite(seg.scalar()) || !std::isfinite(dep.scalar()))
      nonfinite += 1;
  }
  at_most(r, "teacher_side_gradient_magnitude", teacher, 0.0);
  at_most(r, "degenerate_mask_nonfinite_losses", nonfinite, 0.0);
}

void fusion_suite(VerifyReport& r, const VerifyOptions& opt) {
  Rng rng = Rng(opt.seed).derive(5);
  double mismatches = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int d = pick(rng, 1, 8), n = pick(rng, 1, 16);
    const Tensor q = rng.normal_tensor(d, n), o = rng.normal_tensor(d, n);
    const FusionParams params = i % 2 == 0 ? FusionParams::add(0.0, pick(rng, 0, 8))
                                           : [&] {
                                               FusionParams p = FusionParams::gated(d, 0.0, pick(rng, 0, 8), rng);
                                               p.w1 = rng.normal_tensor(d, d);
                                               return p;
                                             }();
    const Tensor a = eb2f_apply(q, o, params), b = fuse(o, q, params);
    for (Index j = 0; j < a.size(); ++j)
      if (a.data()[j] != b.data()[j]) mismatches += 1;
  }
  at_most(r, "gamma_zero_bit_exact_mismatches", mismatches, 0.0);

  double io = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Tensor t = rng.normal_tensor(pick(rng, 1, 6), pick(rng, 1, 6), std::pow(10.0, pick(rng, -30, 30)));
    std::stringstream ss;
    write_tensor(ss, t);
    const Tensor back = read_tensor(ss);
    for (Index j = 0; j < t.size(); ++j)
      if (back.data()[j] != t.data()[j]) io += 1;
  }
  at_most(r, "tensor_roundtrip_mismatches", io, 0.0);
}

void trainer_suite(VerifyReport& r, const VerifyOptions& opt) {
  const SceneDims dims{4, 4, 3, 4};
  const DomainPair data =
      make_domain_pair(Rng(opt.seed).derive(6), ShiftSpec::from_scalars(dims.channels, 0.3, 1.2, 0.2, 0.1), 3, dims);
  TrainConfig cfg;
  cfg.t1 = 3;
  cfg.t2 = 3;
  cfg.hidden = 6;
  cfg.lr = 0.01;
  cfg.scheme = FusionScheme::Gated;
  cfg.pseudo_threshold = 0.5;
  const TrainResult a = train(make_model(cfg, dims.channels, dims.k), data.source, data.target, cfg);
  const TrainResult b = train(make_model(cfg, dims.channels, dims.k), data.source, data.target, cfg);

  double bundle = 0.0;
  for (const TraceRow& row : a.trace) {
    const LossBundle& lb = row.bundle;
    bundle = std::max({bundle, std::abs(lb.supervised - (lb.seg_total + lb.alpha * lb.dep_total)),
                       std::abs(lb.overall - (lb.supervised + lb.beta * lb.rfa))});
  }
  at_most(r, "loss_bundle_identity_deviation", bundle, 1e-12);

  double diff = 0.0;
  std::vector<Tensor> wa, wb;
  a.model.for_each([&](const std::string&, const Tensor& t) { wa.push_back(t); });
  b.model.for_each([&](const std::string&, const Tensor& t) { wb.push_back(t); });
  for (std::size_t i = 0; i < wa.size(); ++i)
    for (Index j = 0; j < wa[i].size(); ++j)
      if (wa[i].data()[j] != wb[i].data()[j]) diff += 1;
  at_most(r, "training_determinism_mismatches", diff, 0.0);

  const double calls = std::abs(a.stats.phase1_rfa_calls - 0) + std::abs(a.stats.phase2_rfa_source_calls - cfg.t2) +
                       std::abs(a.stats.phase2_rfa_target_calls - cfg.t2);
  at_most(r, "rfa_call_count_deviation", calls, 0.0);

  ModelParams perturbed = a.model;
  perturbed.seg_dec_plain.w.array() += 1.0;
  perturbed.dep_dec_plain.b.array() -= 3.0;
  double purity = 0.0;
  EvalCounters counters;
  for (const Scene& s : data.target) {
    const Predictions p = forward_pass(a.model, s.features, Mode::Infer, &counters);
    const Predictions q = forward_pass(perturbed, s.features, Mode::Infer, &counters);
    for (Index j = 0; j < p.seg_fused.size(); ++j)
      if (p.seg_fused.data()[j] != q.seg_fused.data()[j]) purity += 1;
    for (Index j = 0; j < p.dep_fused.size(); ++j)
      if (p.dep_fused.data()[j] != q.dep_fused.data()[j]) purity += 1;
  }
  purity += counters.plain_decoder_calls;
  at_most(r, "inference_purity_violations", purity, 0.0);

  double taint = 0.0;
  try {
    (void)training_labels(data.target.front());
    taint = 1.0;
  } catch (const ContractViolation&) {
  }
  at_most(r, "target_label_taint_violations", taint, 0.0);
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"identity", "gradient", "descent", "rfa", "fusion", "trainer"};
  return names;
}

VerifyReport verify_suite(const std::string& name, const VerifyOptions& options) {
  VerifyReport r;
  if (name == "identity")
    identity_suite(r, options);
  else if (name == "gradient")
    gradient_suite(r, options);
  else if (name == "descent")
    descent_suite(r, options);
  else if (name == "rfa")
    rfa_suite(r, options);
  else if (name == "fusion")
    fusion_suite(r, options);
  else if (name == "trainer")
    trainer_suite(r, options);
  else
    throw ContractViolation("verify_suite: unknown suite '" + name + "'");
  return r;
}

VerifyReport verify(const VerifyOptions& options) {
  VerifyReport r;
  for (const auto& name : suite_names()) {
    const VerifyReport part = verify_suite(name, options);
    r.lines.insert(r.lines.end(), part.lines.begin(), part.lines.end());
  }
  return r;
}

void print_report(std::ostream& out, const VerifyReport& report) {
  char buf[256];
  for (const auto& l : report.lines) {
    std::snprintf(buf, sizeof buf, "%s %-44s measured=%-12.6g tol=%.3g", l.passed ? "PASS" : "FAIL", l.name.c_str(),
                  l.measured, l.tolerance);
    out << buf << '\n';
  }
  const auto failed = std::count_if(report.lines.begin(), report.lines.end(), [](const VerifyLine& l) { return !l.passed; });
  out << (failed == 0 ? "verify: all " + std::to_string(report.lines.size()) + " invariants pass"
                      : "verify: " + std::to_string(failed) + " of " + std::to_string(report.lines.size()) +
                            " invariants FAILED")
      << '\n';
}

}  // namespace smart
