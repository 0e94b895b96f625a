// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   smart_acceptance --cli build/tools/smart --config config/reference.cfg --work build/acceptance_work

#include "smart/config.hpp"
#include "smart/experiment.hpp"
#include "smart/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

using namespace smart;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
  int id;
  bool passed;
  std::string detail;
};

std::vector<Criterion> results;

void report(int id, bool passed, const std::string& detail) {
  results.push_back({id, passed, detail});
  std::printf("criterion %d %s  %s\n", id, passed ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string failing_lines(const VerifyReport& r) {
  std::string out;
  for (const auto& l : r.lines)
    if (!l.passed) out += " [" + l.name + " " + fmt("%.3g", l.measured) + " > " + fmt("%.3g", l.tolerance) + "]";
  return out;
}

void suite_criterion(int id, const std::string& suite, double budget_s, const std::vector<std::string>& names) {
  const auto t0 = Clock::now();
  const VerifyReport r = verify_suite(suite);
  const double dt = seconds_since(t0);
  std::string detail = suite + " suite:";
  bool ok = dt < budget_s;
  for (const auto& name : names) {
    const VerifyLine* l = r.find(name);
    if (!l) {
      detail += " missing " + name;
      ok = false;
      continue;
    }
    ok = ok && l->passed;
    detail += fmt(" %s=%.3g", name.c_str(), l->measured);
  }
  detail += fmt("  (%.2fs, budget %.0fs)", dt, budget_s);
  if (!r.passed()) detail += " failing:" + failing_lines(r);
  report(id, ok && r.passed(), detail);
}

struct Variant {
  const char* name;
  void (*apply)(RunConfig&);
};

struct VariantStats {
  std::vector<double> miou;
  double max_seconds = 0.0;
  std::vector<std::string> failures;
  std::vector<RunOutcome> runs;
  double mean() const {
    double s = 0;
    for (double v : miou) s += v;
    return miou.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(miou.size());
  }
};

VariantStats run_variant(const RunConfig& base, const Variant& v, int seeds) {
  VariantStats st;
  for (int s = 1; s <= seeds; ++s) {
    RunConfig cfg = base;
    cfg.train.seed = static_cast<std::uint64_t>(s);
    v.apply(cfg);
    const auto t0 = Clock::now();
    RunOutcome run = run_experiment(cfg, std::string(v.name) + "/seed=" + std::to_string(s));
    const double dt = seconds_since(t0);
    st.max_seconds = std::max(st.max_seconds, dt);
    std::fprintf(stderr, "  %-9s seed %d  miou %.4f  %.1fs  %s\n", v.name, s, run.eval.miou, dt, run.status.c_str());
    if (!run.ok()) st.failures.push_back(run.run_id + ": " + run.status);
    st.miou.push_back(run.ok() ? run.eval.miou : std::numeric_limits<double>::quiet_NaN());
    st.runs.push_back(std::move(run));
  }
  return st;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Mean supervised loss over the first and last 10% of phase 1.
std::pair<double, double> phase1_ends(const std::vector<TraceRow>& trace) {
  std::vector<double> l;
  for (const auto& r : trace)
    if (r.phase == 1) l.push_back(r.bundle.supervised);
  const std::size_t n = std::max<std::size_t>(1, l.size() / 10);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < n && i < l.size(); ++i) {
    head += l[i];
    tail += l[l.size() - 1 - i];
  }
  return {head / n, tail / n};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-8"};
  std::string cli, config_path, work = "acceptance_work";
  int seeds = 5;
  app.add_option("--cli", cli, "path to the smart executable")->required()->check(CLI::ExistingFile);
  app.add_option("--config", config_path, "reference config")->required()->check(CLI::ExistingFile);
  app.add_option("--work", work, "scratch directory for sweep outputs");
  app.add_option("--seeds", seeds, "seeds per ablation variant")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const RunConfig reference = load_config(config_path);

  suite_criterion(1, "identity", 5.0,
                  {"update_two_form_equivalence", "free_energy_softmax_identity", "seg_nll_equals_cross_entropy"});
  suite_criterion(2, "gradient", 30.0,
                  {"hopfield_gradient_vs_finite_differences", "end_to_end_gradient_vs_finite_differences"});
  suite_criterion(3, "descent", 30.0,
                  {"energy_descent_gamma_1", "energy_descent_damped_unit_norm", "convergence_iterations_unit_norm",
                   "step_norm_non_increasing_unit_norm"});
  suite_criterion(4, "rfa", 5.0,
                  {"mask_partition_mismatches", "kl_negativity", "kl_equal_distributions",
                   "kl_distinct_distributions_positive", "teacher_side_gradient_magnitude",
                   "degenerate_mask_nonfinite_losses"});

  const Variant baseline{"baseline", [](RunConfig& c) {
                           c.train.fusion_enabled = false;
                           c.train.beta = 0.0;
                         }};
  const Variant direct{"direct", [](RunConfig& c) {
                         c.train.steps = 0;
                         c.train.beta = 0.0;
                       }};
  const Variant eb2f{"eb2f", [](RunConfig& c) { c.train.beta = 0.0; }};
  const Variant full{"full", [](RunConfig&) {}};
  const Variant steps8{"steps8", [](RunConfig& c) { c.train.steps = 8; }};

  std::fprintf(stderr, "ablation on %s, %d seeds\n", config_path.c_str(), seeds);
  const VariantStats sb = run_variant(reference, baseline, seeds);
  const VariantStats sd = run_variant(reference, direct, seeds);
  const VariantStats se = run_variant(reference, eb2f, seeds);
  const VariantStats sf = run_variant(reference, full, seeds);
  {
    const double slowest = std::max({sb.max_seconds, sd.max_seconds, se.max_seconds, sf.max_seconds});
    const bool gain = sf.mean() >= sb.mean() + 0.02;
    const bool order = se.mean() > sd.mean();
    const bool fast = slowest <= 300.0;
    std::string detail = fmt("mean miou baseline %.4f  direct %.4f  eb2f %.4f  full %.4f;  full-baseline %+.4f (>= 0.02)"
                             ", eb2f-direct %+.4f (> 0);  slowest run %.1fs (<= 300s)",
                             sb.mean(), sd.mean(), se.mean(), sf.mean(), sf.mean() - sb.mean(), se.mean() - sd.mean(),
                             slowest);
    for (const auto* s : {&sb, &sd, &se, &sf})
      for (const auto& f : s->failures) detail += "; failed " + f;
    report(5, gain && order && fast, detail);

    // training-works oracle on the same runs
    int improved = 0;
    for (const auto& run : sf.runs) {
      const auto [head, tail] = phase1_ends(run.trace);
      improved += tail < head ? 1 : 0;
    }
    std::printf("  phase-1 supervised loss fell (last 10%% < first 10%%) in %d of %zu full runs\n", improved,
                sf.runs.size());
    if (improved != static_cast<int>(sf.runs.size())) results.push_back({5, false, "training oracle"});
  }

  const VariantStats s8 = run_variant(reference, steps8, seeds);
  {
    std::string detail = fmt("mean miou steps=8 %.4f <= steps=1 %.4f", s8.mean(), sf.mean());
    for (const auto& f : s8.failures) detail += "; failed " + f;
    report(6, s8.mean() <= sf.mean(), detail);
  }

  {
    const VerifyReport r = verify_suite("fusion");
    const VerifyLine* l = r.find("gamma_zero_bit_exact_mismatches");
    report(7, l && l->passed, l ? fmt("gamma=0 eb2f_apply vs plain fuse, bit-exact mismatches %g over random instances",
                                      l->measured)
                                : std::string("missing gamma_zero_bit_exact_mismatches"));
  }

  {
    namespace fs = std::filesystem;
    fs::create_directories(work);
    const std::string common = " sweep --config " + config_path +
                               " --t1 60 --t2 15 --n_scenes 8 --axis steps --values 0,1 --seeds 1,2 --out_dir ";
    const fs::path out = fs::path(work) / "sweep";
    fs::remove_all(out);
    const int ca = shell(cli + common + out.string() + " > /dev/null");
    const std::string first = slurp(out / "metrics.csv");
    fs::remove_all(out);
    const int cb = shell(cli + common + out.string() + " > /dev/null");
    const std::string second = slurp(out / "metrics.csv");
    const bool same = !first.empty() && first == second;
    report(8, ca == 0 && cb == 0 && same,
           fmt("two sweep executions: exit %d/%d, metrics.csv %zu bytes, %s", ca, cb, first.size(),
               same ? "byte-identical" : "DIFFERENT"));
  }

  const bool all = std::all_of(results.begin(), results.end(), [](const Criterion& c) { return c.passed; });
  std::printf("acceptance: %s\n", all ? "all criteria pass" : "FAILED");
  return all ? 0 : 1;
}
