// smart: train, evaluate, sweep and verify the energy-based fusion model on synthetic scenes.
//
// Exit codes: 0 success, 1 invariant or run failure, 2 usage error.

#include "smart/config.hpp"
#include "smart/eb2f.hpp"
#include "smart/experiment.hpp"
#include "smart/tensor_io.hpp"
#include "smart/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

using namespace smart;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

/// --config plus one --<key> flag per config key; flags win over the file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    // -h would clash with the grid-height key --h.
    app->set_help_flag("--help", "Print this help message and exit");
    app->add_option("--config", config_path, "flat 'key = value' config file")->check(CLI::ExistingFile);
    for (const auto& key : config_keys())
      options[key] = app->add_option("--" + key, values[key], "override config key '" + key + "'");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& key : config_keys())
      if (options.at(key)->count() > 0) set_key(cfg, key, values.at(key));
    cfg.validate();
    return cfg;
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    T v{};
    try {
      if constexpr (std::is_same_v<T, double>)
        v = std::stod(item, &used);
      else
        v = static_cast<T>(std::stoull(item, &used));
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid ") + what + " entry '" + item + "'");
    }
    if (used != item.size()) throw UsageError(std::string("invalid ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " list is empty");
  return out;
}

int cmd_train(const RunConfig& cfg) {
  ModelParams model;
  const RunOutcome run = run_experiment(cfg, "train/seed=" + std::to_string(cfg.train.seed), &model);
  write_file(cfg.out_dir + "/metrics.csv", metrics_csv({run}));
  write_file(cfg.out_dir + "/loss_trace.csv", loss_trace_csv(run.trace));
  write_file(cfg.out_dir + "/config.cfg", format_config(cfg));
  if (!run.ok()) {
    std::cerr << "train: " << run.status << '\n';
    return kFailure;
  }
  save_model(model, cfg.out_dir + "/model");
  std::printf("target miou %.4f  depth_mae %.4f  -> %s\n", run.eval.miou, run.eval.depth_mae, cfg.out_dir.c_str());
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_dir) {
  const ModelParams like = make_model(cfg.train, cfg.dims.channels, cfg.dims.k);
  const ModelParams model = load_model(like, model_dir.empty() ? cfg.out_dir + "/model" : model_dir);
  const DomainPair data = make_run_data(cfg);
  std::vector<RunOutcome> rows;
  for (const auto& [name, scenes] : {std::pair{"eval/source", &data.source}, std::pair{"eval/target", &data.target}}) {
    RunOutcome r;
    r.run_id = name;
    r.cfg = cfg;
    r.eval = evaluate(model, *scenes);
    r.loss_phase1 = r.loss_phase2 = std::numeric_limits<double>::quiet_NaN();
    std::printf("%-12s miou %.4f  depth_mae %.4f\n", name, r.eval.miou, r.eval.depth_mae);
    rows.push_back(std::move(r));
  }
  write_file(cfg.out_dir + "/eval_metrics.csv", metrics_csv(rows));
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::string& values, const std::string& seeds) {
  const std::vector<RunOutcome> rows =
      sweep(cfg, parse_axis(axis), parse_list<double>(values, "values"), parse_list<std::uint64_t>(seeds, "seeds"));
  write_file(cfg.out_dir + "/metrics.csv", metrics_csv(rows));
  int failed = 0;
  for (const auto& r : rows) {
    std::printf("%-28s miou %.4f  %s\n", r.run_id.c_str(), r.eval.miou, r.status.c_str());
    failed += r.ok() ? 0 : 1;
  }
  std::printf("%zu runs, %d failed -> %s/metrics.csv\n", rows.size(), failed, cfg.out_dir.c_str());
  return failed == 0 ? kOk : kFailure;
}

int cmd_verify(double gradient_scale) {
  VerifyOptions opt;
  opt.gradient_scale = gradient_scale;
  const VerifyReport report = verify(opt);
  print_report(std::cout, report);
  return report.passed() ? kOk : kFailure;
}

int cmd_demo(int d, int m, double gamma, int iters, double noise, std::uint64_t seed) {
  if (d < 1 || m < 1 || iters < 0 || noise < 0.0) throw UsageError("demo-hopfield: need d, m >= 1, iters >= 0, noise >= 0");
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("demo-hopfield: gamma must lie in [0, 1]");
  Rng rng(seed);
  // Scaled unit patterns so retrieval is sharp enough to recall one of them.
  Tensor nu = rng.normal_tensor(d, m);
  for (Index j = 0; j < nu.cols(); ++j) nu.col(j) *= std::sqrt(static_cast<double>(d)) / nu.col(j).norm();
  Tensor xi = nu.col(0) + rng.normal_tensor(d, 1, noise);
  std::printf("iter  energy            |dxi|         cos(xi, nu_0)\n");
  auto cosine = [&](const Tensor& x) { return x.col(0).dot(nu.col(0)) / (x.norm() * nu.col(0).norm()); };
  std::printf("%4d  %-16.10f  %-12s  %.6f\n", 0, hopfield_energy(xi, nu), "-", cosine(xi));
  for (int t = 1; t <= iters; ++t) {
    const Tensor next = hopfield_update(PatternPair{xi, nu}, gamma, 1);
    const double step = (next - xi).norm();
    xi = next;
    std::printf("%4d  %-16.10f  %-12.4e  %.6f\n", t, hopfield_energy(xi, nu), step, cosine(xi));
  }
  return kOk;
}

int cmd_gen_data(const RunConfig& cfg) {
  const DomainPair data = make_run_data(cfg);
  const std::string dir = cfg.out_dir + "/scenes";
  std::filesystem::create_directories(dir);
  auto dump = [&](const std::vector<Scene>& scenes, const std::string& prefix) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const Scene& s = scenes[i];
      const std::string base = dir + "/" + prefix + "_" + std::to_string(i);
      dump_tensor(s.features, base + "_features.txt");
      dump_tensor(s.labels.labels.cast<double>(), base + "_labels.txt");
      dump_tensor(s.depth, base + "_depth.txt");
      dump_tensor(s.reference_depth, base + "_reference_depth.txt");
    }
  };
  dump(data.source, "source");
  dump(data.target, "target");
  write_file(cfg.out_dir + "/config.cfg", format_config(cfg));
  std::printf("%zu source + %zu target scenes -> %s\n", data.source.size(), data.target.size(), dir.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based bidirectional feature fusion with reliability assessment on synthetic scenes"};
  app.require_subcommand(1);

  ConfigFlags train_flags, eval_flags, sweep_flags, gen_flags;
  CLI::App* train = app.add_subcommand("train", "train one model and write metrics.csv, loss_trace.csv, model/");
  train_flags.attach(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on the config's source and target scenes");
  eval_flags.attach(eval);
  std::string model_dir;
  eval->add_option("--model-dir", model_dir, "directory written by train (default <out_dir>/model)");

  CLI::App* sw = app.add_subcommand("sweep", "one run per (value, seed); rows ordered by value, then seed");
  sweep_flags.attach(sw);
  std::string axis, values, seeds = "1,2,3,4,5";
  sw->add_option("--axis", axis, "gamma|beta|steps|threshold")->required();
  sw->add_option("--values", values, "comma-separated axis values")->required();
  sw->add_option("--seeds", seeds, "comma-separated seeds")->capture_default_str();

  CLI::App* ver = app.add_subcommand("verify", "run every invariant suite and print the report");
  double gradient_scale = 1.0;
  ver->add_option("--perturb-gradient", gradient_scale, "scale the Hopfield gradient under test (detector check)");

  CLI::App* demo = app.add_subcommand("demo-hopfield", "retrieve a stored pattern from a noisy cue, printing energy");
  int d = 16, m = 8, iters = 10;
  double gamma = 1.0, noise = 0.8;
  std::uint64_t seed = 1;
  demo->add_option("--d", d, "pattern dimension")->capture_default_str();
  demo->add_option("--m", m, "stored patterns")->capture_default_str();
  demo->add_option("--gamma", gamma, "update step size")->capture_default_str();
  demo->add_option("--iters", iters, "iterations")->capture_default_str();
  demo->add_option("--noise", noise, "cue noise standard deviation")->capture_default_str();
  demo->add_option("--seed", seed, "random seed")->capture_default_str();

  CLI::App* gen = app.add_subcommand("gen-data", "dump the config's source and target scenes as tensor files");
  gen_flags.attach(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_flags.resolve());
    if (*eval) return cmd_eval(eval_flags.resolve(), model_dir);
    if (*sw) return cmd_sweep(sweep_flags.resolve(), axis, values, seeds);
    if (*ver) return cmd_verify(gradient_scale);
    if (*demo) return cmd_demo(d, m, gamma, iters, noise, seed);
    if (*gen) return cmd_gen_data(gen_flags.resolve());
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
