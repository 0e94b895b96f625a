#include "smart/experiment.hpp"

#include "smart/tensor_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace smart {

namespace {

constexpr std::uint64_t kDataStream = 0x64617461ULL;

double tail_mean(const std::vector<TraceRow>& trace, int phase, bool overall) {
  std::vector<double> v;
  for (const TraceRow& r : trace)
    if (r.phase == phase) v.push_back(overall ? r.bundle.overall : r.bundle.supervised);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = std::max<std::size_t>(1, v.size() / 10);
  double s = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(n);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

}  // namespace

DomainPair make_run_data(const RunConfig& cfg) {
  return make_domain_pair(Rng(cfg.train.seed).derive(kDataStream), cfg.shift(), cfg.n_scenes, cfg.dims);
}

RunOutcome run_experiment(const RunConfig& cfg, const std::string& run_id) {
  return run_experiment(cfg, run_id, nullptr);
}

RunOutcome run_experiment(const RunConfig& cfg, const std::string& run_id, ModelParams* trained) {
  RunOutcome out;
  out.run_id = run_id;
  out.cfg = cfg;
  out.eval.iou = RowVector::Constant(cfg.dims.k, std::numeric_limits<double>::quiet_NaN());
  out.eval.miou = out.eval.depth_mae = std::numeric_limits<double>::quiet_NaN();
  out.eval.mean_energy_plain = out.eval.mean_energy_fused = std::numeric_limits<double>::quiet_NaN();
  out.loss_phase1 = out.loss_phase2 = std::numeric_limits<double>::quiet_NaN();
  try {
    cfg.validate();
    const DomainPair data = make_run_data(cfg);
    TrainResult result = train(make_model(cfg.train, cfg.dims.channels, cfg.dims.k), data.source, data.target, cfg.train);
    out.trace = std::move(result.trace);
    out.loss_phase1 = tail_mean(out.trace, 1, false);
    out.loss_phase2 = tail_mean(out.trace, 2, true);
    out.eval = evaluate(result.model, data.target);
    if (trained) *trained = std::move(result.model);
  } catch (const std::exception& e) {
    out.status = "failed: " + sanitize(e.what());
  }
  return out;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "gamma") return SweepAxis::Gamma;
  if (name == "beta") return SweepAxis::Beta;
  if (name == "steps") return SweepAxis::Steps;
  if (name == "threshold") return SweepAxis::Threshold;
  throw UsageError("unknown sweep axis '" + name + "' (gamma|beta|steps|threshold)");
}

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::Steps: return "steps";
    case SweepAxis::Threshold: return "threshold";
  }
  return "?";
}

std::vector<RunOutcome> sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const std::vector<std::uint64_t>& seeds) {
  require(!values.empty(), "sweep: values must be nonempty");
  require(!seeds.empty(), "sweep: seeds must be nonempty");
  std::vector<RunOutcome> rows;
  rows.reserve(values.size() * seeds.size());
  for (double v : values) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.train.seed = seed;
      switch (axis) {
        case SweepAxis::Gamma: cfg.train.gamma = v; break;
        case SweepAxis::Beta: cfg.train.beta = v; break;
        case SweepAxis::Steps: cfg.train.steps = static_cast<int>(std::lround(v)); break;
        case SweepAxis::Threshold: cfg.train.pseudo_threshold = v; break;
      }
      const std::string id = std::string(axis_name(axis)) + "=" + format_double(v) + "/seed=" + std::to_string(seed);
      rows.push_back(run_experiment(cfg, id));
    }
  }
  return rows;
}

std::string metrics_header(int classes) {
  std::string h = "run_id";
  for (const auto& k : config_keys()) h += "," + k;
  for (int c = 0; c < classes; ++c) h += ",iou_class_" + std::to_string(c);
  h += ",miou,depth_mae,mean_energy_plain,mean_energy_fused,loss_phase1,loss_phase2,status";
  return h;
}

std::string metrics_line(const RunOutcome& run) {
  std::string l = sanitize(run.run_id);
  for (const auto& k : config_keys()) l += "," + sanitize(get_key(run.cfg, k));
  for (Index c = 0; c < run.eval.iou.size(); ++c) l += "," + format_double(run.eval.iou(c));
  for (double v : {run.eval.miou, run.eval.depth_mae, run.eval.mean_energy_plain, run.eval.mean_energy_fused,
                   run.loss_phase1, run.loss_phase2})
    l += "," + format_double(v);
  l += "," + run.status;
  return l;
}

std::string metrics_csv(const std::vector<RunOutcome>& runs) {
  require(!runs.empty(), "metrics_csv: no runs");
  const int k = runs.front().cfg.dims.k;
  std::string out = metrics_header(k) + "\n";
  for (const auto& r : runs) {
    require(r.cfg.dims.k == k, "metrics_csv: runs disagree on k");
    out += metrics_line(r) + "\n";
  }
  return out;
}

std::string loss_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out =
      "phase,step,seg_src_plain,seg_src_fused,seg_tgt_plain,seg_tgt_fused,dep_src_plain,dep_src_fused,"
      "dep_tgt_plain,dep_tgt_fused,rfa_src,rfa_tgt,mask_src,mask_tgt,pseudo_labeled,seg_total,dep_total,"
      "supervised,rfa,overall\n";
  for (const TraceRow& r : trace) {
    out += std::to_string(r.phase) + "," + std::to_string(r.step);
    for (double v : {r.seg_src_plain, r.seg_src_fused, r.seg_tgt_plain, r.seg_tgt_fused, r.dep_src_plain,
                     r.dep_src_fused, r.dep_tgt_plain, r.dep_tgt_fused, r.rfa_src, r.rfa_tgt})
      out += "," + format_double(v);
    out += "," + std::to_string(r.mask_src) + "," + std::to_string(r.mask_tgt) + "," + std::to_string(r.pseudo_labeled);
    for (double v : {r.bundle.seg_total, r.bundle.dep_total, r.bundle.supervised, r.bundle.rfa, r.bundle.overall})
      out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void save_model(const ModelParams& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  model.for_each([&](const std::string& name, const Tensor& t) { dump_tensor(t, dir + "/" + name + ".txt"); });
}

ModelParams load_model(const ModelParams& like, const std::string& dir) {
  ModelParams m = like;
  m.for_each_mutable([&](const std::string& name, Tensor& t) {
    const std::string path = dir + "/" + name + ".txt";
    Tensor loaded;
    try {
      loaded = load_tensor(path);
    } catch (const ParseError& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
    require(loaded.rows() == t.rows() && loaded.cols() == t.cols(),
            "load_model: " + path + " has shape " + shape_string(loaded) + ", expected " + shape_string(t));
    t = loaded;
  });
  return m;
}

}  // namespace smart
