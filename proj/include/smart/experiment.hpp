#ifndef SMART_EXPERIMENT_HPP
#define SMART_EXPERIMENT_HPP

#include "smart/config.hpp"
#include "smart/metrics.hpp"
#include "smart/train.hpp"

#include <string>
#include <vector>

namespace smart {

/// Source and target scenes for cfg.train.seed; independent of every other key except the
/// scene geometry and the shift knobs.
DomainPair make_run_data(const RunConfig& cfg);

/// One train + evaluate run. Failures land in `status` instead of propagating.
struct RunOutcome {
  std::string run_id;
  RunConfig cfg;
  Evaluation eval;  // on the target scenes
  std::vector<TraceRow> trace;
  /// Mean supervised loss over the last 10% of phase 1, mean overall loss over the last 10% of phase 2.
  double loss_phase1 = 0.0;
  double loss_phase2 = 0.0;
  std::string status = "ok";
  bool ok() const { return status == "ok"; }
};

RunOutcome run_experiment(const RunConfig& cfg, const std::string& run_id);
/// Same, with the trained model kept.
RunOutcome run_experiment(const RunConfig& cfg, const std::string& run_id, ModelParams* trained);

enum class SweepAxis { Gamma, Beta, Steps, Threshold };

SweepAxis parse_axis(const std::string& name);
const char* axis_name(SweepAxis axis);

/// Fresh data and model for every (value, seed); rows ordered by value, then seed.
std::vector<RunOutcome> sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const std::vector<std::uint64_t>& seeds);

std::string metrics_header(int classes);
std::string metrics_line(const RunOutcome& run);
/// Header plus one line per run; every run must share k.
std::string metrics_csv(const std::vector<RunOutcome>& runs);
std::string loss_trace_csv(const std::vector<TraceRow>& trace);

/// One tensor dump per trainable tensor, named `<param>.txt`, inside `dir`.
void save_model(const ModelParams& model, const std::string& dir);
/// Fills a model of the same architecture as `like` from save_model output.
ModelParams load_model(const ModelParams& like, const std::string& dir);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& text);

}  // namespace smart

#endif  // SMART_EXPERIMENT_HPP
