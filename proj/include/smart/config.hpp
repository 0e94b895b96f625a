#ifndef SMART_CONFIG_HPP
#define SMART_CONFIG_HPP

#include "smart/scenes.hpp"
#include "smart/train.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace smart {

/// Bad config text or CLI input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs: trainer settings, scene geometry and the domain gap.
struct RunConfig {
  TrainConfig train;
  SceneDims dims;
  int n_scenes = 64;
  double feature_shift = 0.0;
  double feature_scale = 1.0;
  double noise_sd = 0.0;
  double depth_noise_sd = 0.0;
  std::string out_dir = "out";

  ShiftSpec shift() const;
  void validate() const;
};

/// Config keys in file and CSV order.
const std::vector<std::string>& config_keys();

/// Set one key from its text form. Unknown keys and malformed values throw UsageError.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Text form of one key, shortest round-trip for doubles.
std::string get_key(const RunConfig& cfg, const std::string& key);

/// Parse `key = value` lines; '#' starts a comment. Applied on top of `base`.
/// Errors carry the line number.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// All keys, one `key = value` line each.
std::string format_config(const RunConfig& cfg);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace smart

#endif  // SMART_CONFIG_HPP
