#include "smart/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace smart {

ShiftSpec RunConfig::shift() const {
  return ShiftSpec::from_scalars(dims.channels, feature_shift, feature_scale, noise_sd, depth_noise_sd);
}

void RunConfig::validate() const {
  train.validate();
  dims.validate();
  require(n_scenes >= 1, "RunConfig: n_scenes must be >= 1");
  shift().validate(dims.channels);
  require(!out_dir.empty(), "RunConfig: out_dir must be nonempty");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "t1",   "t2", "lr", "lr_phase2_mult", "alpha", "beta", "gamma", "steps", "scheme", "pseudo_threshold",
      "seed", "h",  "w",  "k",              "channels", "n_scenes", "feature_shift", "feature_scale",
      "noise_sd", "depth_noise_sd", "out_dir"};
  return keys;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty())
    throw UsageError("invalid value '" + text + "' for key '" + key + "'");
  return v;
}

}  // namespace

void set_key(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  TrainConfig& t = cfg.train;
  auto d = [&] { return parse_number<double>(key, value); };
  auto i = [&] { return parse_number<int>(key, value); };
  if (key == "t1") t.t1 = i();
  else if (key == "t2") t.t2 = i();
  else if (key == "lr") t.lr = d();
  else if (key == "lr_phase2_mult") t.lr_phase2_mult = d();
  else if (key == "alpha") t.alpha = d();
  else if (key == "beta") t.beta = d();
  else if (key == "gamma") t.gamma = d();
  else if (key == "steps") t.steps = i();
  else if (key == "scheme") {
    if (value != "add" && value != "gated") throw UsageError("invalid value '" + value + "' for key 'scheme' (add|gated)");
    t.scheme = parse_scheme(value);
  } else if (key == "pseudo_threshold") t.pseudo_threshold = d();
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "h") cfg.dims.h = i();
  else if (key == "w") cfg.dims.w = i();
  else if (key == "k") cfg.dims.k = i();
  else if (key == "channels") cfg.dims.channels = i();
  else if (key == "n_scenes") cfg.n_scenes = i();
  else if (key == "feature_shift") cfg.feature_shift = d();
  else if (key == "feature_scale") cfg.feature_scale = d();
  else if (key == "noise_sd") cfg.noise_sd = d();
  else if (key == "depth_noise_sd") cfg.depth_noise_sd = d();
  else if (key == "out_dir") {
    if (value.empty()) throw UsageError("empty value for key 'out_dir'");
    cfg.out_dir = value;
  } else
    throw UsageError("unknown config key '" + key + "'");
}

std::string get_key(const RunConfig& cfg, const std::string& key) {
  const TrainConfig& t = cfg.train;
  if (key == "t1") return std::to_string(t.t1);
  if (key == "t2") return std::to_string(t.t2);
  if (key == "lr") return format_double(t.lr);
  if (key == "lr_phase2_mult") return format_double(t.lr_phase2_mult);
  if (key == "alpha") return format_double(t.alpha);
  if (key == "beta") return format_double(t.beta);
  if (key == "gamma") return format_double(t.gamma);
  if (key == "steps") return std::to_string(t.steps);
  if (key == "scheme") return t.scheme == FusionScheme::Add ? "add" : "gated";
  if (key == "pseudo_threshold") return format_double(t.pseudo_threshold);
  if (key == "seed") return std::to_string(t.seed);
  if (key == "h") return std::to_string(cfg.dims.h);
  if (key == "w") return std::to_string(cfg.dims.w);
  if (key == "k") return std::to_string(cfg.dims.k);
  if (key == "channels") return std::to_string(cfg.dims.channels);
  if (key == "n_scenes") return std::to_string(cfg.n_scenes);
  if (key == "feature_shift") return format_double(cfg.feature_shift);
  if (key == "feature_scale") return format_double(cfg.feature_scale);
  if (key == "noise_sd") return format_double(cfg.noise_sd);
  if (key == "depth_noise_sd") return format_double(cfg.depth_noise_sd);
  if (key == "out_dir") return cfg.out_dir;
  throw UsageError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : config_keys()) out += k + " = " + get_key(cfg, k) + "\n";
  return out;
}

}  // namespace smart
