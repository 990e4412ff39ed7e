#include "cedr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cedr/error.hpp"

namespace cedr {

const char* to_string(Arm arm) {
  switch (arm) {
    case Arm::ce_only: return "ce_only";
    case Arm::scc: return "scc";
    case Arm::scc_cpcm: return "scc_cpcm";
    case Arm::scc_eaa: return "scc_eaa";
    case Arm::full: return "full";
  }
  return "?";
}

Arm parse_arm(const std::string& text) {
  for (Arm a : kAllArms) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown arm '" + text + "' (ce_only|scc|scc_cpcm|scc_eaa|full)");
}

void ExperimentConfig::validate() const {
  if (lambda.start < 0.0 || lambda.end < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(lr_max >= lr_min) || lr_min < 0.0) throw ConfigError("need 0 <= lr_min <= lr_max");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (center_decay < 0.0 || center_decay >= 1.0) throw ConfigError("center_decay must be in [0, 1)");
  encoder.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 0) throw ConfigError(key + ": must be nonnegative");
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"arm", {[](C& c, const std::string& v) { c.arm = parse_arm(v); },
               [](const C& c) { return std::string(to_string(c.arm)); }}},
      {"lambda", {[](C& c, const std::string& v) {
                    c.lambda.start = to_double("lambda", v);
                    if (!c.lambda.linear) c.lambda.end = c.lambda.start;
                  },
                  [](const C& c) { return fmt(c.lambda.start); }}},
      {"lambda_schedule", {[](C& c, const std::string& v) {
                             if (v == "constant") {
                               c.lambda.linear = false;
                               c.lambda.end = c.lambda.start;
                             } else if (v == "linear") {
                               c.lambda.linear = true;
                             } else {
                               throw ConfigError("lambda_schedule: expected constant|linear, got '" + v + "'");
                             }
                           },
                           [](const C& c) { return std::string(c.lambda.linear ? "linear" : "constant"); }}},
      {"lambda_end", {[](C& c, const std::string& v) { c.lambda.end = to_double("lambda_end", v); },
                      [](const C& c) { return fmt(c.lambda.end); }}},
      {"eaa_mode", {[](C& c, const std::string& v) {
                      if (v == "varying") c.eaa_mode = WeightMode::varying;
                      else if (v == "fixed") c.eaa_mode = WeightMode::fixed;
                      else throw ConfigError("eaa_mode: expected varying|fixed, got '" + v + "'");
                    },
                    [](const C& c) { return std::string(to_string(c.eaa_mode)); }}},
      {"cpcm_method", {[](C& c, const std::string& v) {
                         if (v == "all_pairs") c.cpcm_method = MiningMethod::all_pairs;
                         else if (v == "nearest_only") c.cpcm_method = MiningMethod::nearest_only;
                         else throw ConfigError("cpcm_method: expected all_pairs|nearest_only, got '" + v + "'");
                       },
                       [](const C& c) { return std::string(to_string(c.cpcm_method)); }}},
      {"center_scope", {[](C& c, const std::string& v) {
                          if (v == "batch") c.center_scope = CenterScope::batch;
                          else if (v == "running") c.center_scope = CenterScope::running;
                          else throw ConfigError("center_scope: expected batch|running, got '" + v + "'");
                        },
                        [](const C& c) { return std::string(to_string(c.center_scope)); }}},
      {"center_decay", {[](C& c, const std::string& v) { c.center_decay = to_double("center_decay", v); },
                        [](const C& c) { return fmt(c.center_decay); }}},
      {"temperature", {[](C& c, const std::string& v) { c.temperature = to_double("temperature", v); },
                       [](const C& c) { return fmt(c.temperature); }}},
      {"nce_prob_scaling", {[](C& c, const std::string& v) { c.nce_prob_scaling = to_bool("nce_prob_scaling", v); },
                            [](const C& c) { return std::string(c.nce_prob_scaling ? "true" : "false"); }}},
      {"fuse_renormalize", {[](C& c, const std::string& v) { c.fuse_renormalize = to_bool("fuse_renormalize", v); },
                            [](const C& c) { return std::string(c.fuse_renormalize ? "true" : "false"); }}},
      {"unit_weights", {[](C& c, const std::string& v) { c.unit_weights = to_bool("unit_weights", v); },
                        [](const C& c) { return std::string(c.unit_weights ? "true" : "false"); }}},
      {"batch_size", {[](C& c, const std::string& v) { c.batch_size = to_size("batch_size", v); },
                      [](const C& c) { return std::to_string(c.batch_size); }}},
      {"epochs", {[](C& c, const std::string& v) { c.epochs = static_cast<int>(to_int("epochs", v)); },
                  [](const C& c) { return std::to_string(c.epochs); }}},
      {"seed", {[](C& c, const std::string& v) { c.seed = to_size("seed", v); },
                [](const C& c) { return std::to_string(c.seed); }}},
      {"lr_max", {[](C& c, const std::string& v) { c.lr_max = to_double("lr_max", v); },
                  [](const C& c) { return fmt(c.lr_max); }}},
      {"lr_min", {[](C& c, const std::string& v) { c.lr_min = to_double("lr_min", v); },
                  [](const C& c) { return fmt(c.lr_min); }}},
      {"momentum", {[](C& c, const std::string& v) { c.momentum = to_double("momentum", v); },
                    [](const C& c) { return fmt(c.momentum); }}},
      {"weight_decay", {[](C& c, const std::string& v) { c.weight_decay = to_double("weight_decay", v); },
                        [](const C& c) { return fmt(c.weight_decay); }}},
      {"hidden_dims", {[](C& c, const std::string& v) {
                         std::vector<std::size_t> dims;
                         std::stringstream ss(v);
                         std::string part;
                         while (std::getline(ss, part, ',')) dims.push_back(to_size("hidden_dims", trim(part)));
                         if (dims.empty()) throw ConfigError("hidden_dims: empty list");
                         c.encoder.hidden_dims = dims;
                       },
                       [](const C& c) {
                         std::string s;
                         for (auto d : c.encoder.hidden_dims) s += (s.empty() ? "" : ",") + std::to_string(d);
                         return s;
                       }}},
      {"data", {[](C& c, const std::string& v) { c.data_dir = v; },
                [](const C& c) { return c.data_dir.string(); }}},
      {"classes", {[](C& c, const std::string& v) {
                     c.data.num_classes = to_size("classes", v);
                     c.encoder.num_classes = c.data.num_classes;
                   },
                   [](const C& c) { return std::to_string(c.data.num_classes); }}},
      {"train_per_class", {[](C& c, const std::string& v) { c.data.train_per_class = to_size("train_per_class", v); },
                           [](const C& c) { return std::to_string(c.data.train_per_class); }}},
      {"test_per_class", {[](C& c, const std::string& v) { c.data.test_per_class = to_size("test_per_class", v); },
                          [](const C& c) { return std::to_string(c.data.test_per_class); }}},
      {"points", {[](C& c, const std::string& v) { c.data.num_points = to_size("points", v); },
                  [](const C& c) { return std::to_string(c.data.num_points); }}},
      {"data_seed", {[](C& c, const std::string& v) { c.data.seed = to_size("data_seed", v); },
                     [](const C& c) { return std::to_string(c.data.seed); }}},
      {"translate_frac", {[](C& c, const std::string& v) { c.data.perturbation.translate_frac = to_double("translate_frac", v); },
                          [](const C& c) { return fmt(c.data.perturbation.translate_frac); }}},
      {"clutter_frac", {[](C& c, const std::string& v) { c.data.perturbation.clutter_frac = to_double("clutter_frac", v); },
                        [](const C& c) { return fmt(c.data.perturbation.clutter_frac); }}},
      {"occlusion_radius", {[](C& c, const std::string& v) { c.data.perturbation.occlusion_radius_frac = to_double("occlusion_radius", v); },
                            [](const C& c) { return fmt(c.data.perturbation.occlusion_radius_frac); }}},
      {"out", {[](C& c, const std::string& v) { c.out_dir = v; },
               [](const C& c) { return c.out_dir.string(); }}},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, trim(value));
}

std::string config_value(const ExperimentConfig& config, const std::string& key) {
  return field(key).get(config);
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + config_value(config, key) + "\n";
  return out;
}

}  // namespace cedr
