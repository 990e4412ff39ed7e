#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cedr/cpcm.hpp"
#include "cedr/dataset.hpp"
#include "cedr/eaa.hpp"
#include "cedr/encoder.hpp"
#include "cedr/scc_loss.hpp"

namespace cedr {

/// Which pair-weight source feeds the contrastive term.
///   ce_only   cross-entropy alone
///   scc       + contrastive, unit weights
///   scc_cpcm  + contrastive, class-center weights
///   scc_eaa   + contrastive, entropy weights
///   full      + contrastive, fused weights
enum class Arm { ce_only, scc, scc_cpcm, scc_eaa, full };

inline constexpr Arm kAllArms[] = {Arm::ce_only, Arm::scc, Arm::scc_cpcm, Arm::scc_eaa, Arm::full};

const char* to_string(Arm arm);
Arm parse_arm(const std::string& text);

struct ExperimentConfig {
  Arm arm = Arm::full;
  LambdaSchedule lambda = LambdaSchedule::constant(0.1);
  WeightMode eaa_mode = WeightMode::varying;
  MiningMethod cpcm_method = MiningMethod::all_pairs;
  CenterScope center_scope = CenterScope::batch;
  double center_decay = 0.9;
  double temperature = 1.0;
  bool nce_prob_scaling = false;
  bool fuse_renormalize = true;
  bool unit_weights = false;  // debug: force every pair weight to 1

  std::size_t batch_size = 32;
  int epochs = 60;
  std::uint64_t seed = 0;

  double lr_max = 0.1;
  double lr_min = 0.001;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  EncoderConfig encoder;

  std::filesystem::path data_dir;  // empty: synthesize from `data`
  DatasetOptions data;
  std::filesystem::path out_dir;

  void validate() const;
};

/// Every key accepted in config files and as --key flags.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws ConfigError on unknown keys or bad values.
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` lines; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Current value of a key in its text form (inverse of apply_config_value).
std::string config_value(const ExperimentConfig& config, const std::string& key);
/// All keys, in config_keys() order, as a parseable config file.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace cedr
