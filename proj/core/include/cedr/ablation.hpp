#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cedr/config.hpp"
#include "cedr/dataset.hpp"
#include "cedr/trainer.hpp"

namespace cedr {

/// One row of an ablation table: a configuration run over several seeds.
struct AblationRow {
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::vector<double> overall_acc;  // per seed
  std::vector<double> avg_class_acc;
  std::vector<RunRecord> runs;

  double overall_mean() const;
  double overall_std() const;  // sample standard deviation (n − 1)
  double avg_class_mean() const;
  double avg_class_std() const;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  const AblationRow& row(const std::string& name) const;
};

double mean_of(const std::vector<double>& v);
double sample_std_of(const std::vector<double>& v);

/// Runs each arm over `seeds` on the shared dataset. `jobs` > 1 trains
/// independent (arm, seed) runs on worker threads; results do not depend on it.
AblationTable run_ablation(const ExperimentConfig& base, const DatasetSplit& data,
                           const std::vector<std::uint64_t>& seeds,
                           const std::vector<Arm>& arms = {std::begin(kAllArms), std::end(kAllArms)},
                           unsigned jobs = 1);

struct LambdaSetting {
  std::string label;
  LambdaSchedule schedule;
};

/// {0.05, 0.1, 0.2, 0.3, linear 0.1→0.2}.
std::vector<LambdaSetting> default_lambda_grid();

/// Runs base.arm with each λ setting over `seeds`.
AblationTable run_lambda_grid(const ExperimentConfig& base, const DatasetSplit& data,
                              const std::vector<std::uint64_t>& seeds,
                              const std::vector<LambdaSetting>& grid = default_lambda_grid(),
                              unsigned jobs = 1);

/// Columns: <key>,overall_acc_mean,overall_acc_std,avg_class_acc_mean,avg_class_acc_std,
/// then overall_acc_seed<s> and avg_class_acc_seed<s> per seed.
void write_ablation_csv(std::ostream& out, const AblationTable& table,
                        const std::string& key_column = "arm");

/// "0..4", "0,2,5", or "3".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace cedr
