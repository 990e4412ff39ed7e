#include "cedr/ablation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cedr/error.hpp"

namespace cedr {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double AblationRow::overall_mean() const { return mean_of(overall_acc); }
double AblationRow::overall_std() const { return sample_std_of(overall_acc); }
double AblationRow::avg_class_mean() const { return mean_of(avg_class_acc); }
double AblationRow::avg_class_std() const { return sample_std_of(avg_class_acc); }

const AblationRow& AblationTable::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw InvalidInput("no ablation row named '" + name + "'");
}

namespace {

struct Job {
  std::size_t row;
  std::size_t seed_index;
  ExperimentConfig config;
};

AblationTable run_jobs(std::vector<std::string> names, const std::vector<std::uint64_t>& seeds,
                       std::vector<Job> jobs, const DatasetSplit& data, unsigned workers) {
  AblationTable table;
  for (auto& n : names) {
    AblationRow r;
    r.name = std::move(n);
    r.seeds = seeds;
    r.overall_acc.assign(seeds.size(), 0.0);
    r.avg_class_acc.assign(seeds.size(), 0.0);
    r.runs.resize(seeds.size());
    table.rows.push_back(std::move(r));
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        RunRecord rec = train(jobs[k].config, data);
        AblationRow& row = table.rows[jobs[k].row];
        row.overall_acc[jobs[k].seed_index] = rec.final_report.overall_acc;
        row.avg_class_acc[jobs[k].seed_index] = rec.final_report.avg_class_acc;
        row.runs[jobs[k].seed_index] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

}  // namespace

AblationTable run_ablation(const ExperimentConfig& base, const DatasetSplit& data,
                           const std::vector<std::uint64_t>& seeds, const std::vector<Arm>& arms,
                           unsigned jobs) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  std::vector<std::string> names;
  std::vector<Job> work;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    names.emplace_back(to_string(arms[a]));
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      ExperimentConfig c = base;
      c.arm = arms[a];
      c.seed = seeds[s];
      work.push_back({a, s, std::move(c)});
    }
  }
  return run_jobs(std::move(names), seeds, std::move(work), data, jobs);
}

std::vector<LambdaSetting> default_lambda_grid() {
  return {{"0.05", LambdaSchedule::constant(0.05)},
          {"0.1", LambdaSchedule::constant(0.1)},
          {"0.2", LambdaSchedule::constant(0.2)},
          {"0.3", LambdaSchedule::constant(0.3)},
          {"linear_0.1_0.2", LambdaSchedule::ramp(0.1, 0.2)}};
}

AblationTable run_lambda_grid(const ExperimentConfig& base, const DatasetSplit& data,
                              const std::vector<std::uint64_t>& seeds,
                              const std::vector<LambdaSetting>& grid, unsigned jobs) {
  if (seeds.empty()) throw ConfigError("lambda grid needs at least one seed");
  std::vector<std::string> names;
  std::vector<Job> work;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    names.push_back(grid[g].label);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      ExperimentConfig c = base;
      c.lambda = grid[g].schedule;
      c.seed = seeds[s];
      work.push_back({g, s, std::move(c)});
    }
  }
  return run_jobs(std::move(names), seeds, std::move(work), data, jobs);
}

void write_ablation_csv(std::ostream& out, const AblationTable& table, const std::string& key_column) {
  if (table.rows.empty()) return;
  const auto& seeds = table.rows.front().seeds;
  out << key_column << ",overall_acc_mean,overall_acc_std,avg_class_acc_mean,avg_class_acc_std";
  for (auto s : seeds) out << ",overall_acc_seed" << s;
  for (auto s : seeds) out << ",avg_class_acc_seed" << s;
  out << '\n';
  out << std::setprecision(10);
  for (const auto& r : table.rows) {
    out << r.name << ',' << r.overall_mean() << ',' << r.overall_std() << ','
        << r.avg_class_mean() << ',' << r.avg_class_std();
    for (double v : r.overall_acc) out << ',' << v;
    for (double v : r.avg_class_acc) out << ',' << v;
    out << '\n';
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  auto number = [&](const std::string& s) -> std::uint64_t {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad seed list '" + text + "'");
    }
  };
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(number(part));
      continue;
    }
    const auto lo = number(part.substr(0, dots));
    const auto hi = number(part.substr(dots + 2));
    if (hi < lo) throw ConfigError("bad seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

}  // namespace cedr
