// cedr: command-line front end for data generation, training, ablations,
// evaluation, and analysis exports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "cedr/ablation.hpp"
#include "cedr/checkpoint.hpp"
#include "cedr/config.hpp"
#include "cedr/dataset.hpp"
#include "cedr/eaa.hpp"
#include "cedr/metrics.hpp"
#include "cedr/trainer.hpp"

namespace fs = std::filesystem;
using namespace cedr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// Registers --<key> for every config key; values are applied after the file.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "Flat key = value config file");
    for (const auto& key : config_keys()) {
      app->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
          "Override config key '" + key + "'");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = file.empty() ? ExperimentConfig{} : load_config(file);
    for (const auto& [k, v] : overrides) apply_config_value(c, k, v);
    c.encoder.num_classes = c.data.num_classes;
    c.validate();
    return c;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

fs::path output_dir(const ExperimentConfig& c) {
  const fs::path dir = c.out_dir.empty() ? fs::path("cedr_out") : c.out_dir;
  fs::create_directories(dir);
  return dir;
}

int handle_divergence(const TrainingDiverged& e, const ExperimentConfig& c) {
  const fs::path dump = output_dir(c) / "diverged_weights.ckpt";
  nn::save_checkpoint(dump, e.weights());
  std::cerr << "error: " << e.what() << "\nweights dumped to " << dump << "\n";
  return kExitNumeric;
}

int cmd_gen_data(std::size_t classes, std::size_t train, std::size_t test, std::size_t points,
                 std::uint64_t seed, const fs::path& out) {
  DatasetOptions opt;
  opt.num_classes = classes;
  opt.train_per_class = train;
  opt.test_per_class = test;
  opt.num_points = points;
  opt.seed = seed;
  const DatasetSplit split = build_dataset(opt);
  write_dataset(out, split);
  std::cout << "wrote " << split.train.size() << " train / " << split.test.size()
            << " test samples (" << classes << " classes, " << points << " points) to " << out
            << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& c) {
  const DatasetSplit data = load_or_build_dataset(c);
  Encoder model(c.encoder, c.seed);
  RunRecord rec;
  try {
    rec = train(c, data, &model);
  } catch (const TrainingDiverged& e) {
    return handle_divergence(e, c);
  }
  const fs::path dir = output_dir(c);
  write_text(dir / "run.json", rec.to_json());
  write_text(dir / "config.txt", to_config_text(c));
  nn::save_checkpoint(dir / "model.ckpt", model.to_tensors());
  std::cout << "arm=" << to_string(c.arm) << " seed=" << c.seed
            << " overall_acc=" << rec.final_report.overall_acc
            << " avg_class_acc=" << rec.final_report.avg_class_acc
            << " macro_f1=" << rec.final_report.macro_f1 << " (" << rec.wall_time_s << " s)\n"
            << "outputs in " << dir << "\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& c, const std::string& seed_text, bool lambda_grid,
               unsigned jobs) {
  const DatasetSplit data = load_or_build_dataset(c);
  const auto seeds = parse_seed_list(seed_text);
  AblationTable table;
  try {
    table = lambda_grid ? run_lambda_grid(c, data, seeds, default_lambda_grid(), jobs)
                        : run_ablation(c, data, seeds, {std::begin(kAllArms), std::end(kAllArms)}, jobs);
  } catch (const TrainingDiverged& e) {
    return handle_divergence(e, c);
  }
  const fs::path dir = output_dir(c);
  const fs::path csv = dir / (lambda_grid ? "lambda_grid.csv" : "ablation.csv");
  {
    std::ofstream out(csv);
    write_ablation_csv(out, table, lambda_grid ? "lambda" : "arm");
  }
  for (const auto& row : table.rows) {
    for (std::size_t s = 0; s < row.seeds.size(); ++s) {
      write_text(dir / ("run_" + row.name + "_seed" + std::to_string(row.seeds[s]) + ".json"),
                 row.runs[s].to_json());
    }
  }
  write_ablation_csv(std::cout, table, lambda_grid ? "lambda" : "arm");
  std::cout << "wrote " << csv << "\n";
  return 0;
}

struct LoadedModel {
  Encoder encoder;
  DatasetSplit data;
  SplitOutputs outputs;
};

LoadedModel load_model(const fs::path& checkpoint, const fs::path& data_dir) {
  Encoder enc = Encoder::from_tensors(nn::load_checkpoint(checkpoint));
  DatasetSplit data = read_dataset(data_dir);
  if (data.num_classes() != enc.config().num_classes) {
    throw ConfigError("checkpoint has " + std::to_string(enc.config().num_classes) +
                      " classes, dataset has " + std::to_string(data.num_classes()));
  }
  SplitOutputs out = encode_samples(enc, data.test);
  return {std::move(enc), std::move(data), std::move(out)};
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data_dir) {
  const LoadedModel m = load_model(checkpoint, data_dir);
  const EvalReport r = evaluate(m.outputs.probs, m.outputs.labels, &m.outputs.embeddings);
  std::cout << report_to_json(r, m.data.class_names) << "\n";
  return 0;
}

int cmd_analyze(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir) {
  const LoadedModel m = load_model(checkpoint, data_dir);
  const auto& o = m.outputs;
  const std::size_t c = m.data.num_classes();
  fs::create_directories(out_dir);

  const EvalReport r = evaluate(o.probs, o.labels, &o.embeddings);
  {
    std::ofstream f(out_dir / "confusion.csv");
    write_confusion_csv(f, r, m.data.class_names);
  }
  const CenterDistanceReport cd = center_distance_report(o.embeddings, o.labels, c);
  {
    std::ofstream f(out_dir / "center_distance.csv");
    write_center_distance_csv(f, cd.dist, m.data.class_names);
  }
  {
    std::ofstream f(out_dir / "center_distance_sums.csv");
    f << "class,distance_sum,present\n";
    f.precision(17);
    for (std::size_t k = 0; k < c; ++k) {
      f << m.data.class_names[k] << ',' << cd.sums[k] << ',' << (cd.present[k] ? 1 : 0) << '\n';
    }
  }
  const EntropyProfile prof = classify_samples(o.probs, o.labels, EntropyThresholds::for_classes(c));
  {
    std::ofstream f(out_dir / "entropy.csv");
    write_entropy_csv(f, prof);
  }
  export_embeddings(out_dir / "embeddings.csv", o.embeddings, o.labels, prof);
  write_text(out_dir / "summary.json", report_to_json(r, m.data.class_names));
  std::cout << "wrote confusion.csv, center_distance.csv, center_distance_sums.csv, entropy.csv, "
               "embeddings.csv, summary.json to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive embedding refinement for point cloud classification"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic point cloud dataset");
  std::size_t classes = 8, train_n = 50, test_n = 20, points = 256;
  std::uint64_t data_seed = 0;
  std::string gen_out;
  gen->add_option("--classes", classes, "Number of classes (2..8)")->capture_default_str();
  gen->add_option("--train", train_n, "Training samples per class")->capture_default_str();
  gen->add_option("--test", test_n, "Test samples per class")->capture_default_str();
  gen->add_option("--points", points, "Points per cloud")->capture_default_str();
  gen->add_option("--seed", data_seed, "Generation seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one arm");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd);

  auto* ablate = app.add_subcommand("ablate", "Run every arm (or the lambda grid) over seeds");
  ConfigFlags ablate_flags;
  ablate_flags.attach(ablate);
  std::string seed_list = "0..4";
  bool lambda_grid = false;
  unsigned jobs = 1;
  ablate->add_option("--seeds", seed_list, "Seed list, e.g. 0..4 or 0,3,7")->capture_default_str();
  ablate->add_flag("--lambda-grid", lambda_grid,
                   "Compare lambda in {0.05, 0.1, 0.2, 0.3, linear 0.1->0.2} for the configured arm");
  ablate->add_option("--jobs", jobs, "Parallel training runs")->capture_default_str();

  std::string checkpoint, data_path, analyze_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset's test split");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_path)->required();

  auto* analyze = app.add_subcommand("analyze", "Export confusion, distance, entropy, embedding CSVs");
  analyze->add_option("--checkpoint", checkpoint)->required();
  analyze->add_option("--data", data_path)->required();
  analyze->add_option("--out", analyze_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(classes, train_n, test_n, points, data_seed, gen_out);
    if (*train_cmd) return cmd_train(train_flags.resolve());
    if (*ablate) return cmd_ablate(ablate_flags.resolve(), seed_list, lambda_grid, jobs);
    if (*eval) return cmd_eval(checkpoint, data_path);
    if (*analyze) return cmd_analyze(checkpoint, data_path, analyze_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
