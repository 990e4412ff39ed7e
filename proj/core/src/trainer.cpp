#include "cedr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cedr/ops.hpp"
#include "cedr/optimizer.hpp"
#include "cedr/rng.hpp"
#include "cedr/scc_loss.hpp"
#include "json.hpp"

namespace cedr {

using nn::Matrix;
using nn::Tape;
using nn::Var;

std::optional<PairWeightMatrix> arm_pair_weights(const ExperimentConfig& config, Arm arm,
                                                 const Matrix& probs, const Matrix& embeddings,
                                                 std::span<const int> labels,
                                                 RunningCenters* running) {
  if (config.unit_weights || arm == Arm::ce_only || arm == Arm::scc) return std::nullopt;

  auto cpcm = [&] {
    ClassPairWeights cw;
    if (config.center_scope == CenterScope::running) {
      if (running == nullptr) throw InvalidInput("running center scope needs a RunningCenters state");
      cw = class_pair_weights(running->update(embeddings, labels));
    } else {
      cw = class_pair_weights(compute_centers(embeddings, labels, probs.cols()));
    }
    return cpcm_negative_weights(labels, cw, config.cpcm_method);
  };
  auto eaa = [&] {
    const EntropyProfile profile =
        classify_samples(probs, labels, EntropyThresholds::for_classes(probs.cols()));
    return eaa_pair_weights(sample_weight(profile, config.eaa_mode), labels);
  };

  switch (arm) {
    case Arm::scc_cpcm: return cpcm();
    case Arm::scc_eaa: return eaa();
    case Arm::full: return fuse_weights(cpcm(), eaa(), config.fuse_renormalize);
    default: return std::nullopt;
  }
}

BatchLoss batch_loss(Tape& tape, const ForwardVars& fv, std::span<const int> labels,
                     const ExperimentConfig& config, Arm arm, double lambda,
                     const PairWeightMatrix* weights) {
  BatchLoss out;
  const Var ce = cross_entropy(tape, fv.probs, labels);
  out.breakdown = joint_loss(tape.value(ce)(0, 0), 0.0, arm == Arm::ce_only ? 0.0 : lambda);
  out.total = ce;
  if (arm == Arm::ce_only) return out;

  if (!has_positive_pair(labels)) {
    out.degenerate = true;
    out.breakdown.skipped_anchors = labels.size();
    return out;
  }
  const InfonceVars nce = supervised_infonce(tape, fv.embeddings, labels, weights,
                                             {config.temperature},
                                             config.nce_prob_scaling ? &fv.probs : nullptr);
  const double nce_value = tape.value(nce.mean)(0, 0);
  out.breakdown = joint_loss(out.breakdown.ce, nce_value, lambda);
  out.breakdown.per_anchor = nce.per_anchor;
  out.breakdown.skipped_anchors = nce.skipped_anchors;
  out.total = nn::add(tape, ce, nn::scale(tape, nce.mean, lambda));
  return out;
}

SplitOutputs encode_samples(const Encoder& encoder, std::span<const PointCloudSample> samples,
                            std::size_t chunk) {
  SplitOutputs out;
  const std::size_t n = samples.size();
  out.probs = Matrix(n, encoder.config().num_classes);
  out.embeddings = Matrix(n, encoder.config().projection_dim());
  out.labels.reserve(n);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + chunk); ++i) idx.push_back(i);
    const ForwardOutputs f = encoder.encode(make_batch(samples, idx));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy(f.probs.row(k).begin(), f.probs.row(k).end(), out.probs.row(start + k).begin());
      std::copy(f.embeddings.row(k).begin(), f.embeddings.row(k).end(),
                out.embeddings.row(start + k).begin());
    }
  }
  for (const auto& s : samples) out.labels.push_back(s.label);
  return out;
}

Trainer::Trainer(ExperimentConfig config, const DatasetSplit& data)
    : config_(std::move(config)), data_(data), encoder_([&] {
        EncoderConfig ec = config_.encoder;
        ec.num_classes = data.num_classes();
        config_.encoder.num_classes = ec.num_classes;
        return Encoder(ec, config_.seed);
      }()) {
  config_.validate();
  if (data_.train.empty() || data_.test.empty()) throw ConfigError("dataset has an empty split");
}

EvalSummary Trainer::evaluate_split(int after_epoch) const {
  const SplitOutputs out = encode_samples(encoder_, data_.test);
  const EvalReport r = evaluate(out.probs, out.labels);
  return EvalSummary{after_epoch, r.overall_acc, r.avg_class_acc, r.macro_f1,
                     cross_entropy(out.probs, out.labels)};
}

RunRecord Trainer::run() {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config_;

  nn::OptimizerState opt;
  opt.lr_max = config_.lr_max;
  opt.lr_min = config_.lr_min;
  opt.momentum = config_.momentum;
  opt.weight_decay = config_.weight_decay;
  opt.total_epochs = config_.epochs;
  const std::vector<nn::ParamTensor*> params = encoder_.parameters();
  RunningCenters running(data_.num_classes(), config_.center_decay);

  rec.evals.push_back(evaluate_split(0));

  const std::size_t n = data_.train.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    opt.epoch = epoch;
    const double lambda = config_.lambda.at(epoch, config_.epochs);
    EpochRecord er;
    er.epoch = epoch + 1;
    er.lr = opt.learning_rate();
    er.lambda = lambda;

    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::derive(config_.seed, /*stream=*/0x5af1e, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    // Consecutive chunks; a trailing single sample joins the previous batch.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t s = 0; s < n; s += config_.batch_size) {
      batches.emplace_back(s, std::min(n, s + config_.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = n;
      batches.pop_back();
    }

    for (std::size_t b = 0; b < batches.size(); ++b) {
      const std::span<const std::size_t> idx(order.data() + batches[b].first,
                                             batches[b].second - batches[b].first);
      const PointBatch batch = make_batch(data_.train, idx);
      const std::vector<int> labels = labels_of(data_.train, idx);

      auto diverged = [&](const std::string& why) {
        return TrainingDiverged(why + " at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(b),
                                epoch + 1, b, encoder_.to_tensors());
      };
      Tape tape;
      BatchLoss loss;
      try {
        const Var x = tape.constant(batch.coords, "points");
        const ForwardVars fv = encoder_.forward(tape, x, batch.points_per_cloud);
        const std::optional<PairWeightMatrix> weights =
            arm_pair_weights(config_, config_.arm, tape.value(fv.probs),
                             tape.value(fv.embeddings), labels, &running);
        loss = batch_loss(tape, fv, labels, config_, config_.arm, lambda,
                          weights ? &*weights : nullptr);
        if (!std::isfinite(tape.value(loss.total)(0, 0))) throw diverged("non-finite loss");
        tape.backward(loss.total);
      } catch (const TrainingDiverged&) {
        throw;
      } catch (const NumericError& e) {
        throw diverged(e.what());
      } catch (const InvalidInput& e) {
        // Collapsed activations (e.g. an all-zero embedding row) after a blow-up.
        throw diverged(e.what());
      }
      nn::sgd_step(opt, params);

      er.ce += loss.breakdown.ce;
      er.nce += loss.breakdown.nce;
      er.total += loss.breakdown.total;
      er.skipped_anchors += loss.breakdown.skipped_anchors;
      er.degenerate_batches += loss.degenerate ? 1 : 0;
      ++er.batches;
    }
    er.ce /= er.batches;
    er.nce /= er.batches;
    er.total /= er.batches;
    rec.epochs.push_back(er);
    rec.evals.push_back(evaluate_split(epoch + 1));
  }

  const SplitOutputs out = encode_samples(encoder_, data_.test);
  rec.final_report = evaluate(out.probs, out.labels, &out.embeddings);
  rec.centers = center_distance_report(out.embeddings, out.labels, data_.num_classes());
  const EntropyProfile prof =
      classify_samples(out.probs, out.labels, EntropyThresholds::for_classes(data_.num_classes()));
  EntropyStats& es = rec.entropy;
  es.min = *std::min_element(prof.entropy.begin(), prof.entropy.end());
  es.max = *std::max_element(prof.entropy.begin(), prof.entropy.end());
  for (std::size_t i = 0; i < prof.size(); ++i) {
    if (prof.correct[i]) {
      es.mean_correct += prof.entropy[i];
      ++es.n_correct;
    } else {
      es.mean_wrong += prof.entropy[i];
      ++es.n_wrong;
    }
    es.outliers += prof.tag[i] == SampleTag::outlier;
    es.unstable += prof.tag[i] == SampleTag::unstable;
  }
  if (es.n_correct) es.mean_correct /= es.n_correct;
  if (es.n_wrong) es.mean_wrong /= es.n_wrong;

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::string RunRecord::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  for (const auto& key : config_keys()) cfg[key] = config_value(config, key);
  j["config"] = cfg;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"lambda", e.lambda}, {"ce", e.ce},
                           {"nce", e.nce}, {"total", e.total}, {"batches", e.batches},
                           {"skipped_anchors", e.skipped_anchors},
                           {"degenerate_batches", e.degenerate_batches}});
  }
  j["evals"] = nlohmann::ordered_json::array();
  for (const auto& e : evals) {
    j["evals"].push_back({{"after_epoch", e.after_epoch}, {"overall_acc", e.overall_acc},
                          {"avg_class_acc", e.avg_class_acc}, {"macro_f1", e.macro_f1},
                          {"test_ce", e.test_ce}});
  }
  j["final"] = {{"overall_acc", final_report.overall_acc},
                {"avg_class_acc", final_report.avg_class_acc},
                {"macro_f1", final_report.macro_f1},
                {"per_class_precision", final_report.per_class_precision},
                {"per_class_recall", final_report.per_class_recall},
                {"confusion", final_report.confusion},
                {"center_distance_sum", final_report.center_distance_sum},
                {"entropy_histogram", final_report.entropy_histogram}};
  std::vector<std::vector<double>> dist(centers.dist.rows());
  for (std::size_t i = 0; i < centers.dist.rows(); ++i) {
    dist[i].assign(centers.dist.row(i).begin(), centers.dist.row(i).end());
  }
  j["center_distance"] = dist;
  j["entropy"] = {{"mean_correct", entropy.mean_correct}, {"mean_wrong", entropy.mean_wrong},
                  {"n_correct", entropy.n_correct},       {"n_wrong", entropy.n_wrong},
                  {"min", entropy.min},                   {"max", entropy.max},
                  {"outliers", entropy.outliers},         {"unstable", entropy.unstable}};
  if (include_timing) j["wall_time_s"] = wall_time_s;
  return j.dump(2);
}

RunRecord train(const ExperimentConfig& config, const DatasetSplit& data, Encoder* trained) {
  Trainer t(config, data);
  RunRecord r = t.run();
  if (trained != nullptr) *trained = t.encoder();
  return r;
}

DatasetSplit load_or_build_dataset(const ExperimentConfig& config) {
  if (!config.data_dir.empty()) return read_dataset(config.data_dir);
  return build_dataset(config.data);
}

}  // namespace cedr
