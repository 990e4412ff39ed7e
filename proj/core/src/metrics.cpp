#include "cedr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cedr/cpcm.hpp"
#include "cedr/error.hpp"
#include "json.hpp"

namespace cedr {

using nn::Matrix;

EvalReport evaluate(std::span<const int> predicted, std::span<const int> labels,
                    std::size_t num_classes) {
  if (predicted.size() != labels.size()) {
    throw ShapeError(std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  EvalReport r;
  r.num_samples = labels.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    const int p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw InvalidInput("class id out of range at sample " + std::to_string(i));
    }
    ++r.confusion[t][p];
  }
  r.support.assign(num_classes, 0);
  std::vector<std::size_t> predicted_count(num_classes, 0);
  std::size_t trace = 0;
  for (std::size_t t = 0; t < num_classes; ++t) {
    for (std::size_t p = 0; p < num_classes; ++p) {
      r.support[t] += r.confusion[t][p];
      predicted_count[p] += r.confusion[t][p];
    }
    trace += r.confusion[t][t];
  }
  r.per_class_precision.assign(num_classes, 0.0);
  r.per_class_recall.assign(num_classes, 0.0);
  r.per_class_f1.assign(num_classes, 0.0);
  std::size_t with_support = 0;
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double prec = predicted_count[c] ? tp / predicted_count[c] : 0.0;
    const double rec = r.support[c] ? tp / r.support[c] : 0.0;
    r.per_class_precision[c] = prec;
    r.per_class_recall[c] = rec;
    r.per_class_f1[c] = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    if (r.support[c] == 0) continue;
    ++with_support;
    recall_sum += rec;
    f1_sum += r.per_class_f1[c];
  }
  if (r.num_samples > 0) r.overall_acc = static_cast<double>(trace) / r.num_samples;
  if (with_support > 0) {
    r.avg_class_acc = recall_sum / with_support;
    r.macro_f1 = f1_sum / with_support;
  }
  return r;
}

EvalReport evaluate(const Matrix& probs, std::span<const int> labels, const Matrix* embeddings) {
  std::vector<int> predicted(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    predicted[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  EvalReport r = evaluate(predicted, labels, probs.cols());
  r.entropy_histogram = entropy_histogram(shannon_entropy(probs), probs.cols());
  if (embeddings != nullptr) {
    r.center_distance_sum = center_distance_report(*embeddings, labels, probs.cols()).sums;
  }
  return r;
}

CenterDistanceReport center_distance_report(const Matrix& embeddings, std::span<const int> labels,
                                            std::size_t num_classes) {
  const ClassCenters centers = compute_centers(embeddings, labels, num_classes);
  CenterDistanceReport out;
  out.present = centers.present;
  out.dist = Matrix(num_classes, num_classes);
  out.sums.assign(num_classes, 0.0);
  for (std::size_t i = 0; i < num_classes; ++i) {
    for (std::size_t j = 0; j < num_classes; ++j) {
      if (i == j || !centers.present[i] || !centers.present[j]) continue;
      double ss = 0.0;
      for (std::size_t d = 0; d < embeddings.cols(); ++d) {
        const double diff = centers.centers(i, d) - centers.centers(j, d);
        ss += diff * diff;
      }
      out.dist(i, j) = std::sqrt(ss);
    }
  }
  for (std::size_t i = 0; i < num_classes; ++i) {
    for (std::size_t j = 0; j < num_classes; ++j) out.sums[i] += out.dist(i, j);
  }
  return out;
}

std::vector<std::size_t> entropy_histogram(std::span<const double> entropy, std::size_t num_classes,
                                           std::size_t bins) {
  if (bins == 0 || num_classes < 2) throw InvalidInput("entropy histogram needs bins and >= 2 classes");
  const double top = std::log2(static_cast<double>(num_classes));
  std::vector<std::size_t> h(bins, 0);
  for (double e : entropy) {
    const double x = std::clamp(e / top, 0.0, 1.0);
    ++h[std::min(bins - 1, static_cast<std::size_t>(x * bins))];
  }
  return h;
}

void write_confusion_csv(std::ostream& out, const EvalReport& report,
                         const std::vector<std::string>& class_names) {
  if (class_names.size() != report.confusion.size()) {
    throw ShapeError("confusion matrix has " + std::to_string(report.confusion.size()) +
                     " classes, got " + std::to_string(class_names.size()) + " names");
  }
  out << "true\\pred";
  for (const auto& n : class_names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < class_names.size(); ++t) {
    out << class_names[t];
    for (auto v : report.confusion[t]) out << ',' << v;
    out << '\n';
  }
}

std::string report_to_json(const EvalReport& r, const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["num_samples"] = r.num_samples;
  j["overall_acc"] = r.overall_acc;
  j["avg_class_acc"] = r.avg_class_acc;
  j["macro_f1"] = r.macro_f1;
  j["class_names"] = class_names;
  j["per_class_precision"] = r.per_class_precision;
  j["per_class_recall"] = r.per_class_recall;
  j["per_class_f1"] = r.per_class_f1;
  j["support"] = r.support;
  j["confusion"] = r.confusion;
  if (!r.center_distance_sum.empty()) j["center_distance_sum"] = r.center_distance_sum;
  if (!r.entropy_histogram.empty()) j["entropy_histogram"] = r.entropy_histogram;
  return j.dump(2);
}

void export_embeddings(std::ostream& out, const Matrix& embeddings, std::span<const int> labels,
                       const EntropyProfile& profile) {
  if (labels.size() != embeddings.rows() || profile.size() != embeddings.rows()) {
    throw ShapeError("export_embeddings: " + std::to_string(embeddings.rows()) + " rows, " +
                     std::to_string(labels.size()) + " labels, " + std::to_string(profile.size()) +
                     " entropy entries");
  }
  out << "sample_id,label,entropy,tag";
  for (std::size_t d = 0; d < embeddings.cols(); ++d) out << ",e" << d;
  out << '\n';
  out << std::setprecision(9);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    out << i << ',' << labels[i] << ',' << profile.entropy[i] << ',' << to_string(profile.tag[i]);
    for (double v : embeddings.row(i)) out << ',' << v;
    out << '\n';
  }
}

void export_embeddings(const std::filesystem::path& path, const Matrix& embeddings,
                       std::span<const int> labels, const EntropyProfile& profile) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  export_embeddings(out, embeddings, labels, profile);
  if (!out) throw Error("failed writing " + path.string());
}

EmbeddingTable read_embeddings_csv(std::istream& in) {
  EmbeddingTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embedding CSV is empty");
  const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 4) throw FormatError("embedding CSV header has " + std::to_string(columns) + " columns");
  const std::size_t dim = columns - 4;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) {
      throw FormatError("embedding CSV row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " columns, expected " + std::to_string(columns));
    }
    t.labels.push_back(std::stoi(cells[1]));
    t.entropy.push_back(std::stod(cells[2]));
    t.tags.push_back(cells[3]);
    for (std::size_t d = 0; d < dim; ++d) values.push_back(std::stod(cells[4 + d]));
    ++row;
  }
  t.embeddings = Matrix(row, dim, std::move(values));
  return t;
}

}  // namespace cedr
