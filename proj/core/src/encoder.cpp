#include "cedr/encoder.hpp"

#include <cmath>
#include <map>

#include "cedr/error.hpp"
#include "cedr/ops.hpp"
#include "cedr/rng.hpp"

namespace cedr {

using nn::Matrix;
using nn::ParamTensor;
using nn::Tape;
using nn::Var;

void EncoderConfig::validate() const {
  if (point_dim == 0) throw ConfigError("point_dim must be positive");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims must not be empty");
  for (auto d : hidden_dims) {
    if (d == 0) throw ConfigError("hidden_dims entries must be positive");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

Encoder::Encoder(EncoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng = Rng::derive(seed, /*stream=*/0x1417, 0);
  std::size_t in = config_.point_dim;
  for (std::size_t i = 0; i < config_.hidden_dims.size(); ++i) {
    const std::size_t out = config_.hidden_dims[i];
    const std::string prefix = "mlp" + std::to_string(i);
    mlp_.push_back(Layer{
        ParamTensor(prefix + ".weight", uniform_matrix(in, out, std::sqrt(6.0 / in), rng)),
        ParamTensor(prefix + ".bias", Matrix(1, out))});
    in = out;
  }
  const std::size_t d = config_.global_dim();
  const std::size_t c = config_.num_classes;
  cls_ = Layer{ParamTensor("cls.weight", uniform_matrix(d, c, std::sqrt(6.0 / (d + c)), rng)),
               ParamTensor("cls.bias", Matrix(1, c))};
  prj_ = Layer{ParamTensor("prj.weight", uniform_matrix(d, d, std::sqrt(6.0 / (2 * d)), rng)),
               ParamTensor("prj.bias", Matrix(1, d))};
}

Encoder Encoder::from_tensors(const std::vector<nn::NamedTensor>& tensors) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  auto get = [&](const std::string& name) -> const Matrix& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks tensor '" + name + "'");
    return *it->second;
  };

  Encoder enc;
  for (std::size_t i = 0; by_name.count("mlp" + std::to_string(i) + ".weight"); ++i) {
    const std::string prefix = "mlp" + std::to_string(i);
    const Matrix& w = get(prefix + ".weight");
    if (i == 0) enc.config_.point_dim = w.rows();
    enc.config_.hidden_dims.clear();
    enc.mlp_.push_back(Layer{ParamTensor(prefix + ".weight", w),
                             ParamTensor(prefix + ".bias", get(prefix + ".bias"))});
  }
  enc.config_.hidden_dims.clear();
  for (const auto& l : enc.mlp_) enc.config_.hidden_dims.push_back(l.weight.value.cols());
  const Matrix& cw = get("cls.weight");
  enc.config_.num_classes = cw.cols();
  enc.cls_ = Layer{ParamTensor("cls.weight", cw), ParamTensor("cls.bias", get("cls.bias"))};
  enc.prj_ = Layer{ParamTensor("prj.weight", get("prj.weight")),
                   ParamTensor("prj.bias", get("prj.bias"))};
  enc.config_.validate();

  std::size_t in = enc.config_.point_dim;
  for (const auto& l : enc.mlp_) {
    if (l.weight.value.rows() != in || l.bias.value.cols() != l.weight.value.cols()) {
      throw FormatError("inconsistent layer shapes for '" + l.weight.name + "'");
    }
    in = l.weight.value.cols();
  }
  if (cw.rows() != in || enc.prj_.weight.value.rows() != in || enc.prj_.weight.value.cols() != in) {
    throw FormatError("head shapes do not match global feature width " + std::to_string(in));
  }
  return enc;
}

void Encoder::check_batch(const Matrix& coords, std::size_t points_per_cloud) const {
  if (points_per_cloud == 0 || coords.rows() == 0) {
    throw InvalidInput("encode: empty point cloud");
  }
  if (coords.cols() != config_.point_dim) {
    throw ShapeError("encode: points have " + std::to_string(coords.cols()) +
                     " coordinates, encoder expects " + std::to_string(config_.point_dim));
  }
  if (coords.rows() % points_per_cloud != 0) {
    throw ShapeError("encode: " + std::to_string(coords.rows()) + " points is not a multiple of " +
                     std::to_string(points_per_cloud));
  }
  if (!coords.all_finite()) throw InvalidInput("encode: non-finite coordinates");
}

ForwardVars Encoder::forward(Tape& tape, Var points, std::size_t points_per_cloud) {
  check_batch(tape.value(points), points_per_cloud);
  Var h = points;
  for (auto& layer : mlp_) {
    h = nn::relu(tape, nn::dense(tape, h, tape.param(layer.weight), tape.param(layer.bias)));
  }
  ForwardVars out;
  out.global_features = nn::max_pool_groups(tape, h, points_per_cloud);
  out.logits = nn::dense(tape, out.global_features, tape.param(cls_.weight), tape.param(cls_.bias));
  out.probs = nn::softmax(tape, out.logits);
  const Var projected =
      nn::dense(tape, out.global_features, tape.param(prj_.weight), tape.param(prj_.bias));
  out.embeddings = nn::l2_normalize(tape, projected);
  return out;
}

ForwardOutputs Encoder::encode(const PointBatch& batch) const {
  check_batch(batch.coords, batch.points_per_cloud);
  Matrix h = batch.coords;
  for (const auto& layer : mlp_) {
    h = nn::relu(nn::dense_forward(h, layer.weight.value, layer.bias.value));
  }
  ForwardOutputs out;
  out.global_features = nn::max_pool_groups(h, batch.points_per_cloud);
  out.logits = nn::dense_forward(out.global_features, cls_.weight.value, cls_.bias.value);
  out.probs = nn::softmax(out.logits);
  out.embeddings =
      nn::l2_normalize(nn::dense_forward(out.global_features, prj_.weight.value, prj_.bias.value));
  return out;
}

std::vector<ParamTensor*> Encoder::parameters() {
  std::vector<ParamTensor*> ps;
  for (auto& l : mlp_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  for (Layer* l : {&cls_, &prj_}) {
    ps.push_back(&l->weight);
    ps.push_back(&l->bias);
  }
  return ps;
}

std::vector<nn::NamedTensor> Encoder::to_tensors() const {
  std::vector<nn::NamedTensor> ts;
  auto add = [&](const ParamTensor& p) { ts.push_back({p.name, p.value}); };
  for (const auto& l : mlp_) {
    add(l.weight);
    add(l.bias);
  }
  add(cls_.weight);
  add(cls_.bias);
  add(prj_.weight);
  add(prj_.bias);
  return ts;
}

}  // namespace cedr
