#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cedr/checkpoint.hpp"
#include "cedr/matrix.hpp"
#include "cedr/tape.hpp"

namespace cedr {

/// PointNet-lite layout: shared per-point MLP, max pool, then two heads.
/// The global feature width is the last hidden width; the projection head
/// keeps that width.
struct EncoderConfig {
  std::size_t point_dim = 3;
  std::vector<std::size_t> hidden_dims = {64, 128};
  std::size_t num_classes = 8;

  std::size_t global_dim() const { return hidden_dims.empty() ? 0 : hidden_dims.back(); }
  std::size_t projection_dim() const { return global_dim(); }
  void validate() const;
};

/// A batch of equally sized point clouds, stacked: (batch·points)×3.
struct PointBatch {
  nn::Matrix coords;
  std::size_t points_per_cloud = 0;

  std::size_t batch_size() const {
    return points_per_cloud == 0 ? 0 : coords.rows() / points_per_cloud;
  }
};

struct ForwardOutputs {
  nn::Matrix global_features;  // batch×D
  nn::Matrix logits;           // batch×|C|
  nn::Matrix probs;            // batch×|C|, rows sum to 1
  nn::Matrix embeddings;       // batch×D, unit rows
};

struct ForwardVars {
  nn::Var global_features;
  nn::Var logits;
  nn::Var probs;
  nn::Var embeddings;
};

class Encoder {
 public:
  /// Kaiming-uniform hidden layers, Glorot-uniform heads, zero biases.
  Encoder(EncoderConfig config, std::uint64_t seed);

  /// Rebuilds an encoder from checkpoint tensors, inferring the layout.
  static Encoder from_tensors(const std::vector<nn::NamedTensor>& tensors);

  const EncoderConfig& config() const { return config_; }

  /// Records the forward pass on `tape`. `points` must hold a PointBatch's coords.
  ForwardVars forward(nn::Tape& tape, nn::Var points, std::size_t points_per_cloud);

  /// Value-only forward pass; bitwise identical to `forward`.
  ForwardOutputs encode(const PointBatch& batch) const;

  std::vector<nn::ParamTensor*> parameters();
  std::vector<nn::NamedTensor> to_tensors() const;

 private:
  Encoder() = default;
  void check_batch(const nn::Matrix& coords, std::size_t points_per_cloud) const;

  struct Layer {
    nn::ParamTensor weight;
    nn::ParamTensor bias;
  };

  EncoderConfig config_;
  std::vector<Layer> mlp_;
  Layer cls_;
  Layer prj_;
};

}  // namespace cedr
