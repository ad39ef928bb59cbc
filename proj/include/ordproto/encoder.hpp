#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "ordproto/linalg.hpp"

namespace ordproto {

enum class Activation { Relu, Identity };

// Encoder layer widths plus the classification head size. Hidden layers use
// a rectifier; the last encoder layer (width feature_dim) is linear.
struct ModelDims {
  int input_dim = 16;
  std::vector<int> hidden{64, 64};
  int feature_dim = 32;
  int num_classes = 3;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Identity;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;    // out

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Encoder f_theta followed by a linear classification head. All parameters
// live in one flat vector: encoder layers in order, then the head.
class Model {
 public:
  Model() = default;
  Model(ModelDims dims, std::uint64_t seed);  // Kaiming-normal init, zero biases

  // Zero-valued parameters with the given layout.
  static Model zeros(const ModelDims& dims);
  // Restores a model from a flat parameter vector (checkpoint loading).
  static Model from_params(const ModelDims& dims, std::uint64_t seed, Vector params);

  const ModelDims& dims() const noexcept { return dims_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Encoder layers followed by the head (the last entry).
  const std::vector<LayerShape>& layers() const noexcept { return layers_; }
  std::size_t num_encoder_layers() const noexcept { return layers_.size() - 1; }
  std::size_t encoder_param_count() const noexcept { return layers_.back().weight_offset; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  std::span<double> weight(std::size_t layer);
  std::span<const double> weight(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  friend bool operator==(const Model&, const Model&) = default;

 private:
  void build_layout();

  ModelDims dims_;
  std::uint64_t seed_ = 0;
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

// Throws BadDimsError unless every width is >= 1.
void validate_dims(const ModelDims& dims);

struct ForwardPass {
  std::vector<DenseMatrix> inputs;  // input to each layer (encoder layers, then head)
  std::vector<DenseMatrix> pre;     // pre-activation of each encoder layer
  DenseMatrix features;             // M x feature_dim
  DenseMatrix logits;               // M x num_classes
};

// inputs: M x input_dim. Throws DimMismatchError on width mismatch.
ForwardPass forward(const Model& model, const DenseMatrix& inputs);

// Feature vector of a single input.
Vector encode(const Model& model, std::span<const double> x);

// Reverse-mode gradients of every parameter given upstream gradients on the
// features (M x feature_dim) and logits (M x num_classes). The feature
// gradient already includes whatever the caller's feature-space losses give;
// the head contribution is added here.
Vector backward(const Model& model, const ForwardPass& pass, const DenseMatrix& feature_grads,
                const DenseMatrix& logit_grads);

struct AdamConfig {
  double base_lr = 2e-4;
  double lr_decay = 0.95;  // per epoch
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  double lr_at(int epoch) const;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(std::size_t n, AdamConfig cfg = {}) : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update at lr = base_lr * lr_decay^epoch.
// Throws DimMismatchError when shapes disagree.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               int epoch);

nlohmann::json model_to_json(const Model& model, int epoch);
Model model_from_json(const nlohmann::json& j);
void save_checkpoint(const Model& model, int epoch, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace ordproto
