#include "ordproto/encoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ordproto/errors.hpp"
#include "ordproto/json_io.hpp"

namespace ordproto {

void validate_dims(const ModelDims& dims) {
  if (dims.input_dim < 1 || dims.feature_dim < 1 || dims.num_classes < 1) {
    throw BadDimsError("model dims: input_dim, feature_dim and num_classes must be >= 1");
  }
  for (int h : dims.hidden) {
    if (h < 1) throw BadDimsError("model dims: hidden widths must be >= 1");
  }
}

void Model::build_layout() {
  validate_dims(dims_);
  layers_.clear();
  std::size_t offset = 0;
  auto add = [&](int in, int out, Activation act) {
    LayerShape l;
    l.in = static_cast<std::size_t>(in);
    l.out = static_cast<std::size_t>(out);
    l.activation = act;
    l.weight_offset = offset;
    offset += l.in * l.out;
    l.bias_offset = offset;
    offset += l.out;
    layers_.push_back(l);
  };
  int prev = dims_.input_dim;
  for (int h : dims_.hidden) {
    add(prev, h, Activation::Relu);
    prev = h;
  }
  add(prev, dims_.feature_dim, Activation::Identity);
  add(dims_.feature_dim, dims_.num_classes, Activation::Identity);
  params_.assign(offset, 0.0);
}

Model Model::zeros(const ModelDims& dims) {
  Model m;
  m.dims_ = dims;
  m.build_layout();
  return m;
}

Model Model::from_params(const ModelDims& dims, std::uint64_t seed, Vector params) {
  Model m = zeros(dims);
  if (params.size() != m.params_.size()) {
    throw DimMismatchError("model: expected " + std::to_string(m.params_.size()) +
                           " parameters, got " + std::to_string(params.size()));
  }
  m.seed_ = seed;
  m.params_ = std::move(params);
  return m;
}

Model::Model(ModelDims dims, std::uint64_t seed) : dims_(std::move(dims)), seed_(seed) {
  build_layout();
  std::mt19937_64 rng(seed);
  for (const LayerShape& l : layers_) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(l.in)));
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.weight_offset + i] = normal(rng);
  }
}

std::span<double> Model::weight(std::size_t layer) {
  const LayerShape& l = layers_.at(layer);
  return std::span<double>(params_).subspan(l.weight_offset, l.in * l.out);
}

std::span<const double> Model::weight(std::size_t layer) const {
  const LayerShape& l = layers_.at(layer);
  return std::span<const double>(params_).subspan(l.weight_offset, l.in * l.out);
}

std::span<double> Model::bias(std::size_t layer) {
  const LayerShape& l = layers_.at(layer);
  return std::span<double>(params_).subspan(l.bias_offset, l.out);
}

std::span<const double> Model::bias(std::size_t layer) const {
  const LayerShape& l = layers_.at(layer);
  return std::span<const double>(params_).subspan(l.bias_offset, l.out);
}

namespace {

// out = in * W^T + b
DenseMatrix affine(const DenseMatrix& in, std::span<const double> w, std::span<const double> b,
                   std::size_t out_dim) {
  const std::size_t in_dim = in.cols();
  DenseMatrix out(in.rows(), out_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    auto y = out.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) {
      double s = b[o];
      const double* wrow = w.data() + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) s += wrow[i] * x[i];
      y[o] = s;
    }
  }
  return out;
}

}  // namespace

ForwardPass forward(const Model& model, const DenseMatrix& inputs) {
  if (inputs.cols() != static_cast<std::size_t>(model.dims().input_dim)) {
    throw DimMismatchError("forward: input width " + std::to_string(inputs.cols()) +
                           ", model expects " + std::to_string(model.dims().input_dim));
  }
  ForwardPass pass;
  DenseMatrix h = inputs;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < model.num_encoder_layers(); ++l) {
    pass.inputs.push_back(h);
    DenseMatrix z = affine(h, model.weight(l), model.bias(l), layers[l].out);
    pass.pre.push_back(z);
    if (layers[l].activation == Activation::Relu) {
      for (double& x : z.data()) x = x > 0.0 ? x : 0.0;
    }
    h = std::move(z);
  }
  pass.features = h;
  pass.inputs.push_back(h);
  const std::size_t head = model.num_encoder_layers();
  pass.logits = affine(h, model.weight(head), model.bias(head), layers[head].out);
  return pass;
}

Vector encode(const Model& model, std::span<const double> x) {
  DenseMatrix in(1, x.size());
  std::copy(x.begin(), x.end(), in.row(0).begin());
  const ForwardPass pass = forward(model, in);
  return Vector(pass.features.row(0).begin(), pass.features.row(0).end());
}

Vector backward(const Model& model, const ForwardPass& pass, const DenseMatrix& feature_grads,
                const DenseMatrix& logit_grads) {
  const auto& layers = model.layers();
  const std::size_t head = model.num_encoder_layers();
  const std::size_t m = pass.features.rows();
  if (feature_grads.rows() != m || feature_grads.cols() != pass.features.cols() ||
      logit_grads.rows() != m || logit_grads.cols() != pass.logits.cols()) {
    throw DimMismatchError("backward: upstream gradient shapes do not match the forward pass");
  }
  Vector grads(model.params().size(), 0.0);

  // Accumulates dW, db for layer l from upstream `delta` and returns the
  // gradient with respect to the layer input.
  auto layer_backward = [&](std::size_t l, const DenseMatrix& delta) {
    const LayerShape& shape = layers[l];
    const DenseMatrix& in = pass.inputs[l];
    const auto w = model.weight(l);
    DenseMatrix din(m, shape.in);
    for (std::size_t r = 0; r < m; ++r) {
      const auto x = in.row(r);
      const auto d = delta.row(r);
      auto dx = din.row(r);
      for (std::size_t o = 0; o < shape.out; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        double* gw = grads.data() + shape.weight_offset + o * shape.in;
        const double* wrow = w.data() + o * shape.in;
        for (std::size_t i = 0; i < shape.in; ++i) {
          gw[i] += g * x[i];
          dx[i] += g * wrow[i];
        }
        grads[shape.bias_offset + o] += g;
      }
    }
    return din;
  };

  DenseMatrix delta = layer_backward(head, logit_grads);
  delta += feature_grads;
  for (std::size_t l = head; l-- > 0;) {
    if (layers[l].activation == Activation::Relu) {
      const DenseMatrix& pre = pass.pre[l];
      for (std::size_t i = 0; i < delta.data().size(); ++i) {
        if (!(pre.data()[i] > 0.0)) delta.data()[i] = 0.0;
      }
    }
    delta = layer_backward(l, delta);
  }
  return grads;
}

double AdamConfig::lr_at(int epoch) const { return base_lr * std::pow(lr_decay, epoch); }

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               int epoch) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimMismatchError("adam_step: parameter, gradient and state sizes differ");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double lr = c.lr_at(epoch);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

nlohmann::json model_to_json(const Model& model, int epoch) {
  nlohmann::json j;
  j["dims"] = {{"input_dim", model.dims().input_dim},
               {"hidden", model.dims().hidden},
               {"feature_dim", model.dims().feature_dim},
               {"num_classes", model.dims().num_classes}};
  j["seed"] = model.seed();
  j["epoch"] = epoch;
  j["params"] = Vector(model.params().begin(), model.params().end());
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    ModelDims dims;
    const auto& d = j.at("dims");
    dims.input_dim = d.at("input_dim").get<int>();
    dims.hidden = d.at("hidden").get<std::vector<int>>();
    dims.feature_dim = d.at("feature_dim").get<int>();
    dims.num_classes = d.at("num_classes").get<int>();
    return Model::from_params(dims, j.at("seed").get<std::uint64_t>(),
                              j.at("params").get<Vector>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, int epoch, const std::filesystem::path& path) {
  write_json_file(model_to_json(model, epoch), path);
}

Model load_checkpoint(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

}  // namespace ordproto
