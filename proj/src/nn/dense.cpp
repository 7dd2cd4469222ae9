#include "qreadout/nn/dense.h"

#include <string>

#include "qreadout/errors.h"

namespace qreadout::nn {

DenseParams::DenseParams(DenseArch arch) : arch_(std::move(arch)) {
  if (arch_.input_dim == 0 || arch_.output_dim == 0) {
    throw ConfigError("dense network needs positive input and output widths");
  }
  if (arch_.hidden_activations.size() != arch_.hidden_dims.size()) {
    throw ConfigError("dense network needs one activation per hidden layer");
  }
  std::size_t offset = 0;
  std::size_t width = arch_.input_dim;
  for (std::size_t l = 0; l <= arch_.hidden_dims.size(); ++l) {
    const bool is_output = l == arch_.hidden_dims.size();
    Layer layer;
    layer.input = width;
    layer.output = is_output ? arch_.output_dim : arch_.hidden_dims[l];
    if (layer.output == 0) {
      throw ConfigError("dense layer width must be positive");
    }
    layer.activation = is_output ? Activation::kLinear : arch_.hidden_activations[l];
    layer.weight_offset = offset;
    offset += layer.input * layer.output;
    layer.bias_offset = offset;
    offset += layer.output;
    layers_.push_back(layer);
    width = layer.output;
  }
  values_.assign(offset, 0.0);
}

std::size_t dense_param_count(const DenseArch& arch) {
  std::size_t count = 0;
  std::size_t width = arch.input_dim;
  for (std::size_t h : arch.hidden_dims) {
    count += h * width + h;
    width = h;
  }
  return count + arch.output_dim * width + arch.output_dim;
}

namespace {

struct DenseTrace {
  std::vector<std::vector<double>> pre;   // per layer pre-activation
  std::vector<std::vector<double>> post;  // per layer output; post[-1] is the input
};

std::vector<double> run(const DenseParams& params, std::span<const double> features, DenseTrace* trace) {
  if (features.size() != params.arch().input_dim) {
    throw ArgumentError("dense input has width " + std::to_string(features.size()) + ", expected " +
                        std::to_string(params.arch().input_dim));
  }
  const double* base = params.values().data();
  std::vector<double> a(features.begin(), features.end());
  for (const auto& layer : params.layers()) {
    std::vector<double> z(layer.output);
    const double* w = base + layer.weight_offset;
    const double* b = base + layer.bias_offset;
    for (std::size_t o = 0; o < layer.output; ++o) {
      double acc = b[o];
      const double* row = w + o * layer.input;
      for (std::size_t k = 0; k < layer.input; ++k) {
        acc += row[k] * a[k];
      }
      z[o] = acc;
    }
    std::vector<double> y(layer.output);
    for (std::size_t o = 0; o < layer.output; ++o) {
      y[o] = activate(layer.activation, z[o]);
    }
    if (trace) {
      trace->post.push_back(std::move(a));
      trace->pre.push_back(std::move(z));
    }
    a = std::move(y);
  }
  apply_output(params.arch().output, a);
  return a;
}

}  // namespace

std::vector<double> dense_forward(const DenseParams& params, std::span<const double> features) {
  return run(params, features, nullptr);
}

double dense_accumulate_gradient(const DenseParams& params, std::span<const double> features,
                                 std::size_t label, double scale, std::span<double> grad) {
  const auto& arch = params.arch();
  if (label >= arch.output_dim) {
    throw ArgumentError("label out of range for dense output width");
  }
  if (grad.size() != params.size()) {
    throw ArgumentError("gradient buffer does not match dense parameter count");
  }
  DenseTrace trace;
  const std::vector<double> probs = run(params, features, &trace);
  const double loss = output_loss(arch.output, probs, label);
  if (scale == 0.0) {
    return loss;
  }
  const double* base = params.values().data();
  std::vector<double> delta(arch.output_dim);
  for (std::size_t o = 0; o < arch.output_dim; ++o) {
    delta[o] = scale * (probs[o] - (o == label ? 1.0 : 0.0));
  }
  for (std::size_t l = params.layers().size(); l-- > 0;) {
    const auto& layer = params.layers()[l];
    const auto& input = trace.post[l];
    const double* w = base + layer.weight_offset;
    double* dw = grad.data() + layer.weight_offset;
    double* db = grad.data() + layer.bias_offset;
    std::vector<double> dinput(layer.input, 0.0);
    for (std::size_t o = 0; o < layer.output; ++o) {
      const double d = delta[o];
      db[o] += d;
      const double* row = w + o * layer.input;
      double* drow = dw + o * layer.input;
      for (std::size_t k = 0; k < layer.input; ++k) {
        drow[k] += d * input[k];
        dinput[k] += row[k] * d;
      }
    }
    if (l == 0) {
      break;
    }
    const auto& below = params.layers()[l - 1];
    const auto& z = trace.pre[l - 1];
    // trace.post[l] is the activated output of layer l-1.
    for (std::size_t k = 0; k < layer.input; ++k) {
      dinput[k] *= activate_grad(below.activation, z[k], input[k]);
    }
    delta = std::move(dinput);
  }
  return loss;
}

}  // namespace qreadout::nn
