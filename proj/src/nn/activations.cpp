#include "qreadout/nn/activations.h"

#include <algorithm>
#include <limits>
#include <string>

#include "qreadout/errors.h"

namespace qreadout::nn {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kLinear:
      return x;
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kSelu:
      return selu(x);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kSigmoid:
      return sigmoid(x);
  }
  return x;
}

double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::kLinear:
      return 1.0;
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSelu:
      return z > 0.0 ? kSeluLambda : y + kSeluLambda * kSeluAlpha;
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kSigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

void apply_output(OutputActivation a, std::span<double> logits) {
  if (a == OutputActivation::kSigmoid) {
    for (double& v : logits) {
      v = sigmoid(v);
    }
    return;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : logits) {
    v /= sum;
  }
}

double output_loss(OutputActivation a, std::span<const double> probs, std::size_t label) {
  constexpr double kTiny = std::numeric_limits<double>::min();
  if (a == OutputActivation::kSoftmax) {
    return -std::log(std::max(probs[label], kTiny));
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    loss -= c == label ? std::log(std::max(probs[c], kTiny)) : std::log(std::max(1.0 - probs[c], kTiny));
  }
  return loss;
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear:
      return "linear";
    case Activation::kRelu:
      return "relu";
    case Activation::kSelu:
      return "selu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "linear";
}

Activation activation_from_name(std::string_view name) {
  for (Activation a : {Activation::kLinear, Activation::kRelu, Activation::kSelu, Activation::kTanh,
                       Activation::kSigmoid}) {
    if (activation_name(a) == name) {
      return a;
    }
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view output_name(OutputActivation a) { return a == OutputActivation::kSoftmax ? "softmax" : "sigmoid"; }

OutputActivation output_from_name(std::string_view name) {
  if (name == "softmax") {
    return OutputActivation::kSoftmax;
  }
  if (name == "sigmoid") {
    return OutputActivation::kSigmoid;
  }
  throw ConfigError("unknown output activation '" + std::string(name) + "'");
}

}  // namespace qreadout::nn
