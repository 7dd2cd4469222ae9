#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qreadout/nn/activations.h"

namespace qreadout::nn {

struct DenseArch {
  std::size_t input_dim = 160;
  std::vector<std::size_t> hidden_dims = {32, 16, 8};
  std::vector<Activation> hidden_activations = {Activation::kRelu, Activation::kSelu, Activation::kRelu};
  std::size_t output_dim = 3;
  OutputActivation output = OutputActivation::kSoftmax;

  bool operator==(const DenseArch&) const = default;
};

// Fully connected feed-forward classifier. Flat layout per layer: weights
// (out x in, row-major) then bias (out); the last layer is the output layer.
class DenseParams {
 public:
  struct Layer {
    std::size_t input = 0;
    std::size_t output = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    Activation activation = Activation::kLinear;
  };

  DenseParams() : DenseParams(DenseArch{}) {}
  explicit DenseParams(DenseArch arch);

  const DenseArch& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  DenseArch arch_;
  std::vector<Layer> layers_;
  std::vector<double> values_;
};

std::size_t dense_param_count(const DenseArch& arch);

std::vector<double> dense_forward(const DenseParams& params, std::span<const double> features);

double dense_accumulate_gradient(const DenseParams& params, std::span<const double> features,
                                 std::size_t label, double scale, std::span<double> grad);

}  // namespace qreadout::nn
