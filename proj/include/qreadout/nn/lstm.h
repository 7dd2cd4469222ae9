#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qreadout/nn/activations.h"

namespace qreadout::nn {

struct LstmArch {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden_dims = {16};
  std::size_t output_dim = 3;
  bool readout_bias = false;
  OutputActivation output = OutputActivation::kSoftmax;

  bool operator==(const LstmArch&) const = default;
};

// Stacked LSTM with a linear readout of the final hidden state.
//
// Flat layout, per layer l (input width d_l, hidden h_l): gate matrix
// W_l (4 h_l x (d_l + h_l), row-major, gate blocks ordered input, forget,
// cell, output; columns [x_t ; h_{t-1}]) followed by bias b_l (4 h_l). Then the
// readout matrix (output_dim x h_last, row-major) and, when enabled, its bias.
class LstmParams {
 public:
  struct Layer {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  LstmParams() : LstmParams(LstmArch{}) {}
  explicit LstmParams(LstmArch arch);

  const LstmArch& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t readout_offset() const { return readout_offset_; }
  std::size_t readout_bias_offset() const { return readout_bias_offset_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  LstmArch arch_;
  std::vector<Layer> layers_;
  std::size_t readout_offset_ = 0;
  std::size_t readout_bias_offset_ = 0;
  std::vector<double> values_;
};

// Closed-form parameter count for an architecture.
std::size_t lstm_param_count(const LstmArch& arch);

struct LstmCache {
  std::size_t steps = 0;
  // Per layer: layer inputs (T x d), gate activations (T x 4h, order i f g o),
  // cell states (T x h), tanh of cell states (T x h), hidden states (T x h).
  struct LayerCache {
    std::vector<double> inputs;
    std::vector<double> gates;
    std::vector<double> cells;
    std::vector<double> cell_tanh;
    std::vector<double> hidden;
  };
  std::vector<LayerCache> layers;
  std::vector<double> logits;
};

struct LstmOutput {
  std::vector<double> probs;
  LstmCache cache;
};

// `sequence` is T x input_dim, row-major.
LstmOutput lstm_forward(const LstmParams& params, std::span<const double> sequence);

// Class probabilities only; reuses no cache.
std::vector<double> lstm_predict(const LstmParams& params, std::span<const double> sequence);

// Adds scale * d(loss)/d(params) for one sample into `grad`. Returns the
// unscaled sample loss.
double lstm_accumulate_gradient(const LstmParams& params, std::span<const double> sequence,
                                std::size_t label, double scale, std::span<double> grad);

}  // namespace qreadout::nn
