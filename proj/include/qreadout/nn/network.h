#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "qreadout/nn/dense.h"
#include "qreadout/nn/lstm.h"

namespace qreadout::nn {

using Network = std::variant<LstmParams, DenseParams>;

std::size_t param_count(const Network& net);
std::size_t param_count(const LstmParams& params);
std::size_t param_count(const DenseParams& params);

std::span<double> values(Network& net);
std::span<const double> values(const Network& net);

std::vector<double> predict(const Network& net, std::span<const double> sample);

// Uniform in +-1/sqrt(fan_in) per matrix (and its bias); LSTM forget-gate
// biases start at 1.
void initialize(Network& net, std::uint64_t seed);

// One batch of training samples; `samples[k]` is a flattened input row.
struct Batch {
  std::vector<std::span<const double>> samples;
  std::vector<std::size_t> labels;
  std::vector<double> weights;
};

struct Gradients {
  std::vector<double> values;
  double loss = 0.0;  // weighted mean loss over the batch
};

// Gradient of sum_k w_k L_k / sum_k w_k. A batch whose weights sum to zero
// yields an all-zero gradient. Per-sample gradients are computed into their
// own buffers and summed in sample order, so the result does not depend on
// `threads`. Throws NumericalError tagged with `batch_index` on NaN/inf.
Gradients backward(const Network& net, const Batch& batch, std::size_t batch_index = 0, unsigned threads = 1);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

struct TrainConfig {
  double lr0 = 1e-4;
  double decay_gamma = 0.9;
  int decay_every = 10;
  std::size_t batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 1234;
  OutputActivation output = OutputActivation::kSoftmax;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// lr0 * gamma^floor(epoch / decay_every)
double lr_at(const TrainConfig& cfg, int epoch);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainData {
  std::vector<std::vector<double>> samples;
  std::vector<std::size_t> labels;
  std::vector<double> weights;  // empty means uniform
};

// Mini-batch Adam. Samples are shuffled each epoch from a stream derived from
// (cfg.seed, epoch). `on_epoch` receives the weighted mean loss of the epoch.
void train(Network& net, const TrainData& data, const TrainConfig& cfg, unsigned threads = 1,
           const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace qreadout::nn
