#include "qreadout/nn/network.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "qreadout/errors.h"
#include "qreadout/rng.h"

namespace qreadout::nn {

std::size_t param_count(const LstmParams& params) { return params.size(); }
std::size_t param_count(const DenseParams& params) { return params.size(); }

std::size_t param_count(const Network& net) {
  return std::visit([](const auto& p) { return param_count(p); }, net);
}

std::span<double> values(Network& net) {
  return std::visit([](auto& p) { return p.values(); }, net);
}

std::span<const double> values(const Network& net) {
  return std::visit([](const auto& p) -> std::span<const double> { return p.values(); }, net);
}

std::vector<double> predict(const Network& net, std::span<const double> sample) {
  if (const auto* lstm = std::get_if<LstmParams>(&net)) {
    return lstm_predict(*lstm, sample);
  }
  return dense_forward(std::get<DenseParams>(net), sample);
}

namespace {

void fill_uniform(std::span<double> out, double bound, Rng& rng) {
  for (double& v : out) {
    v = (2.0 * uniform01(rng) - 1.0) * bound;
  }
}

double accumulate(const Network& net, std::span<const double> sample, std::size_t label, double scale,
                  std::span<double> grad) {
  if (const auto* lstm = std::get_if<LstmParams>(&net)) {
    return lstm_accumulate_gradient(*lstm, sample, label, scale, grad);
  }
  return dense_accumulate_gradient(std::get<DenseParams>(net), sample, label, scale, grad);
}

}  // namespace

void initialize(Network& net, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x1417});
  if (auto* lstm = std::get_if<LstmParams>(&net)) {
    auto v = lstm->values();
    for (const auto& layer : lstm->layers()) {
      const std::size_t cols = layer.input + layer.hidden;
      const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
      fill_uniform(v.subspan(layer.weight_offset, 4 * layer.hidden * cols), bound, rng);
      auto bias = v.subspan(layer.bias_offset, 4 * layer.hidden);
      std::fill(bias.begin(), bias.end(), 0.0);
      std::fill(bias.begin() + static_cast<std::ptrdiff_t>(layer.hidden),
                bias.begin() + static_cast<std::ptrdiff_t>(2 * layer.hidden), 1.0);
    }
    const std::size_t h = lstm->arch().hidden_dims.back();
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    fill_uniform(v.subspan(lstm->readout_offset(), lstm->arch().output_dim * h), bound, rng);
    if (lstm->arch().readout_bias) {
      fill_uniform(v.subspan(lstm->readout_bias_offset(), lstm->arch().output_dim), bound, rng);
    }
    return;
  }
  auto& dense = std::get<DenseParams>(net);
  auto v = dense.values();
  for (const auto& layer : dense.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.input));
    fill_uniform(v.subspan(layer.weight_offset, layer.input * layer.output), bound, rng);
    fill_uniform(v.subspan(layer.bias_offset, layer.output), bound, rng);
  }
}

Gradients backward(const Network& net, const Batch& batch, std::size_t batch_index, unsigned threads) {
  const std::size_t n = batch.samples.size();
  if (batch.labels.size() != n || batch.weights.size() != n) {
    throw ArgumentError("batch samples, labels and weights must have equal length");
  }
  const std::size_t p = param_count(net);
  Gradients result;
  result.values.assign(p, 0.0);

  double weight_sum = 0.0;
  for (double w : batch.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ArgumentError("sample weights must be finite and non-negative");
    }
    weight_sum += w;
  }
  if (n == 0 || weight_sum == 0.0) {
    return result;
  }

  std::vector<double> per_sample(n * p, 0.0);
  std::vector<double> losses(n, 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      if (batch.weights[k] == 0.0) {
        continue;
      }
      losses[k] = accumulate(net, batch.samples[k], batch.labels[k], batch.weights[k] / weight_sum,
                             std::span<double>(per_sample).subspan(k * p, p));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back(work, std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
    }
  }

  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (batch.weights[k] == 0.0) {
      continue;
    }
    const double* g = per_sample.data() + k * p;
    for (std::size_t j = 0; j < p; ++j) {
      result.values[j] += g[j];
    }
    loss += batch.weights[k] * losses[k];
  }
  result.loss = loss / weight_sum;
  if (!std::isfinite(result.loss) ||
      !std::all_of(result.values.begin(), result.values.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericalError("non-finite loss or gradient", batch_index);
  }
  return result;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) {
    throw ArgumentError("adam_step: parameter and gradient sizes differ");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) {
    throw ArgumentError("adam_step: optimizer state does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double g = grads[j];
    state.m[j] = kAdamBeta1 * state.m[j] + (1.0 - kAdamBeta1) * g;
    state.v[j] = kAdamBeta2 * state.v[j] + (1.0 - kAdamBeta2) * g * g;
    const double m_hat = state.m[j] / c1;
    const double v_hat = state.v[j] / c2;
    params[j] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) {
    throw ConfigError("lr0 must be positive");
  }
  if (!(decay_gamma > 0.0 && decay_gamma <= 1.0)) {
    throw ConfigError("decay_gamma must lie in (0, 1]");
  }
  if (decay_every < 1) {
    throw ConfigError("decay_every must be at least 1");
  }
  if (batch_size < 1) {
    throw ConfigError("batch_size must be at least 1");
  }
  if (epochs < 0) {
    throw ConfigError("epochs must be non-negative");
  }
}

double lr_at(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) {
    throw ArgumentError("epoch must be non-negative");
  }
  return cfg.lr0 * std::pow(cfg.decay_gamma, epoch / cfg.decay_every);
}

void train(Network& net, const TrainData& data, const TrainConfig& cfg, unsigned threads,
           const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  const std::size_t n = data.samples.size();
  if (data.labels.size() != n || (!data.weights.empty() && data.weights.size() != n)) {
    throw ArgumentError("training samples, labels and weights must have equal length");
  }
  if (n == 0) {
    throw ArgumentError("training set is empty");
  }
  AdamState adam;
  std::vector<std::size_t> order(n);
  std::size_t batch_counter = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(cfg.seed, {0xE90C, static_cast<std::uint64_t>(epoch)});
    for (std::size_t k = n; k > 1; --k) {
      std::swap(order[k - 1], order[rng() % k]);
    }
    const double lr = lr_at(cfg, epoch);
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      Batch batch;
      double batch_weight = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        batch.samples.emplace_back(data.samples[idx]);
        batch.labels.push_back(data.labels[idx]);
        batch.weights.push_back(data.weights.empty() ? 1.0 : data.weights[idx]);
        batch_weight += batch.weights.back();
      }
      Gradients g = backward(net, batch, batch_counter++, threads);
      adam_step(adam, values(net), g.values, lr);
      loss_sum += g.loss * batch_weight;
      weight_sum += batch_weight;
    }
    if (on_epoch) {
      on_epoch({epoch, weight_sum > 0.0 ? loss_sum / weight_sum : 0.0, lr});
    }
  }
}

}  // namespace qreadout::nn
