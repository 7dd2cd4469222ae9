#include "qreadout/nn/lstm.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "qreadout/errors.h"

namespace qreadout::nn {

LstmParams::LstmParams(LstmArch arch) : arch_(std::move(arch)) {
  if (arch_.input_dim == 0 || arch_.output_dim == 0 || arch_.hidden_dims.empty()) {
    throw ConfigError("LSTM needs positive input/output widths and at least one hidden layer");
  }
  std::size_t offset = 0;
  std::size_t width = arch_.input_dim;
  for (std::size_t h : arch_.hidden_dims) {
    if (h == 0) {
      throw ConfigError("LSTM hidden layer width must be positive");
    }
    Layer layer;
    layer.input = width;
    layer.hidden = h;
    layer.weight_offset = offset;
    offset += 4 * h * (width + h);
    layer.bias_offset = offset;
    offset += 4 * h;
    layers_.push_back(layer);
    width = h;
  }
  readout_offset_ = offset;
  offset += arch_.output_dim * width;
  readout_bias_offset_ = offset;
  if (arch_.readout_bias) {
    offset += arch_.output_dim;
  }
  values_.assign(offset, 0.0);
}

std::size_t lstm_param_count(const LstmArch& arch) {
  std::size_t count = 0;
  std::size_t d = arch.input_dim;
  for (std::size_t h : arch.hidden_dims) {
    count += 4 * (h * (d + h) + h);
    d = h;
  }
  count += d * arch.output_dim;
  if (arch.readout_bias) {
    count += arch.output_dim;
  }
  return count;
}

namespace {

std::size_t check_sequence(const LstmParams& params, std::span<const double> sequence) {
  const std::size_t d = params.arch().input_dim;
  if (sequence.empty() || sequence.size() % d != 0) {
    throw ArgumentError("LSTM input of " + std::to_string(sequence.size()) +
                        " values is not a non-empty sequence of width " + std::to_string(d));
  }
  return sequence.size() / d;
}

void run_layer(const double* w, const double* b, const LstmParams::Layer& layer, std::size_t steps,
               LstmCache::LayerCache& lc) {
  const std::size_t d = layer.input;
  const std::size_t h = layer.hidden;
  const std::size_t cols = d + h;
  lc.gates.assign(steps * 4 * h, 0.0);
  lc.cells.assign(steps * h, 0.0);
  lc.cell_tanh.assign(steps * h, 0.0);
  lc.hidden.assign(steps * h, 0.0);

  std::vector<double> xh(cols, 0.0);
  std::vector<double> z(4 * h);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(lc.inputs.data() + t * d, d, xh.data());
    if (t > 0) {
      std::copy_n(lc.hidden.data() + (t - 1) * h, h, xh.data() + d);
    }
    for (std::size_t r = 0; r < 4 * h; ++r) {
      const double* row = w + r * cols;
      double acc = b[r];
      for (std::size_t k = 0; k < cols; ++k) {
        acc += row[k] * xh[k];
      }
      z[r] = acc;
    }
    double* g = lc.gates.data() + t * 4 * h;
    double* c = lc.cells.data() + t * h;
    double* ct = lc.cell_tanh.data() + t * h;
    double* hs = lc.hidden.data() + t * h;
    const double* c_prev = t > 0 ? lc.cells.data() + (t - 1) * h : nullptr;
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sigmoid(z[j]);
      const double fg = sigmoid(z[h + j]);
      const double cg = std::tanh(z[2 * h + j]);
      const double og = sigmoid(z[3 * h + j]);
      g[j] = ig;
      g[h + j] = fg;
      g[2 * h + j] = cg;
      g[3 * h + j] = og;
      c[j] = (c_prev ? fg * c_prev[j] : 0.0) + ig * cg;
      ct[j] = std::tanh(c[j]);
      hs[j] = og * ct[j];
    }
  }
}

void readout(const LstmParams& params, const double* last_hidden, std::vector<double>& logits) {
  const auto& arch = params.arch();
  const std::size_t h = arch.hidden_dims.back();
  const double* v = params.values().data() + params.readout_offset();
  logits.assign(arch.output_dim, 0.0);
  for (std::size_t o = 0; o < arch.output_dim; ++o) {
    double acc = arch.readout_bias ? params.values()[params.readout_bias_offset() + o] : 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      acc += v[o * h + j] * last_hidden[j];
    }
    logits[o] = acc;
  }
}

}  // namespace

LstmOutput lstm_forward(const LstmParams& params, std::span<const double> sequence) {
  const std::size_t steps = check_sequence(params, sequence);
  LstmOutput out;
  out.cache.steps = steps;
  out.cache.layers.resize(params.layers().size());
  const double* base = params.values().data();
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    const auto& layer = params.layers()[l];
    auto& lc = out.cache.layers[l];
    if (l == 0) {
      lc.inputs.assign(sequence.begin(), sequence.end());
    } else {
      lc.inputs = out.cache.layers[l - 1].hidden;
    }
    run_layer(base + layer.weight_offset, base + layer.bias_offset, layer, steps, lc);
  }
  const auto& top = out.cache.layers.back();
  const std::size_t h = params.layers().back().hidden;
  readout(params, top.hidden.data() + (steps - 1) * h, out.cache.logits);
  out.probs = out.cache.logits;
  apply_output(params.arch().output, out.probs);
  return out;
}

std::vector<double> lstm_predict(const LstmParams& params, std::span<const double> sequence) {
  return lstm_forward(params, sequence).probs;
}

double lstm_accumulate_gradient(const LstmParams& params, std::span<const double> sequence,
                                std::size_t label, double scale, std::span<double> grad) {
  const auto& arch = params.arch();
  if (label >= arch.output_dim) {
    throw ArgumentError("label out of range for LSTM output width");
  }
  if (grad.size() != params.size()) {
    throw ArgumentError("gradient buffer does not match LSTM parameter count");
  }
  const LstmOutput fwd = lstm_forward(params, sequence);
  const double loss = output_loss(arch.output, fwd.probs, label);
  if (scale == 0.0) {
    return loss;
  }

  const std::size_t steps = fwd.cache.steps;
  const double* base = params.values().data();
  double* gbase = grad.data();

  // Both output forms give d(loss)/d(logit) = p - onehot.
  std::vector<double> dlogits(arch.output_dim);
  for (std::size_t o = 0; o < arch.output_dim; ++o) {
    dlogits[o] = scale * (fwd.probs[o] - (o == label ? 1.0 : 0.0));
  }

  const std::size_t h_top = arch.hidden_dims.back();
  const double* top_hidden = fwd.cache.layers.back().hidden.data() + (steps - 1) * h_top;
  const double* v = base + params.readout_offset();
  double* dv = gbase + params.readout_offset();
  // Gradient arriving at each layer's hidden state from above, T x h.
  std::vector<double> dh_above(steps * h_top, 0.0);
  for (std::size_t o = 0; o < arch.output_dim; ++o) {
    for (std::size_t j = 0; j < h_top; ++j) {
      dv[o * h_top + j] += dlogits[o] * top_hidden[j];
      dh_above[(steps - 1) * h_top + j] += v[o * h_top + j] * dlogits[o];
    }
    if (arch.readout_bias) {
      gbase[params.readout_bias_offset() + o] += dlogits[o];
    }
  }

  for (std::size_t l = params.layers().size(); l-- > 0;) {
    const auto& layer = params.layers()[l];
    const auto& lc = fwd.cache.layers[l];
    const std::size_t d = layer.input;
    const std::size_t h = layer.hidden;
    const std::size_t cols = d + h;
    const double* w = base + layer.weight_offset;
    double* dw = gbase + layer.weight_offset;
    double* db = gbase + layer.bias_offset;

    std::vector<double> dx_below(l > 0 ? steps * d : 0, 0.0);
    std::vector<double> dh_rec(h, 0.0);
    std::vector<double> dc_rec(h, 0.0);
    std::vector<double> dz(4 * h);
    std::vector<double> xh(cols);
    std::vector<double> dxh(cols);

    for (std::size_t t = steps; t-- > 0;) {
      const double* g = lc.gates.data() + t * 4 * h;
      const double* ct = lc.cell_tanh.data() + t * h;
      const double* c_prev = t > 0 ? lc.cells.data() + (t - 1) * h : nullptr;
      for (std::size_t j = 0; j < h; ++j) {
        const double ig = g[j];
        const double fg = g[h + j];
        const double cg = g[2 * h + j];
        const double og = g[3 * h + j];
        const double dh = dh_above[t * h + j] + dh_rec[j];
        const double dc = dc_rec[j] + dh * og * (1.0 - ct[j] * ct[j]);
        dz[j] = dc * cg * ig * (1.0 - ig);
        dz[h + j] = (c_prev ? dc * c_prev[j] : 0.0) * fg * (1.0 - fg);
        dz[2 * h + j] = dc * ig * (1.0 - cg * cg);
        dz[3 * h + j] = dh * ct[j] * og * (1.0 - og);
        dc_rec[j] = dc * fg;
      }
      std::copy_n(lc.inputs.data() + t * d, d, xh.data());
      if (t > 0) {
        std::copy_n(lc.hidden.data() + (t - 1) * h, h, xh.data() + d);
      } else {
        std::fill(xh.begin() + static_cast<std::ptrdiff_t>(d), xh.end(), 0.0);
      }
      std::fill(dxh.begin(), dxh.end(), 0.0);
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const double dzr = dz[r];
        db[r] += dzr;
        const double* row = w + r * cols;
        double* drow = dw + r * cols;
        for (std::size_t k = 0; k < cols; ++k) {
          drow[k] += dzr * xh[k];
          dxh[k] += row[k] * dzr;
        }
      }
      if (l > 0) {
        std::copy_n(dxh.data(), d, dx_below.data() + t * d);
      }
      std::copy_n(dxh.data() + d, h, dh_rec.data());
    }
    dh_above = std::move(dx_below);
  }
  return loss;
}

}  // namespace qreadout::nn
