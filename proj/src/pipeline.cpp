#include "qreadout/pipeline.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "qreadout/errors.h"
#include "qreadout/pathfeat.h"

namespace qreadout::clf {

namespace {

template <class T>
bool holds(const Stage& s) {
  return std::holds_alternative<T>(s);
}

}  // namespace

void PipelineDescriptor::validate() const {
  std::size_t demod_count = 0;
  bool demodulated = false;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const Stage& s = stages[k];
    if (holds<DemodulateStage>(s)) {
      ++demod_count;
      demodulated = true;
      const double f = std::get<DemodulateStage>(s).f_if;
      if (!(f > 0.0) || !std::isfinite(f)) {
        throw ConfigError("pipeline '" + name + "': demodulation frequency must be positive");
      }
    } else if (holds<BinStage>(s)) {
      if (!demodulated) {
        throw ConfigError("pipeline '" + name + "': bin must follow demodulate");
      }
      if (std::get<BinStage>(s).bin_size < 1) {
        throw ConfigError("pipeline '" + name + "': bin_size must be at least 1");
      }
    } else if (holds<PathTransformStage>(s)) {
      if (!demodulated) {
        throw ConfigError("pipeline '" + name + "': path_transform must follow demodulate");
      }
    } else if (holds<IntegrateStage>(s)) {
      if (!demodulated) {
        throw ConfigError("pipeline '" + name + "': integrate must follow demodulate");
      }
      if (k + 1 != stages.size()) {
        throw ConfigError("pipeline '" + name + "': integrate must be the final stage");
      }
    } else if (holds<BandpassStage>(s)) {
      const auto& b = std::get<BandpassStage>(s);
      if (!(b.half_width > 0.0) || !(b.center - b.half_width > 0.0)) {
        throw ConfigError("pipeline '" + name + "': bandpass needs 0 < center - half_width");
      }
    }
  }
  if (demod_count != 1) {
    throw ConfigError("pipeline '" + name + "': demodulate must appear exactly once");
  }
  const bool ends_integrated = !stages.empty() && holds<IntegrateStage>(stages.back());
  if (std::holds_alternative<GmmSpec>(model) && !ends_integrated) {
    throw ConfigError("pipeline '" + name + "': gmm model requires integrate as the final stage");
  }
  if (!std::holds_alternative<GmmSpec>(model) && ends_integrated) {
    throw ConfigError("pipeline '" + name + "': sequence models cannot consume integrated points");
  }
  if (const auto* lstm = std::get_if<LstmSpec>(&model)) {
    if (lstm->hidden_dims.empty() ||
        std::any_of(lstm->hidden_dims.begin(), lstm->hidden_dims.end(), [](std::size_t h) { return h == 0; })) {
      throw ConfigError("pipeline '" + name + "': LSTM hidden sizes must be positive");
    }
  }
  if (const auto* dense = std::get_if<DenseSpec>(&model)) {
    if (dense->hidden_activations.size() != dense->hidden_dims.size()) {
      throw ConfigError("pipeline '" + name + "': one activation per dense hidden layer is required");
    }
    if (dense->input == DenseInput::kSignature &&
        (dense->signature_order < 1 || dense->signature_order > pathfeat::kMaxOrder)) {
      throw ConfigError("pipeline '" + name + "': signature order out of range");
    }
  }
  if (const auto* w = std::get_if<GmmConfidenceWeighting>(&weighting)) {
    if (!(w->floor >= 0.0 && w->floor <= 1.0)) {
      throw ConfigError("pipeline '" + name + "': weighting floor must lie in [0, 1]");
    }
  }
}

double PipelineDescriptor::demod_frequency() const {
  for (const Stage& s : stages) {
    if (const auto* d = std::get_if<DemodulateStage>(&s)) {
      return d->f_if;
    }
  }
  throw ConfigError("pipeline '" + name + "' has no demodulate stage");
}

PipelineDescriptor gmm_pipeline(double f_if) {
  return {"gmm", {DemodulateStage{f_if}, IntegrateStage{}}, GmmSpec{}, UniformWeighting{}};
}

PipelineDescriptor lstm_pipeline(double f_if, std::size_t bin_size) {
  return {"lstm", {DemodulateStage{f_if}, BinStage{bin_size}}, LstmSpec{}, GmmConfidenceWeighting{}};
}

PipelineDescriptor path_lstm_pipeline(double f_if, std::size_t bin_size) {
  return {"path+lstm",
          {DemodulateStage{f_if}, PathTransformStage{}, BinStage{bin_size}},
          LstmSpec{},
          GmmConfidenceWeighting{}};
}

PipelineDescriptor filter_lstm_pipeline(double f_if, std::size_t bin_size) {
  return {"filter+lstm",
          {BandpassStage{f_if, dsp::kDefaultHalfWidth}, DemodulateStage{f_if}, BinStage{bin_size}},
          LstmSpec{},
          GmmConfidenceWeighting{}};
}

PipelineDescriptor dense_pipeline(double f_if, std::size_t bin_size) {
  return {"dnn", {DemodulateStage{f_if}, BinStage{bin_size}}, DenseSpec{}, UniformWeighting{}};
}

PipelineDescriptor filter_dense_pipeline(double f_if, std::size_t bin_size) {
  return {"filter+dnn",
          {BandpassStage{f_if, dsp::kDefaultHalfWidth}, DemodulateStage{f_if}, BinStage{bin_size}},
          DenseSpec{},
          GmmConfidenceWeighting{}};
}

PipelineDescriptor signature_dense_pipeline(double f_if, std::size_t bin_size) {
  DenseSpec spec;
  spec.input = DenseInput::kSignature;
  return {"signature+dnn", {DemodulateStage{f_if}, BinStage{bin_size}}, spec, UniformWeighting{}};
}

Preprocessed run_stages(const PipelineDescriptor& desc, std::span<const float> samples, double dt) {
  std::vector<double> raw = dsp::to_double(samples);
  Preprocessed out;
  bool demodulated = false;
  for (const Stage& stage : desc.stages) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, BandpassStage>) {
            if (demodulated) {
              out.trajectory = dsp::bandpass(out.trajectory, s.center, s.half_width);
            } else {
              raw = dsp::bandpass(raw, dt, s.center, s.half_width);
            }
          } else if constexpr (std::is_same_v<T, DemodulateStage>) {
            out.trajectory = dsp::demodulate(raw, dt, s.f_if);
            demodulated = true;
          } else if constexpr (std::is_same_v<T, PathTransformStage>) {
            out.trajectory = pathfeat::path_transform(out.trajectory, s.weights);
          } else if constexpr (std::is_same_v<T, BinStage>) {
            out.trajectory = dsp::bin(out.trajectory, s.bin_size);
          } else if constexpr (std::is_same_v<T, IntegrateStage>) {
            out.point = dsp::integrate(out.trajectory);
            out.integrated = true;
          }
        },
        stage);
  }
  return out;
}

std::vector<double> model_features(const PipelineDescriptor& desc, std::span<const float> samples, double dt) {
  const Preprocessed pre = run_stages(desc, samples, dt);
  if (pre.integrated) {
    return {pre.point.i, pre.point.q};
  }
  if (const auto* dense = std::get_if<DenseSpec>(&desc.model); dense && dense->input == DenseInput::kSignature) {
    return pathfeat::signature(pre.trajectory, dense->signature_order).values;
  }
  std::vector<double> row(2 * pre.trajectory.size());
  for (std::size_t t = 0; t < pre.trajectory.size(); ++t) {
    row[2 * t] = pre.trajectory.i[t];
    row[2 * t + 1] = pre.trajectory.q[t];
  }
  return row;
}

std::size_t SequenceModel::param_count() const {
  if (std::holds_alternative<GaussianClassModel>(model)) {
    return sim::kNumStates * 6;
  }
  if (const auto* lstm = std::get_if<nn::LstmParams>(&model)) {
    return nn::param_count(*lstm);
  }
  return nn::param_count(std::get<nn::DenseParams>(model));
}

dsp::IqPoint integrated_point(const sim::RawShot& shot, double dt, double f_if) {
  return dsp::integrate(dsp::demodulate(shot, dt, f_if));
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) {
      fn(k);
    }
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t k = begin; k < end; ++k) {
        fn(k);
      }
    });
  }
}

}  // namespace

SequenceModel train_pipeline(const sim::Dataset& dataset, std::span<const std::size_t> indices,
                             const PipelineDescriptor& desc, const nn::TrainConfig& cfg,
                             const TrainOptions& options) {
  desc.validate();
  cfg.validate();
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(dataset.shots.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
      all[k] = k;
    }
    indices = all;
  }
  if (indices.empty()) {
    throw ArgumentError("training set is empty");
  }
  const double dt = dataset.config.dt();

  SequenceModel result;
  result.descriptor = desc;
  result.train_config = cfg;
  result.samples_per_shot = dataset.samples_per_shot();
  result.sample_rate = dataset.sample_rate();

  std::vector<sim::State> labels(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    labels[k] = dataset.shots.at(indices[k]).label;
  }

  if (std::holds_alternative<GmmSpec>(desc.model)) {
    std::vector<dsp::IqPoint> points(indices.size());
    parallel_for(indices.size(), options.threads, [&](std::size_t k) {
      points[k] = run_stages(desc, dataset.shots[indices[k]].samples, dt).point;
    });
    result.model = fit_gaussian_classes(points, labels);
    return result;
  }

  nn::TrainData data;
  data.samples.resize(indices.size());
  parallel_for(indices.size(), options.threads, [&](std::size_t k) {
    data.samples[k] = model_features(desc, dataset.shots[indices[k]].samples, dt);
  });
  data.labels.assign(labels.begin(), labels.end());

  if (const auto* w = std::get_if<GmmConfidenceWeighting>(&desc.weighting)) {
    const double f_if = desc.demod_frequency();
    std::vector<dsp::IqPoint> points(indices.size());
    parallel_for(indices.size(), options.threads,
                 [&](std::size_t k) { points[k] = integrated_point(dataset.shots[indices[k]], dt, f_if); });
    const GaussianClassModel gmm = fit_gaussian_classes(points, labels);
    data.weights = compute_sample_weights(gmm, points, labels, w->floor);
  }

  nn::Network net;
  if (const auto* lstm = std::get_if<LstmSpec>(&desc.model)) {
    net = nn::LstmParams(nn::LstmArch{2, lstm->hidden_dims, sim::kNumStates, lstm->readout_bias, cfg.output});
  } else {
    const auto& spec = std::get<DenseSpec>(desc.model);
    nn::DenseArch arch;
    arch.input_dim = data.samples.front().size();
    arch.hidden_dims = spec.hidden_dims;
    arch.hidden_activations = spec.hidden_activations;
    arch.output_dim = sim::kNumStates;
    arch.output = cfg.output;
    net = nn::DenseParams(arch);
  }
  nn::initialize(net, cfg.seed);
  nn::train(net, data, cfg, options.threads, options.on_epoch);
  std::visit([&](auto& p) { result.model = std::move(p); }, net);
  return result;
}

Prediction predict(const SequenceModel& model, const sim::RawShot& shot, double sample_rate) {
  if (shot.samples.size() != model.samples_per_shot || sample_rate != model.sample_rate) {
    throw IncompatibilityError("shot has " + std::to_string(shot.samples.size()) + " samples at rate " +
                               std::to_string(sample_rate) + ", model expects " +
                               std::to_string(model.samples_per_shot) + " at rate " +
                               std::to_string(model.sample_rate));
  }
  const double dt = 1.0 / sample_rate;
  Prediction p;
  if (const auto* gmm = std::get_if<GaussianClassModel>(&model.model)) {
    const GmmDecision d = gmm_classify(*gmm, run_stages(model.descriptor, shot.samples, dt).point);
    p.label = d.label;
    p.probs = d.posteriors;
    return p;
  }
  const std::vector<double> features = model_features(model.descriptor, shot.samples, dt);
  std::vector<double> probs;
  if (const auto* lstm = std::get_if<nn::LstmParams>(&model.model)) {
    probs = nn::lstm_predict(*lstm, features);
  } else {
    probs = nn::dense_forward(std::get<nn::DenseParams>(model.model), features);
  }
  double total = 0.0;
  for (double v : probs) {
    total += v;
  }
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    // Sigmoid outputs are renormalized; softmax outputs already sum to one.
    p.probs[s] = probs[s] / total;
    if (s > 0 && p.probs[s] > p.probs[p.label]) {
      p.label = static_cast<sim::State>(s);
    }
  }
  return p;
}

void check_compatible(const SequenceModel& model, const sim::Dataset& dataset) {
  if (dataset.samples_per_shot() != model.samples_per_shot || dataset.sample_rate() != model.sample_rate) {
    throw IncompatibilityError("dataset shape (" + std::to_string(dataset.samples_per_shot()) + " samples at " +
                               std::to_string(dataset.sample_rate()) + "/ns) does not match model '" +
                               model.descriptor.name + "'");
  }
}

std::vector<Prediction> predict_batch(const SequenceModel& model, const sim::Dataset& dataset,
                                      std::span<const std::size_t> indices, unsigned threads) {
  check_compatible(model, dataset);
  std::vector<Prediction> out(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    out[k] = predict(model, dataset.shots.at(indices[k]), dataset.sample_rate());
  });
  return out;
}

}  // namespace qreadout::clf
