#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qreadout/dsp.h"
#include "qreadout/gaussian.h"
#include "qreadout/nn/network.h"
#include "qreadout/simkit.h"

namespace qreadout::clf {

struct BandpassStage {
  double center = 0.1;
  double half_width = dsp::kDefaultHalfWidth;
  bool operator==(const BandpassStage&) const = default;
};
struct DemodulateStage {
  double f_if = 0.1;
  bool operator==(const DemodulateStage&) const = default;
};
struct PathTransformStage {
  std::vector<double> weights;  // empty: uniform unit weights
  bool operator==(const PathTransformStage&) const = default;
};
struct BinStage {
  std::size_t bin_size = dsp::kDefaultBinSize;
  bool operator==(const BinStage&) const = default;
};
struct IntegrateStage {
  bool operator==(const IntegrateStage&) const = default;
};

using Stage = std::variant<BandpassStage, DemodulateStage, PathTransformStage, BinStage, IntegrateStage>;

struct GmmSpec {
  bool operator==(const GmmSpec&) const = default;
};
struct LstmSpec {
  std::vector<std::size_t> hidden_dims = {16};
  bool readout_bias = false;
  bool operator==(const LstmSpec&) const = default;
};
enum class DenseInput { kSequence, kSignature };
struct DenseSpec {
  std::vector<std::size_t> hidden_dims = {32, 16, 8};
  std::vector<nn::Activation> hidden_activations = {nn::Activation::kRelu, nn::Activation::kSelu,
                                                    nn::Activation::kRelu};
  DenseInput input = DenseInput::kSequence;
  int signature_order = 5;
  bool operator==(const DenseSpec&) const = default;
};
using ModelSpec = std::variant<GmmSpec, LstmSpec, DenseSpec>;

struct UniformWeighting {
  bool operator==(const UniformWeighting&) const = default;
};
struct GmmConfidenceWeighting {
  double floor = kDefaultWeightFloor;
  bool operator==(const GmmConfidenceWeighting&) const = default;
};
using Weighting = std::variant<UniformWeighting, GmmConfidenceWeighting>;

struct PipelineDescriptor {
  std::string name;
  std::vector<Stage> stages;
  ModelSpec model;
  Weighting weighting;

  // Throws ConfigError when the stage order or model/stage pairing is invalid.
  void validate() const;
  // Carrier frequency of the (single) demodulate stage.
  double demod_frequency() const;

  bool operator==(const PipelineDescriptor&) const = default;
};

// Named presets used by the command line tool and the benchmark.
PipelineDescriptor gmm_pipeline(double f_if = 0.1);
PipelineDescriptor lstm_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);
PipelineDescriptor path_lstm_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);
PipelineDescriptor filter_lstm_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);
PipelineDescriptor dense_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);
PipelineDescriptor filter_dense_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);
PipelineDescriptor signature_dense_pipeline(double f_if = 0.1, std::size_t bin_size = dsp::kDefaultBinSize);

// Result of running a descriptor's stages on one trace: a trajectory for
// sequence models, or an integrated point when the last stage integrates.
struct Preprocessed {
  dsp::IqTrajectory trajectory;
  dsp::IqPoint point;
  bool integrated = false;
};

Preprocessed run_stages(const PipelineDescriptor& desc, std::span<const float> samples, double dt);

// Model input row: interleaved (i, q) per timestep, or signature values.
std::vector<double> model_features(const PipelineDescriptor& desc, std::span<const float> samples, double dt);

using TrainedModel = std::variant<GaussianClassModel, nn::LstmParams, nn::DenseParams>;

// A trained classifier bound to its preprocessing and input shape.
struct SequenceModel {
  PipelineDescriptor descriptor;
  nn::TrainConfig train_config;
  std::size_t samples_per_shot = 0;
  double sample_rate = 0.0;
  TrainedModel model;

  std::size_t param_count() const;
};

struct TrainOptions {
  unsigned threads = 1;
  std::function<void(const nn::EpochRecord&)> on_epoch;
};

// Trains on the shots listed in `indices` (all shots when empty).
SequenceModel train_pipeline(const sim::Dataset& dataset, std::span<const std::size_t> indices,
                             const PipelineDescriptor& desc, const nn::TrainConfig& cfg,
                             const TrainOptions& options = {});

struct Prediction {
  sim::State label = 0;
  std::array<double, sim::kNumStates> probs{};
};

// Throws IncompatibilityError if the shot length or sample rate differ from
// what the model was trained on.
Prediction predict(const SequenceModel& model, const sim::RawShot& shot, double sample_rate);

std::vector<Prediction> predict_batch(const SequenceModel& model, const sim::Dataset& dataset,
                                      std::span<const std::size_t> indices, unsigned threads = 1);

void check_compatible(const SequenceModel& model, const sim::Dataset& dataset);

// Integrated I-Q point of a raw trace (demodulate then integrate).
dsp::IqPoint integrated_point(const sim::RawShot& shot, double dt, double f_if);

}  // namespace qreadout::clf
