#include "qreadout/io.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qreadout/errors.h"

namespace qreadout::io {

namespace {

constexpr std::array<char, 8> kDatasetMagic = {'Q', 'R', 'D', 'S', 'E', 'T', '\0', '\0'};
constexpr std::array<char, 8> kModelMagic = {'Q', 'R', 'M', 'O', 'D', 'E', 'L', '\0'};

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  template <class U>
  void uint(U v) {
    for (std::size_t k = 0; k < sizeof(U); ++k) {
      buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
    }
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) {
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    }
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw IoError(what_ + ": unexpected end of file");
    }
  }
  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

json t1_to_json(const sim::RelaxationTime& t) { return t ? json(*t) : json("disabled"); }

sim::RelaxationTime t1_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "disabled") {
      throw ConfigError("t1 must be a number or \"disabled\"");
    }
    return std::nullopt;
  }
  return j.get<double>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_binary(path, text);
}

std::string read_text(const std::filesystem::path& path) { return read_binary(path); }

json to_json(const sim::SimConfig& cfg) {
  json envelopes = json::array();
  for (const auto& e : cfg.state_envelopes) {
    envelopes.push_back({{"amplitude", e.amplitude}, {"phase", e.phase}});
  }
  return {{"duration_ns", cfg.duration_ns},
          {"sample_rate", cfg.sample_rate},
          {"t1", json::array({t1_to_json(cfg.t1[0]), t1_to_json(cfg.t1[1])})},
          {"gamma_up", cfg.gamma_up},
          {"state_envelopes", envelopes},
          {"f_if", cfg.f_if},
          {"ring_time", cfg.ring_time},
          {"noise_sigma", cfg.noise_sigma},
          {"phase_noise_sigma", cfg.phase_noise_sigma},
          {"herald_error", cfg.herald_error},
          {"seed", cfg.seed}};
}

sim::SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("simulation config must be a JSON object");
  }
  sim::SimConfig cfg;
  cfg.duration_ns = get_or(j, "duration_ns", cfg.duration_ns);
  cfg.sample_rate = get_or(j, "sample_rate", cfg.sample_rate);
  if (j.contains("t1")) {
    const json& t = j.at("t1");
    if (!t.is_array() || t.size() != 2) {
      throw ConfigError("t1 must list the relaxation times of states 1 and 2");
    }
    cfg.t1 = {t1_from_json(t[0]), t1_from_json(t[1])};
  }
  cfg.gamma_up = get_or(j, "gamma_up", cfg.gamma_up);
  if (j.contains("state_envelopes")) {
    const json& e = j.at("state_envelopes");
    if (!e.is_array() || e.size() != sim::kNumStates) {
      throw ConfigError("state_envelopes must have three entries");
    }
    for (std::size_t s = 0; s < sim::kNumStates; ++s) {
      cfg.state_envelopes[s].amplitude = get_or(e[s], "amplitude", cfg.state_envelopes[s].amplitude);
      cfg.state_envelopes[s].phase = get_or(e[s], "phase", cfg.state_envelopes[s].phase);
    }
  }
  cfg.f_if = get_or(j, "f_if", cfg.f_if);
  cfg.ring_time = get_or(j, "ring_time", cfg.ring_time);
  cfg.noise_sigma = get_or(j, "noise_sigma", cfg.noise_sigma);
  cfg.phase_noise_sigma = get_or(j, "phase_noise_sigma", cfg.phase_noise_sigma);
  cfg.herald_error = get_or(j, "herald_error", cfg.herald_error);
  cfg.seed = get_or(j, "seed", cfg.seed);
  return cfg;
}

json to_json(const nn::TrainConfig& cfg) {
  return {{"lr0", cfg.lr0},
          {"decay_gamma", cfg.decay_gamma},
          {"decay_every", cfg.decay_every},
          {"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed},
          {"loss", "weighted_categorical_cross_entropy"},
          {"output_activation", std::string(nn::output_name(cfg.output))}};
}

nn::TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("training config must be a JSON object");
  }
  nn::TrainConfig cfg;
  cfg.lr0 = get_or(j, "lr0", cfg.lr0);
  cfg.decay_gamma = get_or(j, "decay_gamma", cfg.decay_gamma);
  cfg.decay_every = get_or(j, "decay_every", cfg.decay_every);
  cfg.batch_size = get_or(j, "batch_size", cfg.batch_size);
  cfg.epochs = get_or(j, "epochs", cfg.epochs);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.output = nn::output_from_name(get_or<std::string>(j, "output_activation", "softmax"));
  if (get_or<std::string>(j, "loss", "weighted_categorical_cross_entropy") != "weighted_categorical_cross_entropy") {
    throw ConfigError("only weighted_categorical_cross_entropy loss is supported");
  }
  return cfg;
}

json to_json(const clf::PipelineDescriptor& desc) {
  json stages = json::array();
  for (const clf::Stage& stage : desc.stages) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, clf::BandpassStage>) {
            stages.push_back({{"type", "bandpass"}, {"center", s.center}, {"half_width", s.half_width}});
          } else if constexpr (std::is_same_v<T, clf::DemodulateStage>) {
            stages.push_back({{"type", "demodulate"}, {"f_if", s.f_if}});
          } else if constexpr (std::is_same_v<T, clf::PathTransformStage>) {
            stages.push_back({{"type", "path_transform"},
                              {"weights", s.weights.empty() ? json("uniform") : json(s.weights)}});
          } else if constexpr (std::is_same_v<T, clf::BinStage>) {
            stages.push_back({{"type", "bin"}, {"bin_size", s.bin_size}});
          } else {
            stages.push_back({{"type", "integrate"}});
          }
        },
        stage);
  }
  json model;
  if (std::holds_alternative<clf::GmmSpec>(desc.model)) {
    model = {{"type", "gmm"}};
  } else if (const auto* lstm = std::get_if<clf::LstmSpec>(&desc.model)) {
    model = {{"type", "lstm"}, {"hidden_dims", lstm->hidden_dims}, {"readout_bias", lstm->readout_bias}};
  } else {
    const auto& dense = std::get<clf::DenseSpec>(desc.model);
    json acts = json::array();
    for (nn::Activation a : dense.hidden_activations) {
      acts.push_back(std::string(nn::activation_name(a)));
    }
    model = {{"type", "dense"},
             {"hidden_dims", dense.hidden_dims},
             {"activations", acts},
             {"input", dense.input == clf::DenseInput::kSignature ? "signature" : "sequence"},
             {"signature_order", dense.signature_order}};
  }
  json weighting;
  if (const auto* w = std::get_if<clf::GmmConfidenceWeighting>(&desc.weighting)) {
    weighting = {{"type", "gmm_confidence"}, {"floor", w->floor}};
  } else {
    weighting = {{"type", "uniform"}};
  }
  return {{"name", desc.name}, {"stages", stages}, {"model", model}, {"weighting", weighting}};
}

const std::vector<std::string>& pipeline_preset_names() {
  static const std::vector<std::string> names = {"gmm", "lstm", "path+lstm", "filter+lstm",
                                                 "dnn", "filter+dnn", "signature+dnn"};
  return names;
}

clf::PipelineDescriptor pipeline_preset(const std::string& name, double f_if, std::size_t bin_size) {
  if (name == "gmm") return clf::gmm_pipeline(f_if);
  if (name == "lstm") return clf::lstm_pipeline(f_if, bin_size);
  if (name == "path+lstm") return clf::path_lstm_pipeline(f_if, bin_size);
  if (name == "filter+lstm") return clf::filter_lstm_pipeline(f_if, bin_size);
  if (name == "dnn") return clf::dense_pipeline(f_if, bin_size);
  if (name == "filter+dnn") return clf::filter_dense_pipeline(f_if, bin_size);
  if (name == "signature+dnn") return clf::signature_dense_pipeline(f_if, bin_size);
  throw ConfigError("unknown pipeline preset '" + name + "'");
}

clf::PipelineDescriptor pipeline_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("pipeline must be a JSON object");
  }
  clf::PipelineDescriptor desc;
  if (j.contains("preset")) {
    desc = pipeline_preset(j.at("preset").get<std::string>(), get_or(j, "f_if", 0.1),
                  get_or<std::size_t>(j, "bin_size", dsp::kDefaultBinSize));
  }
  desc.name = get_or(j, "name", desc.name);
  if (j.contains("stages")) {
    desc.stages.clear();
    for (const json& s : j.at("stages")) {
      const std::string type = get_or<std::string>(s, "type", "");
      if (type == "bandpass") {
        desc.stages.push_back(clf::BandpassStage{get_or(s, "center", 0.1), get_or(s, "half_width", dsp::kDefaultHalfWidth)});
      } else if (type == "demodulate") {
        desc.stages.push_back(clf::DemodulateStage{get_or(s, "f_if", 0.1)});
      } else if (type == "path_transform") {
        clf::PathTransformStage p;
        if (s.contains("weights") && s.at("weights").is_array()) {
          p.weights = s.at("weights").get<std::vector<double>>();
        }
        desc.stages.push_back(p);
      } else if (type == "bin") {
        desc.stages.push_back(clf::BinStage{get_or<std::size_t>(s, "bin_size", dsp::kDefaultBinSize)});
      } else if (type == "integrate") {
        desc.stages.push_back(clf::IntegrateStage{});
      } else {
        throw ConfigError("unknown pipeline stage '" + type + "'");
      }
    }
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    const std::string type = get_or<std::string>(m, "type", "");
    if (type == "gmm") {
      desc.model = clf::GmmSpec{};
    } else if (type == "lstm") {
      clf::LstmSpec spec;
      spec.hidden_dims = get_or(m, "hidden_dims", spec.hidden_dims);
      spec.readout_bias = get_or(m, "readout_bias", spec.readout_bias);
      desc.model = spec;
    } else if (type == "dense") {
      clf::DenseSpec spec;
      spec.hidden_dims = get_or(m, "hidden_dims", spec.hidden_dims);
      if (m.contains("activations")) {
        spec.hidden_activations.clear();
        for (const json& a : m.at("activations")) {
          spec.hidden_activations.push_back(nn::activation_from_name(a.get<std::string>()));
        }
      }
      const std::string input = get_or<std::string>(m, "input", "sequence");
      if (input != "sequence" && input != "signature") {
        throw ConfigError("dense input must be 'sequence' or 'signature'");
      }
      spec.input = input == "signature" ? clf::DenseInput::kSignature : clf::DenseInput::kSequence;
      spec.signature_order = get_or(m, "signature_order", spec.signature_order);
      desc.model = spec;
    } else {
      throw ConfigError("unknown model type '" + type + "'");
    }
  }
  if (j.contains("weighting")) {
    const json& w = j.at("weighting");
    const std::string type = get_or<std::string>(w, "type", "");
    if (type == "uniform") {
      desc.weighting = clf::UniformWeighting{};
    } else if (type == "gmm_confidence") {
      desc.weighting = clf::GmmConfidenceWeighting{get_or(w, "floor", clf::kDefaultWeightFloor)};
    } else {
      throw ConfigError("unknown weighting '" + type + "'");
    }
  }
  desc.validate();
  return desc;
}

std::string config_hash(const json& j) { return bytes_hash(j.dump()); }

std::string bytes_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

void write_dataset(const std::filesystem::path& path, const sim::Dataset& ds) {
  const std::size_t n_samples = ds.samples_per_shot();
  Writer w;
  w.bytes(kDatasetMagic.data(), kDatasetMagic.size());
  w.uint<std::uint32_t>(kDatasetVersion);
  w.uint<std::uint32_t>(0);
  w.uint<std::uint64_t>(ds.shots.size());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(n_samples));
  w.f64(ds.sample_rate());
  json paths = json::array();
  std::array<std::size_t, sim::kNumStates> per_state{};
  for (const sim::RawShot& s : ds.shots) {
    if (s.samples.size() != n_samples) {
      throw ArgumentError("shot " + std::to_string(s.shot_id) + " has the wrong number of samples");
    }
    w.uint<std::uint8_t>(s.label);
    w.uint<std::uint8_t>(s.herald_pass ? 1 : 0);
    for (float v : s.samples) {
      w.f32(v);
    }
    json segs = json::array();
    for (const sim::Segment& seg : s.true_path.segments) {
      segs.push_back(json::array({seg.state, seg.start_ns, seg.end_ns}));
    }
    paths.push_back(std::move(segs));
    ++per_state[s.label];
  }
  const json cfg = to_json(ds.config);
  json meta = {{"format", "qreadout-dataset"},
               {"version", kDatasetVersion},
               {"sim_config", cfg},
               {"seed", ds.config.seed},
               {"shots_per_state", per_state},
               {"config_hash", config_hash(cfg)},
               {"true_paths", paths}};
  write_binary(path, w.data());
  write_text(sidecar_path(path), meta.dump(1) + "\n");
}

sim::Dataset read_dataset(const std::filesystem::path& path) {
  Reader r(read_binary(path), path.string());
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kDatasetMagic) {
    throw IoError(path.string() + " is not a dataset file");
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kDatasetVersion) {
    throw IoError(path.string() + ": unsupported dataset version " + std::to_string(version));
  }
  r.uint<std::uint32_t>();
  const auto count = r.uint<std::uint64_t>();
  const auto n_samples = r.uint<std::uint32_t>();
  const double rate = r.f64();

  const json meta = read_json(sidecar_path(path));
  sim::Dataset ds;
  try {
    ds.config = sim_config_from_json(meta.at("sim_config"));
  } catch (const json::exception& e) {
    throw IoError("dataset sidecar is missing sim_config: " + std::string(e.what()));
  }
  if (ds.config.samples_per_shot() != n_samples || ds.config.sample_rate != rate) {
    throw IoError(path.string() + ": header disagrees with sidecar configuration");
  }
  const json* paths = meta.contains("true_paths") ? &meta.at("true_paths") : nullptr;
  if (paths && paths->size() != count) {
    throw IoError(path.string() + ": sidecar lists a different number of shots");
  }
  ds.shots.resize(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    sim::RawShot& s = ds.shots[k];
    s.shot_id = k;
    s.label = r.uint<std::uint8_t>();
    if (s.label >= sim::kNumStates) {
      throw IoError(path.string() + ": invalid label in shot " + std::to_string(k));
    }
    s.herald_pass = r.uint<std::uint8_t>() != 0;
    s.samples.resize(n_samples);
    for (float& v : s.samples) {
      v = r.f32();
    }
    if (paths) {
      for (const json& seg : (*paths)[k]) {
        s.true_path.segments.push_back(
            {seg.at(0).get<sim::State>(), seg.at(1).get<double>(), seg.at(2).get<double>()});
      }
    }
    if (s.true_path.segments.empty()) {
      s.true_path.segments.push_back({s.label, 0.0, ds.config.duration_ns});
    }
  }
  if (!r.at_end()) {
    throw IoError(path.string() + ": trailing bytes after last shot");
  }
  return ds;
}

void export_csv(const sim::Dataset& ds, std::ostream& out) {
  out << "# config_hash=" << config_hash(to_json(ds.config)) << "\n";
  out << "shot_id,label";
  for (std::size_t k = 0; k < ds.samples_per_shot(); ++k) {
    out << ",s" << k;
  }
  out << "\n";
  out << std::setprecision(9);
  for (const sim::RawShot& s : ds.shots) {
    out << s.shot_id << "," << static_cast<int>(s.label);
    for (float v : s.samples) {
      out << "," << v;
    }
    out << "\n";
  }
}

namespace {

enum class ModelKind : std::uint32_t { kGmm = 0, kLstm = 1, kDense = 2 };

std::string_view kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kGmm:
      return "gmm";
    case ModelKind::kLstm:
      return "lstm";
    case ModelKind::kDense:
      return "dense";
  }
  return "unknown";
}

ModelKind kind_of(const clf::TrainedModel& m) {
  if (std::holds_alternative<clf::GaussianClassModel>(m)) return ModelKind::kGmm;
  if (std::holds_alternative<nn::LstmParams>(m)) return ModelKind::kLstm;
  return ModelKind::kDense;
}

std::uint32_t output_code(nn::OutputActivation a) { return a == nn::OutputActivation::kSoftmax ? 0 : 1; }

nn::OutputActivation output_from_code(std::uint32_t c) {
  if (c > 1) {
    throw IoError("invalid output activation code in model file");
  }
  return c == 0 ? nn::OutputActivation::kSoftmax : nn::OutputActivation::kSigmoid;
}

}  // namespace

json model_metadata(const clf::SequenceModel& model, const std::string& provenance_hash) {
  json meta = {{"format", "qreadout-model"},
               {"model_version", kModelVersion},
               {"descriptor_version", kDescriptorVersion},
               {"model_kind", std::string(kind_name(kind_of(model.model)))},
               {"descriptor", to_json(model.descriptor)},
               {"train_config", to_json(model.train_config)},
               {"samples_per_shot", model.samples_per_shot},
               {"sample_rate", model.sample_rate},
               {"param_count", model.param_count()}};
  if (!provenance_hash.empty()) {
    meta["config_hash"] = provenance_hash;
  }
  return meta;
}

void write_model(const std::filesystem::path& path, const clf::SequenceModel& model,
                 const std::string& provenance_hash) {
  Writer w;
  w.bytes(kModelMagic.data(), kModelMagic.size());
  w.uint<std::uint32_t>(kModelVersion);
  const ModelKind kind = kind_of(model.model);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(kind));
  std::vector<double> params;
  if (const auto* gmm = std::get_if<clf::GaussianClassModel>(&model.model)) {
    w.uint<std::uint32_t>(sim::kNumStates);
    for (const auto& c : gmm->classes) {
      params.insert(params.end(), c.mean.begin(), c.mean.end());
      params.insert(params.end(), c.cov.begin(), c.cov.end());
      params.push_back(c.prior);
    }
  } else if (const auto* lstm = std::get_if<nn::LstmParams>(&model.model)) {
    const auto& a = lstm->arch();
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.input_dim));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.hidden_dims.size()));
    for (std::size_t h : a.hidden_dims) {
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(h));
    }
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.output_dim));
    w.uint<std::uint32_t>(a.readout_bias ? 1 : 0);
    w.uint<std::uint32_t>(output_code(a.output));
    params.assign(lstm->values().begin(), lstm->values().end());
  } else {
    const auto& dense = std::get<nn::DenseParams>(model.model);
    const auto& a = dense.arch();
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.input_dim));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.hidden_dims.size()));
    for (std::size_t h : a.hidden_dims) {
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(h));
    }
    for (nn::Activation act : a.hidden_activations) {
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(act));
    }
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(a.output_dim));
    w.uint<std::uint32_t>(output_code(a.output));
    params.assign(dense.values().begin(), dense.values().end());
  }
  w.uint<std::uint64_t>(params.size());
  for (double v : params) {
    w.f64(v);
  }
  write_binary(path, w.data());
  write_text(sidecar_path(path), model_metadata(model, provenance_hash).dump(1) + "\n");
}

clf::SequenceModel read_model(const std::filesystem::path& path) {
  const json meta = read_json(sidecar_path(path));
  if (meta.value("descriptor_version", 0u) != kDescriptorVersion) {
    throw IncompatibilityError(path.string() + ": descriptor version does not match this build");
  }
  clf::SequenceModel model;
  try {
    model.descriptor = pipeline_from_json(meta.at("descriptor"));
    model.train_config = train_config_from_json(meta.at("train_config"));
    model.samples_per_shot = meta.at("samples_per_shot").get<std::size_t>();
    model.sample_rate = meta.at("sample_rate").get<double>();
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": incomplete model metadata: " + e.what());
  }

  Reader r(read_binary(path), path.string());
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kModelMagic) {
    throw IoError(path.string() + " is not a model file");
  }
  if (r.uint<std::uint32_t>() != kModelVersion) {
    throw IncompatibilityError(path.string() + ": unsupported model version");
  }
  const auto kind = static_cast<ModelKind>(r.uint<std::uint32_t>());
  auto read_params = [&](std::span<double> out) {
    const auto n = r.uint<std::uint64_t>();
    if (n != out.size()) {
      throw IoError(path.string() + ": parameter count does not match architecture");
    }
    for (double& v : out) {
      v = r.f64();
    }
  };
  switch (kind) {
    case ModelKind::kGmm: {
      if (r.uint<std::uint32_t>() != sim::kNumStates) {
        throw IoError(path.string() + ": unexpected number of Gaussian classes");
      }
      std::vector<double> p(sim::kNumStates * 6);
      read_params(p);
      clf::GaussianClassModel gmm;
      for (std::size_t s = 0; s < sim::kNumStates; ++s) {
        const double* c = p.data() + 6 * s;
        gmm.classes[s].mean = {c[0], c[1]};
        gmm.classes[s].cov = {c[2], c[3], c[4]};
        gmm.classes[s].prior = c[5];
      }
      model.model = gmm;
      break;
    }
    case ModelKind::kLstm: {
      nn::LstmArch a;
      a.input_dim = r.uint<std::uint32_t>();
      a.hidden_dims.resize(r.uint<std::uint32_t>());
      for (auto& h : a.hidden_dims) {
        h = r.uint<std::uint32_t>();
      }
      a.output_dim = r.uint<std::uint32_t>();
      a.readout_bias = r.uint<std::uint32_t>() != 0;
      a.output = output_from_code(r.uint<std::uint32_t>());
      nn::LstmParams p(a);
      read_params(p.values());
      model.model = std::move(p);
      break;
    }
    case ModelKind::kDense: {
      nn::DenseArch a;
      a.input_dim = r.uint<std::uint32_t>();
      a.hidden_dims.resize(r.uint<std::uint32_t>());
      for (auto& h : a.hidden_dims) {
        h = r.uint<std::uint32_t>();
      }
      a.hidden_activations.resize(a.hidden_dims.size());
      for (auto& act : a.hidden_activations) {
        const auto code = r.uint<std::uint32_t>();
        if (code > static_cast<std::uint32_t>(nn::Activation::kSigmoid)) {
          throw IoError(path.string() + ": invalid activation code");
        }
        act = static_cast<nn::Activation>(code);
      }
      a.output_dim = r.uint<std::uint32_t>();
      a.output = output_from_code(r.uint<std::uint32_t>());
      nn::DenseParams p(a);
      read_params(p.values());
      model.model = std::move(p);
      break;
    }
    default:
      throw IoError(path.string() + ": unknown model kind");
  }
  if (!r.at_end()) {
    throw IoError(path.string() + ": trailing bytes after parameters");
  }
  return model;
}

}  // namespace qreadout::io
