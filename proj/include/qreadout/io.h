#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qreadout/pipeline.h"
#include "qreadout/simkit.h"

namespace qreadout::io {

using nlohmann::json;

json to_json(const sim::SimConfig& cfg);
sim::SimConfig sim_config_from_json(const json& j);

json to_json(const nn::TrainConfig& cfg);
nn::TrainConfig train_config_from_json(const json& j);

json to_json(const clf::PipelineDescriptor& desc);
clf::PipelineDescriptor pipeline_from_json(const json& j);

// FNV-1a 64 over the compact dump, rendered as 16 hex digits.
std::string config_hash(const json& j);
std::string bytes_hash(std::string_view bytes);

// Named pipelines: gmm, lstm, path+lstm, filter+lstm, dnn, filter+dnn, signature+dnn.
const std::vector<std::string>& pipeline_preset_names();
clf::PipelineDescriptor pipeline_preset(const std::string& name, double f_if,
                                        std::size_t bin_size = dsp::kDefaultBinSize);

// Binary dataset container:
//   bytes 0-7   magic "QRDSET\0\0"
//   bytes 8-11  u32 format version
//   bytes 12-15 u32 reserved (0)
//   u64 shot count, u32 samples per shot, f64 sample rate
//   per shot: u8 label, u8 herald flag, f32 samples[samples per shot]
// All integers and floats little-endian. The sidecar `<path>.json` records the
// SimConfig (including seed), shots per state, config hash and per-shot ground-truth paths.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& path, const sim::Dataset& ds);
sim::Dataset read_dataset(const std::filesystem::path& path);

// One row per shot: shot_id, label, samples...; preceded by a header row.
void export_csv(const sim::Dataset& ds, std::ostream& out);

// Binary model format:
//   bytes 0-7  magic "QRMODEL\0", u32 version, u32 model kind (0 gmm, 1 lstm, 2 dense)
//   architecture descriptor (kind-specific, u32 fields), u64 parameter count,
//   f64 parameters in declaration order. Sidecar `<path>.json` carries the
//   pipeline descriptor, TrainConfig and input shape.
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::uint32_t kDescriptorVersion = 1;

void write_model(const std::filesystem::path& path, const clf::SequenceModel& model,
                 const std::string& provenance_hash = {});
clf::SequenceModel read_model(const std::filesystem::path& path);
json model_metadata(const clf::SequenceModel& model, const std::string& provenance_hash = {});

// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qreadout::io
