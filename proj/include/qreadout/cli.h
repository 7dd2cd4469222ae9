#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreadout/nn/network.h"
#include "qreadout/pipeline.h"
#include "qreadout/simkit.h"

namespace qreadout::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

struct RunConfig {
  sim::SimConfig sim;
  std::size_t shots_per_state = 25000;
  nn::TrainConfig train;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;
  std::vector<clf::PipelineDescriptor> pipelines;
  std::string output_dir = ".";
  unsigned threads = 1;

  // Pipeline names must be unique and every component valid.
  void validate() const;
  const clf::PipelineDescriptor& pipeline(const std::string& name) const;
};

// Missing keys keep their defaults; the default pipeline list holds every preset.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
// An empty path yields the defaults.
RunConfig load_run_config(const std::filesystem::path& path);

// Entry point shared by the executable and tests. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qreadout::cli
