#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qreadout/rng.h"

namespace qreadout::sim {

using State = std::uint8_t;
inline constexpr std::size_t kNumStates = 3;

struct Segment {
  State state = 0;
  double start_ns = 0.0;
  double end_ns = 0.0;

  bool operator==(const Segment&) const = default;
};

// Piecewise-constant qubit state over the readout window.
struct StatePath {
  std::vector<Segment> segments;

  State initial_state() const { return segments.front().state; }
  bool has_transition() const { return segments.size() > 1; }
  // State occupied at time t (the later segment wins at a boundary).
  State state_at(double t_ns) const;

  bool operator==(const StatePath&) const = default;
};

// Relaxation time in ns; std::nullopt is the "disabled" sentinel (no decay).
using RelaxationTime = std::optional<double>;

struct Envelope {
  double amplitude = 1.0;  // ADC units
  double phase = 0.0;      // radians

  bool operator==(const Envelope&) const = default;
};

struct SimConfig {
  double duration_ns = 1000.0;
  double sample_rate = 2.0;  // samples per ns
  // t1[0] relaxes |1> -> |0>, t1[1] relaxes |2> -> |1>.
  std::array<RelaxationTime, 2> t1 = {5000.0, 4000.0};
  double gamma_up = 0.0;  // 1/ns
  std::array<Envelope, kNumStates> state_envelopes = {
      Envelope{1.0, 0.0}, Envelope{1.0, 2.0943951023931957}, Envelope{1.0, 4.1887902047863905}};
  double f_if = 0.1;       // cycles/ns
  double ring_time = 50.0; // ns; 0 means the envelope follows the state instantly
  double noise_sigma = 5.0;
  double phase_noise_sigma = 0.0;  // rad/sqrt(ns)
  double herald_error = 0.0;
  std::uint64_t seed = 20240601;

  std::size_t samples_per_shot() const;
  double dt() const { return 1.0 / sample_rate; }

  // Throws ConfigError on any violated constraint.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct RawShot {
  std::vector<float> samples;
  State label = 0;
  bool herald_pass = true;
  StatePath true_path;
  std::uint64_t shot_id = 0;
};

struct Dataset {
  SimConfig config;
  std::vector<RawShot> shots;

  std::size_t samples_per_shot() const { return config.samples_per_shot(); }
  double sample_rate() const { return config.sample_rate; }
};

StatePath sample_state_path(State prepared, const SimConfig& cfg, Rng& rng);

RawShot synthesize_shot(const StatePath& path, const SimConfig& cfg, Rng& rng);

// Shots are ordered by prepared state then slot; shot_id equals the position
// in the returned collection. A shot that fails heralding is discarded and its
// slot regenerated from a fresh stream.
Dataset generate_dataset(const SimConfig& cfg, std::size_t shots_per_state, unsigned threads = 1);

// Upper bound on the in-memory sample payload accepted by generate_dataset.
inline constexpr std::uint64_t kMaxDatasetBytes = 4ULL << 30;

}  // namespace qreadout::sim
