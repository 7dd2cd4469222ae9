#include "qreadout/simkit.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <thread>

#include "qreadout/errors.h"

namespace qreadout::sim {

State StatePath::state_at(double t_ns) const {
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (t_ns >= it->start_ns) {
      return it->state;
    }
  }
  return segments.front().state;
}

std::size_t SimConfig::samples_per_shot() const {
  return static_cast<std::size_t>(std::llround(duration_ns * sample_rate));
}

void SimConfig::validate() const {
  if (!(duration_ns >= 750.0 && duration_ns <= 1000.0)) {
    throw ConfigError("duration must lie in [750, 1000] ns, got " + std::to_string(duration_ns));
  }
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw ConfigError("sample_rate must be positive");
  }
  const double n = duration_ns * sample_rate;
  if (std::abs(n - std::round(n)) > 1e-9 * n) {
    throw ConfigError("duration * sample_rate must be a whole number of samples");
  }
  if (!(f_if > 0.0) || !(f_if < sample_rate / 2.0)) {
    throw ConfigError("f_if must lie in (0, sample_rate/2)");
  }
  for (const RelaxationTime& t : t1) {
    if (t.has_value() && !(*t > 0.0 && std::isfinite(*t))) {
      throw ConfigError("t1 entries must be positive (use the disabled sentinel for no decay)");
    }
  }
  if (!(gamma_up >= 0.0) || !std::isfinite(gamma_up)) {
    throw ConfigError("gamma_up must be non-negative");
  }
  for (const Envelope& e : state_envelopes) {
    if (!std::isfinite(e.amplitude) || e.amplitude < 0.0 || !std::isfinite(e.phase)) {
      throw ConfigError("state envelopes must have finite non-negative amplitude and finite phase");
    }
  }
  if (!(ring_time >= 0.0) || !std::isfinite(ring_time)) {
    throw ConfigError("ring_time must be non-negative");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("noise_sigma must be non-negative");
  }
  if (!(phase_noise_sigma >= 0.0) || !std::isfinite(phase_noise_sigma)) {
    throw ConfigError("phase_noise_sigma must be non-negative");
  }
  if (!(herald_error >= 0.0 && herald_error < 1.0)) {
    throw ConfigError("herald_error must lie in [0, 1)");
  }
}

StatePath sample_state_path(State prepared, const SimConfig& cfg, Rng& rng) {
  if (prepared >= kNumStates) {
    throw ConfigError("prepared state must be 0, 1 or 2");
  }
  cfg.validate();

  StatePath path;
  State s = prepared;
  double t = 0.0;
  for (;;) {
    const double down = (s > 0 && cfg.t1[s - 1].has_value()) ? 1.0 / *cfg.t1[s - 1] : 0.0;
    const double up = (static_cast<std::size_t>(s) + 1 < kNumStates) ? cfg.gamma_up : 0.0;
    const double total = down + up;
    double next = cfg.duration_ns;
    if (total > 0.0) {
      const double wait = -std::log(1.0 - uniform01(rng)) / total;
      next = std::min(t + wait, cfg.duration_ns);
    }
    path.segments.push_back({s, t, next});
    if (next >= cfg.duration_ns) {
      break;
    }
    const bool go_up = uniform01(rng) * total < up;
    s = go_up ? static_cast<State>(s + 1) : static_cast<State>(s - 1);
    t = next;
  }
  return path;
}

RawShot synthesize_shot(const StatePath& path, const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  if (path.segments.empty() || std::abs(path.segments.back().end_ns - cfg.duration_ns) > 1e-9) {
    throw ArgumentError("state path does not span the configured readout duration");
  }

  RawShot shot;
  shot.label = path.initial_state();
  shot.herald_pass = !(uniform01(rng) < cfg.herald_error);
  shot.true_path = path;

  const std::size_t n = cfg.samples_per_shot();
  const double dt = cfg.dt();
  const double omega = 2.0 * std::numbers::pi * cfg.f_if;
  auto target = [&](State s) { return std::polar(cfg.state_envelopes[s].amplitude, cfg.state_envelopes[s].phase); };

  shot.samples.resize(n);
  std::complex<double> envelope = cfg.ring_time > 0.0 ? std::complex<double>{} : target(path.initial_state());
  std::size_t seg = 0;
  double t_prev = 0.0;
  double phase_noise = 0.0;
  const double phase_step = cfg.phase_noise_sigma * std::sqrt(dt);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (cfg.ring_time > 0.0) {
      // Exact first-order relaxation across every segment touched by (t_prev, t].
      double a = t_prev;
      while (a < t) {
        while (seg + 1 < path.segments.size() && path.segments[seg].end_ns <= a) {
          ++seg;
        }
        const double b = std::min(t, path.segments[seg].end_ns > a ? path.segments[seg].end_ns : t);
        const std::complex<double> goal = target(path.segments[seg].state);
        envelope = goal + (envelope - goal) * std::exp(-(b - a) / cfg.ring_time);
        a = b;
      }
    } else {
      while (seg + 1 < path.segments.size() && path.segments[seg].end_ns <= t) {
        ++seg;
      }
      envelope = target(path.segments[seg].state);
    }
    t_prev = t;

    if (k > 0 && phase_step > 0.0) {
      phase_noise += phase_step * standard_normal(rng);
    }
    const double carrier = omega * t + phase_noise;
    double value = envelope.real() * std::cos(carrier) - envelope.imag() * std::sin(carrier);
    if (cfg.noise_sigma > 0.0) {
      value += cfg.noise_sigma * standard_normal(rng);
    }
    shot.samples[k] = static_cast<float>(value);
  }
  return shot;
}

Dataset generate_dataset(const SimConfig& cfg, std::size_t shots_per_state, unsigned threads) {
  cfg.validate();
  if (shots_per_state < 1) {
    throw ArgumentError("shots_per_state must be at least 1");
  }
  const std::uint64_t payload = static_cast<std::uint64_t>(shots_per_state) * kNumStates *
                                cfg.samples_per_shot() * sizeof(float);
  if (shots_per_state > kMaxDatasetBytes || payload > kMaxDatasetBytes) {
    throw DatasetSizeError("requested dataset needs " + std::to_string(payload) +
                           " bytes of samples, limit is " + std::to_string(kMaxDatasetBytes));
  }

  Dataset ds;
  ds.config = cfg;
  const std::size_t total = shots_per_state * kNumStates;
  ds.shots.resize(total);

  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t slot = begin; slot < end; ++slot) {
      const State prepared = static_cast<State>(slot / shots_per_state);
      const std::uint64_t index = slot % shots_per_state;
      for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng = make_rng(cfg.seed, {prepared, index, attempt});
        StatePath path = sample_state_path(prepared, cfg, rng);
        RawShot shot = synthesize_shot(path, cfg, rng);
        if (shot.herald_pass) {
          shot.shot_id = slot;
          ds.shots[slot] = std::move(shot);
          break;
        }
      }
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    fill(0, total);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = std::min(total, w * chunk);
      const std::size_t end = std::min(total, begin + chunk);
      workers.emplace_back(fill, begin, end);
    }
  }
  return ds;
}

}  // namespace qreadout::sim
