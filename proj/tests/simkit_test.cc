#include "qreadout/simkit.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "qreadout/dsp.h"
#include "qreadout/errors.h"
#include "test_util.h"

using namespace qreadout;
using namespace qreadout::sim;

namespace {

void expect_valid_path(const StatePath& path, double duration, bool allow_up) {
  ASSERT_FALSE(path.segments.empty());
  EXPECT_EQ(path.segments.front().start_ns, 0.0);
  EXPECT_EQ(path.segments.back().end_ns, duration);
  for (std::size_t k = 0; k < path.segments.size(); ++k) {
    const Segment& s = path.segments[k];
    EXPECT_LE(s.start_ns, s.end_ns);
    if (k > 0) {
      const Segment& prev = path.segments[k - 1];
      EXPECT_EQ(prev.end_ns, s.start_ns);
      EXPECT_NE(prev.state, s.state);
      const int step = static_cast<int>(s.state) - static_cast<int>(prev.state);
      if (allow_up) {
        EXPECT_TRUE(step == -1 || step == 1);
      } else {
        EXPECT_EQ(step, -1);
      }
    }
  }
}

}  // namespace

TEST(SimKit, GroundStateNeverDecays) {
  SimConfig cfg;
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    StatePath p = sample_state_path(0, cfg, rng);
    ASSERT_EQ(p.segments.size(), 1u);
    EXPECT_EQ(p.segments[0], (Segment{0, 0.0, cfg.duration_ns}));
  }
}

TEST(SimKit, DisabledT1GivesSingleSegment) {
  SimConfig cfg;
  cfg.t1 = {std::nullopt, std::nullopt};
  Rng rng(2);
  StatePath p = sample_state_path(1, cfg, rng);
  ASSERT_EQ(p.segments.size(), 1u);
  EXPECT_EQ(p.segments[0], (Segment{1, 0.0, cfg.duration_ns}));
  EXPECT_EQ(sample_state_path(2, cfg, rng).segments.size(), 1u);
}

TEST(SimKit, DecayFractionMatchesExponentialCdf) {
  SimConfig cfg;
  cfg.t1 = {24000.0, 18000.0};
  cfg.duration_ns = 1000.0;
  const std::size_t n = 100000;
  Rng rng(3);
  std::size_t decayed = 0;
  for (std::size_t k = 0; k < n; ++k) {
    decayed += sample_state_path(1, cfg, rng).has_transition() ? 1 : 0;
  }
  const double p = 1.0 - std::exp(-1000.0 / 24000.0);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(decayed) / n, p, 3.0 * sigma);
}

TEST(SimKit, PathsTileWindowAndOnlyDecayWithoutExcitation) {
  SimConfig cfg;
  cfg.t1 = {300.0, 200.0};
  Rng rng(4);
  bool saw_cascade = false;
  for (int k = 0; k < 500; ++k) {
    StatePath p = sample_state_path(2, cfg, rng);
    expect_valid_path(p, cfg.duration_ns, false);
    saw_cascade |= p.segments.size() == 3;
  }
  EXPECT_TRUE(saw_cascade);
}

TEST(SimKit, ExcitationProducesUnitSteps) {
  SimConfig cfg;
  cfg.t1 = {300.0, 300.0};
  cfg.gamma_up = 1.0 / 300.0;
  Rng rng(5);
  bool saw_up = false;
  for (int k = 0; k < 500; ++k) {
    StatePath p = sample_state_path(static_cast<State>(k % 3), cfg, rng);
    expect_valid_path(p, cfg.duration_ns, true);
    for (std::size_t s = 1; s < p.segments.size(); ++s) {
      saw_up |= p.segments[s].state > p.segments[s - 1].state;
    }
  }
  EXPECT_TRUE(saw_up);
}

TEST(SimKit, ConfigValidation) {
  SimConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  Rng rng(6);
  EXPECT_THROW(sample_state_path(3, cfg, rng), ConfigError);

  auto bad = cfg;
  bad.t1[0] = 0.0;
  EXPECT_THROW(sample_state_path(1, bad, rng), ConfigError);
  bad = cfg;
  bad.t1[1] = -5.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.f_if = 1.0;  // Nyquist at 2 samples/ns
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.noise_sigma = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.duration_ns = 500.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.herald_error = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SimKit, DefaultSampleCounts) {
  SimConfig cfg;
  cfg.duration_ns = 750.0;
  EXPECT_EQ(cfg.samples_per_shot(), 1500u);
  cfg.duration_ns = 1000.0;
  EXPECT_EQ(cfg.samples_per_shot(), 2000u);
}

TEST(SimKit, NoiselessSteadyStateIsPureSinusoid) {
  SimConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.ring_time = 0.0;
  cfg.state_envelopes[1] = {0.7, 0.4};
  Rng rng(7);
  StatePath path{{{1, 0.0, cfg.duration_ns}}};
  RawShot shot = synthesize_shot(path, cfg, rng);
  ASSERT_EQ(shot.samples.size(), cfg.samples_per_shot());
  const auto expected = test_util::tone(shot.samples.size(), cfg.dt(), cfg.f_if, 0.7, 0.4);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    ASSERT_NEAR(shot.samples[k], expected[k], 1e-6);
  }
}

TEST(SimKit, NoiselessShotSpectrumPeaksAtCarrier) {
  SimConfig cfg;
  cfg.noise_sigma = 0.0;
  Rng rng(8);
  RawShot shot = synthesize_shot(sample_state_path(2, cfg, rng), cfg, rng);
  const auto x = dsp::to_double(shot.samples);
  const auto X = test_util::naive_dft(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k <= x.size() / 2; ++k) {
    if (std::abs(X[k]) > std::abs(X[best])) {
      best = k;
    }
  }
  const double df = 1.0 / (static_cast<double>(x.size()) * cfg.dt());
  EXPECT_NEAR(static_cast<double>(best) * df, cfg.f_if, 0.5 * df);
}

TEST(SimKit, RingUpRelaxesTowardTarget) {
  SimConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.ring_time = 50.0;
  Rng rng(9);
  RawShot shot = synthesize_shot(StatePath{{{0, 0.0, cfg.duration_ns}}}, cfg, rng);
  auto traj = dsp::demodulate(dsp::to_double(shot.samples), cfg.dt(), cfg.f_if);
  // One carrier period (20 samples) per bin removes the double-frequency term.
  auto binned = dsp::bin(traj, 20);
  const double amp = cfg.state_envelopes[0].amplitude;
  EXPECT_LT(std::hypot(binned.i.front(), binned.q.front()), 0.25 * amp);
  EXPECT_NEAR(binned.i.back(), amp * std::cos(cfg.state_envelopes[0].phase), 1e-3);
}

TEST(SimKit, HeraldFlag) {
  SimConfig cfg;
  cfg.herald_error = 0.0;
  Rng rng(10);
  for (int k = 0; k < 50; ++k) {
    EXPECT_TRUE(synthesize_shot(sample_state_path(1, cfg, rng), cfg, rng).herald_pass);
  }
  cfg.herald_error = 0.5;
  int failed = 0;
  for (int k = 0; k < 200; ++k) {
    failed += synthesize_shot(sample_state_path(1, cfg, rng), cfg, rng).herald_pass ? 0 : 1;
  }
  EXPECT_GT(failed, 50);
  EXPECT_LT(failed, 150);
}

TEST(SimKit, GenerateDatasetCountsAndLabels) {
  SimConfig cfg;
  cfg.duration_ns = 750.0;
  Dataset ds = generate_dataset(cfg, 10);
  ASSERT_EQ(ds.shots.size(), 30u);
  std::array<int, 3> per_state{};
  for (std::size_t k = 0; k < ds.shots.size(); ++k) {
    const RawShot& s = ds.shots[k];
    EXPECT_EQ(s.shot_id, k);
    EXPECT_EQ(s.samples.size(), 1500u);
    EXPECT_TRUE(s.herald_pass);
    EXPECT_EQ(s.label, s.true_path.initial_state());
    ++per_state[s.label];
  }
  EXPECT_EQ(per_state, (std::array<int, 3>{10, 10, 10}));
  EXPECT_THROW(generate_dataset(cfg, 0), ArgumentError);
  EXPECT_THROW(generate_dataset(cfg, std::size_t{1} << 40), DatasetSizeError);
}

TEST(SimKit, RejectedShotsAreRegenerated) {
  SimConfig cfg;
  cfg.herald_error = 0.5;
  Dataset ds = generate_dataset(cfg, 1000);
  std::array<int, 3> per_state{};
  for (const RawShot& s : ds.shots) {
    EXPECT_TRUE(s.herald_pass);
    ++per_state[s.label];
  }
  EXPECT_EQ(per_state, (std::array<int, 3>{1000, 1000, 1000}));
}

TEST(SimKit, DeterministicAndThreadIndependent) {
  SimConfig cfg;
  cfg.t1 = {2000.0, 2000.0};
  const Dataset a = generate_dataset(cfg, 20, 1);
  const Dataset b = generate_dataset(cfg, 20, 1);
  const Dataset c = generate_dataset(cfg, 20, 4);
  ASSERT_EQ(a.shots.size(), c.shots.size());
  for (std::size_t k = 0; k < a.shots.size(); ++k) {
    EXPECT_EQ(a.shots[k].samples, b.shots[k].samples);
    EXPECT_EQ(a.shots[k].samples, c.shots[k].samples);
    EXPECT_EQ(a.shots[k].true_path, c.shots[k].true_path);
  }
  cfg.seed += 1;
  const Dataset d = generate_dataset(cfg, 20, 1);
  EXPECT_NE(a.shots[0].samples, d.shots[0].samples);
}

TEST(SimKit, IntegratedClusterMeansAreDistinct) {
  SimConfig cfg;
  cfg.t1 = {std::nullopt, std::nullopt};
  const Dataset ds = generate_dataset(cfg, 50);
  std::array<std::complex<double>, 3> mean{};
  for (const RawShot& s : ds.shots) {
    const auto p = dsp::integrate(dsp::demodulate(s, cfg.dt(), cfg.f_if));
    mean[s.label] += std::complex<double>(p.i, p.q) / 50.0;
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      EXPECT_GT(std::abs(mean[a] - mean[b]), 0.5);
    }
  }
}
