#include "qreadout/dsp.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qreadout/errors.h"
#include "test_util.h"

using namespace qreadout;
using namespace qreadout::dsp;
using qreadout::test_util::rms;
using qreadout::test_util::tone;

namespace {

constexpr double kDt = 0.5;    // 2 samples/ns
constexpr double kFif = 0.1;   // cycles/ns
constexpr std::size_t kN = 2000;

std::vector<double> white_noise(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) {
    v = dist(gen);
  }
  return x;
}

IqTrajectory make_traj(std::vector<double> i, std::vector<double> q, double dt = 1.0) {
  IqTrajectory t;
  t.i = std::move(i);
  t.q = std::move(q);
  t.dt = dt;
  return t;
}

}  // namespace

TEST(Demodulate, ZeroInputGivesZeroTrajectory) {
  std::vector<double> zeros(100, 0.0);
  IqTrajectory t = demodulate(zeros, kDt, kFif);
  EXPECT_EQ(t.size(), 100u);
  EXPECT_TRUE(std::all_of(t.i.begin(), t.i.end(), [](double v) { return v == 0.0; }));
  EXPECT_TRUE(std::all_of(t.q.begin(), t.q.end(), [](double v) { return v == 0.0; }));
  EXPECT_EQ(t.origin, Origin::kRawDemod);
}

TEST(Demodulate, UnitToneMapsToUnitInPhase) {
  // 20 samples = one carrier period, so each bin averages the 2f term away.
  IqTrajectory b = bin(demodulate(tone(kN, kDt, kFif), kDt, kFif), 20);
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_NEAR(b.i[k], 1.0, 1e-6);
    EXPECT_NEAR(b.q[k], 0.0, 1e-6);
  }
}

TEST(Demodulate, QuarterPhaseToneMapsToQuadrature) {
  // cos(wt + pi/2) = -sin(wt); with q = -2 s sin(wt) the mean is +1.
  IqTrajectory b = bin(demodulate(tone(kN, kDt, kFif, 1.0, std::numbers::pi / 2), kDt, kFif), 20);
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_NEAR(b.i[k], 0.0, 1e-6);
    EXPECT_NEAR(b.q[k], 1.0, 1e-6);
  }
}

TEST(Demodulate, RejectsCarrierAboveNyquist) {
  std::vector<double> x(10, 1.0);
  EXPECT_THROW(demodulate(x, kDt, 1.0), ConfigError);
  EXPECT_THROW(demodulate(x, kDt, 1.5), ConfigError);
}

TEST(Spectrum, ConstantHasOnlyDc) {
  std::vector<double> x(64, 3.0);
  Spectrum s = spectrum(x, kDt);
  ASSERT_EQ(s.freqs.size(), 33u);
  EXPECT_GT(s.magnitude[0], 0.0);
  for (std::size_t k = 1; k < s.magnitude.size(); ++k) {
    EXPECT_NEAR(s.magnitude[k], 0.0, 1e-12);
  }
  EXPECT_TRUE(std::is_sorted(s.freqs.begin(), s.freqs.end()));
}

TEST(Spectrum, ToneAtBinPeaksThere) {
  const std::size_t n = 1000;
  const std::size_t bin_index = 137;
  const double f = static_cast<double>(bin_index) / (static_cast<double>(n) * kDt);
  Spectrum s = spectrum(tone(n, kDt, f), kDt);
  const auto peak = std::max_element(s.magnitude.begin(), s.magnitude.end()) - s.magnitude.begin();
  EXPECT_EQ(static_cast<std::size_t>(peak), bin_index);
}

TEST(Spectrum, ParsevalNormalization) {
  for (std::size_t n : {999u, 1000u}) {
    auto x = white_noise(n, 11);
    Spectrum s = spectrum(x, kDt);
    double e_time = 0.0;
    double e_freq = 0.0;
    for (double v : x) {
      e_time += v * v;
    }
    for (double m : s.magnitude) {
      e_freq += m * m;
    }
    EXPECT_NEAR(e_freq, e_time, 1e-9 * e_time);
  }
}

TEST(Spectrum, ForwardInverseRoundTrip) {
  auto re = white_noise(2000, 12);
  auto im = white_noise(2000, 13);
  std::vector<std::complex<double>> x(re.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = {re[k], im[k]};
  }
  auto y = inverse_dft(forward_dft(x));
  double err = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    err = std::max(err, std::abs(y[k] - x[k]));
    norm = std::max(norm, std::abs(x[k]));
  }
  EXPECT_LE(err, 1e-10 * norm);
}

TEST(Spectrum, MatchesReferenceDft) {
  auto x = white_noise(97, 14);
  auto ref = qreadout::test_util::naive_dft(x);
  std::vector<std::complex<double>> cx(x.begin(), x.end());
  auto got = forward_dft(cx);
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(std::abs(got[k] - ref[k]), 0.0, 1e-9);
  }
}

TEST(Spectrum, RejectsShortInput) {
  std::vector<double> one{1.0};
  EXPECT_THROW(spectrum(one, kDt), ArgumentError);
  EXPECT_THROW(spectrum(std::vector<double>{}, kDt), ArgumentError);
}

TEST(Bandpass, InBandTonePassesUnchanged) {
  auto x = tone(kN, kDt, kFif, 2.5, 0.3);
  auto y = bandpass(x, kDt, kFif);
  ASSERT_EQ(y.size(), x.size());
  double err = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    err = std::max(err, std::abs(y[k] - x[k]));
  }
  EXPECT_LE(err, 1e-6 * 2.5);
}

TEST(Bandpass, OutOfBandToneIsRemoved) {
  auto x = tone(kN, kDt, kFif + 4 * kDefaultHalfWidth);
  auto y = bandpass(x, kDt, kFif);
  EXPECT_LE(rms(y), 1e-6 * rms(x));
}

TEST(Bandpass, WhiteNoiseSpectrumConfinedToBand) {
  auto x = white_noise(kN, 15);
  auto y = bandpass(x, kDt, kFif);
  Spectrum s = spectrum(y, kDt);
  Spectrum s_in = spectrum(x, kDt);
  const double peak = *std::max_element(s_in.magnitude.begin(), s_in.magnitude.end());
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    if (std::abs(s.freqs[k] - kFif) > kDefaultHalfWidth + 1e-9) {
      EXPECT_LE(s.magnitude[k], 1e-12 * peak) << "bin " << k;
    }
  }
}

TEST(Bandpass, LinearIdempotentAndEnergyReducing) {
  auto x = white_noise(kN, 16);
  auto y = white_noise(kN, 17);
  const double a = 1.7;
  const double b = -0.4;
  std::vector<double> mix(kN);
  for (std::size_t k = 0; k < kN; ++k) {
    mix[k] = a * x[k] + b * y[k];
  }
  auto fx = bandpass(x, kDt, kFif);
  auto fy = bandpass(y, kDt, kFif);
  auto fmix = bandpass(mix, kDt, kFif);
  const double scale = rms(fmix);
  for (std::size_t k = 0; k < kN; ++k) {
    EXPECT_NEAR(fmix[k], a * fx[k] + b * fy[k], 1e-9 * scale);
  }
  auto twice = bandpass(fx, kDt, kFif);
  for (std::size_t k = 0; k < kN; ++k) {
    EXPECT_NEAR(twice[k], fx[k], 1e-9 * rms(fx));
  }
  EXPECT_LE(rms(fx), rms(x));
}

TEST(Bandpass, TrajectoryOverloadFiltersBothChannels) {
  auto traj = make_traj(tone(kN, kDt, kFif), tone(kN, kDt, 0.3), kDt);
  IqTrajectory f = bandpass(traj, kFif);
  EXPECT_EQ(f.origin, Origin::kFiltered);
  EXPECT_NEAR(rms(f.i), rms(traj.i), 1e-9);
  EXPECT_LE(rms(f.q), 1e-9);
}

TEST(Bandpass, RejectsBandOutsideNyquist) {
  auto x = tone(100, kDt, kFif);
  EXPECT_THROW(bandpass(x, kDt, 0.004, 0.005), ConfigError);
  EXPECT_THROW(bandpass(x, kDt, 0.998, 0.005), ConfigError);
  EXPECT_THROW(bandpass(x, kDt, 0.1, 0.0), ConfigError);
}

TEST(Bin, HandComputedMeans) {
  IqTrajectory t = make_traj({1, 3, 5, 7}, {0, 0, 2, 2}, 0.5);
  IqTrajectory b = bin(t, 2);
  EXPECT_EQ(b.i, (std::vector<double>{2, 6}));
  EXPECT_EQ(b.q, (std::vector<double>{0, 2}));
  EXPECT_DOUBLE_EQ(b.dt, 1.0);
  EXPECT_EQ(b.origin, Origin::kBinned);
}

TEST(Bin, IdentityConstantAndPartialDrop) {
  IqTrajectory t = make_traj({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
  IqTrajectory one = bin(t, 1);
  EXPECT_EQ(one.i, t.i);
  EXPECT_EQ(one.q, t.q);
  EXPECT_EQ(bin(t, 2).size(), 2u);
  IqTrajectory c = bin(make_traj(std::vector<double>(9, 0.25), std::vector<double>(9, -1.5)), 3);
  EXPECT_EQ(c.i, std::vector<double>(3, 0.25));
  EXPECT_EQ(c.q, std::vector<double>(3, -1.5));
  EXPECT_EQ(bin(make_traj(std::vector<double>(2000, 0.0), std::vector<double>(2000, 0.0)), 25).size(), 80u);
}

TEST(Bin, Errors) {
  IqTrajectory t = make_traj({1, 2}, {1, 2});
  EXPECT_THROW(bin(t, 0), ArgumentError);
  EXPECT_THROW(bin(t, 3), ArgumentError);
}

TEST(Integrate, Examples) {
  IqPoint p = integrate(make_traj({0, 2}, {-1, 1}));
  EXPECT_DOUBLE_EQ(p.i, 1.0);
  EXPECT_DOUBLE_EQ(p.q, 0.0);
  IqPoint c = integrate(make_traj(std::vector<double>(7, 0.5), std::vector<double>(7, -2.0)));
  EXPECT_DOUBLE_EQ(c.i, 0.5);
  EXPECT_DOUBLE_EQ(c.q, -2.0);
  EXPECT_THROW(integrate(IqTrajectory{}), ArgumentError);
}

TEST(Integrate, CommutesWithBinning) {
  auto i = white_noise(2000, 18);
  auto q = white_noise(2000, 19);
  IqTrajectory t = make_traj(i, q, kDt);
  for (std::size_t k : {1u, 4u, 25u, 40u}) {
    IqPoint a = integrate(bin(t, k));
    IqPoint b = integrate(t);
    EXPECT_NEAR(a.i, b.i, 1e-12);
    EXPECT_NEAR(a.q, b.q, 1e-12);
  }
}
