#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qreadout/simkit.h"

namespace qreadout::dsp {

enum class Origin { kRawDemod, kFiltered, kBinned, kPath };

std::string_view origin_name(Origin origin);

// Demodulated (I, Q) time series. Also carries filtered, binned and
// path-transformed variants, distinguished by `origin`.
struct IqTrajectory {
  std::vector<double> i;
  std::vector<double> q;
  double dt = 1.0;  // ns per sample
  Origin origin = Origin::kRawDemod;

  std::size_t size() const { return i.size(); }
};

struct IqPoint {
  double i = 0.0;
  double q = 0.0;
};

// One-sided magnitude spectrum. Normalized so that the sum of squared
// magnitudes equals the sum of squared input samples.
struct Spectrum {
  std::vector<double> freqs;  // cycles/ns
  std::vector<double> magnitude;
};

// Unnormalized forward DFT and its inverse (the inverse divides by N), so
// inverse_dft(forward_dft(x)) == x.
std::vector<std::complex<double>> forward_dft(std::span<const std::complex<double>> x);
std::vector<std::complex<double>> inverse_dft(std::span<const std::complex<double>> x);

// i[n] = 2 s[n] cos(2 pi f t_n), q[n] = -2 s[n] sin(2 pi f t_n); no decimation.
IqTrajectory demodulate(std::span<const double> samples, double dt, double f_if);
IqTrajectory demodulate(const sim::RawShot& shot, double dt, double f_if);

Spectrum spectrum(std::span<const double> samples, double dt);

inline constexpr double kDefaultHalfWidth = 0.005;  // cycles/ns, i.e. +-5 MHz

// Brick-wall band-pass: every DFT bin with |f| outside
// [center - half_width, center + half_width] is zeroed.
std::vector<double> bandpass(std::span<const double> samples, double dt, double center,
                             double half_width = kDefaultHalfWidth);
// Filters the I and Q channels independently with the same band.
IqTrajectory bandpass(const IqTrajectory& traj, double center, double half_width = kDefaultHalfWidth);

inline constexpr std::size_t kDefaultBinSize = 25;

// Means of consecutive bin_size blocks; a trailing partial block is dropped.
IqTrajectory bin(const IqTrajectory& traj, std::size_t bin_size);

IqPoint integrate(const IqTrajectory& traj);

std::vector<double> to_double(std::span<const float> samples);

}  // namespace qreadout::dsp
