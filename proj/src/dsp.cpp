#include "qreadout/dsp.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "qreadout/errors.h"

namespace qreadout::dsp {

namespace {

// FFTW planning is not thread-safe; execution with fresh buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

std::vector<std::complex<double>> run_dft(std::span<const std::complex<double>> x, int sign) {
  const std::size_t n = x.size();
  if (n == 0) {
    throw ArgumentError("DFT of an empty sequence");
  }
  FftwBuffer in(n);
  FftwBuffer out(n);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data, sign, FFTW_ESTIMATE);
  }
  for (std::size_t k = 0; k < n; ++k) {
    in.data[k][0] = x[k].real();
    in.data[k][1] = x[k].imag();
  }
  fftw_execute(plan);
  std::vector<std::complex<double>> result(n);
  for (std::size_t k = 0; k < n; ++k) {
    result[k] = {out.data[k][0], out.data[k][1]};
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return result;
}

void check_band(double dt, double center, double half_width) {
  const double nyquist = 0.5 / dt;
  if (!(half_width > 0.0) || !(center - half_width > 0.0) || !(center + half_width < nyquist)) {
    throw ConfigError("band [" + std::to_string(center - half_width) + ", " +
                      std::to_string(center + half_width) + "] must lie strictly inside (0, " +
                      std::to_string(nyquist) + ")");
  }
}

}  // namespace

std::string_view origin_name(Origin origin) {
  switch (origin) {
    case Origin::kRawDemod:
      return "raw-demod";
    case Origin::kFiltered:
      return "filtered";
    case Origin::kBinned:
      return "binned";
    case Origin::kPath:
      return "path";
  }
  return "unknown";
}

std::vector<std::complex<double>> forward_dft(std::span<const std::complex<double>> x) {
  return run_dft(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> inverse_dft(std::span<const std::complex<double>> x) {
  auto y = run_dft(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : y) {
    v *= scale;
  }
  return y;
}

IqTrajectory demodulate(std::span<const double> samples, double dt, double f_if) {
  if (!(dt > 0.0)) {
    throw ConfigError("dt must be positive");
  }
  if (!(f_if < 0.5 / dt)) {
    throw ConfigError("f_if must be below the Nyquist frequency");
  }
  if (samples.empty()) {
    throw ArgumentError("cannot demodulate an empty trace");
  }
  IqTrajectory traj;
  traj.dt = dt;
  traj.origin = Origin::kRawDemod;
  traj.i.resize(samples.size());
  traj.q.resize(samples.size());
  const double omega = 2.0 * std::numbers::pi * f_if;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const double phase = omega * static_cast<double>(n) * dt;
    traj.i[n] = 2.0 * samples[n] * std::cos(phase);
    traj.q[n] = -2.0 * samples[n] * std::sin(phase);
  }
  return traj;
}

IqTrajectory demodulate(const sim::RawShot& shot, double dt, double f_if) {
  const std::vector<double> s = to_double(shot.samples);
  return demodulate(s, dt, f_if);
}

Spectrum spectrum(std::span<const double> samples, double dt) {
  if (samples.size() < 2) {
    throw ArgumentError("spectrum needs at least two samples");
  }
  const std::size_t n = samples.size();
  std::vector<std::complex<double>> x(samples.begin(), samples.end());
  const auto X = forward_dft(x);
  const std::size_t half = n / 2;
  Spectrum s;
  s.freqs.resize(half + 1);
  s.magnitude.resize(half + 1);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k <= half; ++k) {
    s.freqs[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
    // Interior bins absorb their negative-frequency mirror.
    const bool self_mirrored = (k == 0) || (n % 2 == 0 && k == half);
    s.magnitude[k] = std::abs(X[k]) * norm * (self_mirrored ? 1.0 : std::numbers::sqrt2);
  }
  return s;
}

std::vector<double> bandpass(std::span<const double> samples, double dt, double center, double half_width) {
  check_band(dt, center, half_width);
  if (samples.empty()) {
    throw ArgumentError("cannot filter an empty trace");
  }
  const std::size_t n = samples.size();
  std::vector<std::complex<double>> x(samples.begin(), samples.end());
  auto X = forward_dft(x);
  const double df = 1.0 / (static_cast<double>(n) * dt);
  const double slack = 1e-6 * df;
  const double lo = center - half_width - slack;
  const double hi = center + half_width + slack;
  for (std::size_t k = 0; k < n; ++k) {
    // Bin k and bin n-k share |f|, so the mask stays conjugate-symmetric.
    const std::size_t mirrored = std::min(k, n - k);
    const double f = static_cast<double>(mirrored) * df;
    if (f < lo || f > hi) {
      X[k] = 0.0;
    }
  }
  const auto y = inverse_dft(X);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = y[k].real();
  }
  return out;
}

IqTrajectory bandpass(const IqTrajectory& traj, double center, double half_width) {
  IqTrajectory out;
  out.dt = traj.dt;
  out.origin = Origin::kFiltered;
  out.i = bandpass(traj.i, traj.dt, center, half_width);
  out.q = bandpass(traj.q, traj.dt, center, half_width);
  return out;
}

IqTrajectory bin(const IqTrajectory& traj, std::size_t bin_size) {
  if (bin_size < 1) {
    throw ArgumentError("bin_size must be at least 1");
  }
  if (bin_size > traj.size()) {
    throw ArgumentError("bin_size " + std::to_string(bin_size) + " exceeds trajectory length " +
                        std::to_string(traj.size()));
  }
  const std::size_t m = traj.size() / bin_size;
  IqTrajectory out;
  out.dt = traj.dt * static_cast<double>(bin_size);
  out.origin = Origin::kBinned;
  out.i.resize(m);
  out.q.resize(m);
  const double inv = 1.0 / static_cast<double>(bin_size);
  for (std::size_t b = 0; b < m; ++b) {
    double si = 0.0;
    double sq = 0.0;
    for (std::size_t k = b * bin_size; k < (b + 1) * bin_size; ++k) {
      si += traj.i[k];
      sq += traj.q[k];
    }
    out.i[b] = si * inv;
    out.q[b] = sq * inv;
  }
  return out;
}

IqPoint integrate(const IqTrajectory& traj) {
  if (traj.size() == 0) {
    throw ArgumentError("cannot integrate an empty trajectory");
  }
  double si = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    si += traj.i[k];
    sq += traj.q[k];
  }
  const double n = static_cast<double>(traj.size());
  return {si / n, sq / n};
}

std::vector<double> to_double(std::span<const float> samples) {
  return {samples.begin(), samples.end()};
}

}  // namespace qreadout::dsp
