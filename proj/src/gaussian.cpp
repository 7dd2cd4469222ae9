#include "qreadout/gaussian.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qreadout/errors.h"

namespace qreadout::clf {

GaussianClassModel fit_gaussian_classes(std::span<const dsp::IqPoint> points, std::span<const sim::State> labels) {
  if (points.size() != labels.size()) {
    throw ArgumentError("points and labels differ in length");
  }
  std::array<std::size_t, sim::kNumStates> count{};
  std::array<std::array<double, 2>, sim::kNumStates> sum{};
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (labels[k] >= sim::kNumStates) {
      throw ArgumentError("label out of range");
    }
    if (!std::isfinite(points[k].i) || !std::isfinite(points[k].q)) {
      throw ArgumentError("non-finite I-Q point");
    }
    ++count[labels[k]];
    sum[labels[k]][0] += points[k].i;
    sum[labels[k]][1] += points[k].q;
  }
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    if (count[s] < 3) {
      throw InsufficientDataError("state " + std::to_string(s) + " has " + std::to_string(count[s]) +
                                  " points, at least 3 are needed");
    }
  }

  GaussianClassModel model;
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    const double n = static_cast<double>(count[s]);
    model.classes[s].mean = {sum[s][0] / n, sum[s][1] / n};
    model.classes[s].prior = n / static_cast<double>(points.size());
    model.classes[s].cov = {0.0, 0.0, 0.0};
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto& c = model.classes[labels[k]];
    const double di = points[k].i - c.mean[0];
    const double dq = points[k].q - c.mean[1];
    c.cov[0] += di * di;
    c.cov[1] += di * dq;
    c.cov[2] += dq * dq;
  }
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    auto& c = model.classes[s];
    const double n = static_cast<double>(count[s]);
    for (double& v : c.cov) {
      v /= n;
    }
    const double load = 1e-9 * (c.cov[0] + c.cov[2]) / 2.0;
    c.cov[0] += load;
    c.cov[2] += load;
    const double det = c.cov[0] * c.cov[2] - c.cov[1] * c.cov[1];
    // Cholesky of a 2x2 SPD matrix exists iff xx > 0 and det > 0.
    if (!(c.cov[0] > 0.0) || !(det > 0.0)) {
      throw DegenerateDataError("covariance of state " + std::to_string(s) + " is singular");
    }
  }
  return model;
}

std::array<double, sim::kNumStates> gmm_log_scores(const GaussianClassModel& model, dsp::IqPoint point) {
  std::array<double, sim::kNumStates> score{};
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    const auto& c = model.classes[s];
    const double det = c.cov[0] * c.cov[2] - c.cov[1] * c.cov[1];
    const double di = point.i - c.mean[0];
    const double dq = point.q - c.mean[1];
    const double maha = (c.cov[2] * di * di - 2.0 * c.cov[1] * di * dq + c.cov[0] * dq * dq) / det;
    score[s] = std::log(c.prior) - 0.5 * std::log(det) - 0.5 * maha - std::log(2.0 * std::numbers::pi);
  }
  return score;
}

GmmDecision gmm_classify(const GaussianClassModel& model, dsp::IqPoint point) {
  const auto score = gmm_log_scores(model, point);
  GmmDecision d;
  for (std::size_t s = 1; s < sim::kNumStates; ++s) {
    if (score[s] > score[d.label]) {
      d.label = static_cast<sim::State>(s);
    }
  }
  const double peak = score[d.label];
  double total = 0.0;
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    d.posteriors[s] = std::exp(score[s] - peak);
    total += d.posteriors[s];
  }
  for (double& p : d.posteriors) {
    p /= total;
  }
  return d;
}

std::vector<double> compute_sample_weights(const GaussianClassModel& model, std::span<const dsp::IqPoint> points,
                                           std::span<const sim::State> labels, double floor) {
  if (points.size() != labels.size()) {
    throw ArgumentError("points and labels differ in length");
  }
  std::vector<double> w(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (labels[k] >= sim::kNumStates) {
      throw ArgumentError("label out of range");
    }
    w[k] = std::max(floor, gmm_classify(model, points[k]).posteriors[labels[k]]);
  }
  return w;
}

}  // namespace qreadout::clf
