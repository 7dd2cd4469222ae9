#pragma once

#include <array>
#include <span>
#include <vector>

#include "qreadout/dsp.h"
#include "qreadout/simkit.h"

namespace qreadout::clf {

struct GaussianClass {
  std::array<double, 2> mean{};
  // Symmetric 2x2 covariance stored as (xx, xy, yy).
  std::array<double, 3> cov{1.0, 0.0, 1.0};
  double prior = 1.0 / 3.0;
};

// Per-state 2-D Gaussians over integrated I-Q points.
struct GaussianClassModel {
  std::array<GaussianClass, sim::kNumStates> classes;
};

// Supervised maximum-likelihood fit: per-class sample mean and (biased) ML
// covariance, empirical priors, diagonal loading of 1e-9 * trace / 2.
GaussianClassModel fit_gaussian_classes(std::span<const dsp::IqPoint> points, std::span<const sim::State> labels);

struct GmmDecision {
  sim::State label = 0;
  std::array<double, sim::kNumStates> posteriors{};
};

// Maximum posterior state; ties go to the lower state index.
GmmDecision gmm_classify(const GaussianClassModel& model, dsp::IqPoint point);

// Per-class log(prior * density), the quantity gmm_classify normalizes.
std::array<double, sim::kNumStates> gmm_log_scores(const GaussianClassModel& model, dsp::IqPoint point);

inline constexpr double kDefaultWeightFloor = 0.1;

// weight_k = max(floor, posterior of labels[k] at points[k]).
std::vector<double> compute_sample_weights(const GaussianClassModel& model, std::span<const dsp::IqPoint> points,
                                           std::span<const sim::State> labels, double floor = kDefaultWeightFloor);

}  // namespace qreadout::clf
