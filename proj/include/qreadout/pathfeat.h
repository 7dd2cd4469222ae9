#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qreadout/dsp.h"

namespace qreadout::pathfeat {

// Truncated tensor-algebra element over R^2, flattened level-major. Within a
// level, words are ordered lexicographically with letter 0 = I, 1 = Q.
struct SignatureVector {
  int order = 0;
  std::vector<double> values;

  // Offset of level k inside `values` (2^k - 1).
  static std::size_t level_offset(int level) { return (std::size_t{1} << level) - 1; }
  static std::size_t length_for(int order) { return (std::size_t{1} << (order + 1)) - 1; }

  std::span<const double> level(int k) const {
    return std::span<const double>(values).subspan(level_offset(k), std::size_t{1} << k);
  }
};

inline constexpr int kDefaultOrder = 5;
inline constexpr int kMaxOrder = 8;

// out[n] = sum_{m<=n} w[m] (in[m] - in[m-1]) with in[-1] = in[0]; channels
// are transformed independently. An empty weight list means uniform unit weights.
dsp::IqTrajectory path_transform(const dsp::IqTrajectory& traj, std::span<const double> weights = {});

// Signature of the piecewise-linear path through the trajectory's (i, q)
// points, built from per-segment tensor exponentials joined by Chen's rule.
SignatureVector signature(const dsp::IqTrajectory& traj, int order = kDefaultOrder);

// exp(delta) truncated at `order`: level k holds delta^{(x)k} / k!.
SignatureVector segment_signature(double di, double dq, int order);

// Truncated tensor product a (x) b; both operands must share an order.
SignatureVector chen_product(const SignatureVector& a, const SignatureVector& b);

}  // namespace qreadout::pathfeat
