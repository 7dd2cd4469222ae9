#include "qreadout/pathfeat.h"

#include <string>

#include "qreadout/errors.h"

namespace qreadout::pathfeat {

namespace {

void check_order(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw ArgumentError("signature order must lie in [1, " + std::to_string(kMaxOrder) + "]");
  }
}

void transform_channel(std::span<const double> in, std::span<const double> w, std::vector<double>& out) {
  out.resize(in.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < in.size(); ++n) {
    const double inc = n == 0 ? 0.0 : in[n] - in[n - 1];
    acc += (w.empty() ? inc : w[n] * inc);
    out[n] = acc;
  }
}

}  // namespace

dsp::IqTrajectory path_transform(const dsp::IqTrajectory& traj, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != traj.size()) {
    throw ArgumentError("path_transform weights have length " + std::to_string(weights.size()) +
                        ", trajectory has " + std::to_string(traj.size()));
  }
  dsp::IqTrajectory out;
  out.dt = traj.dt;
  out.origin = dsp::Origin::kPath;
  transform_channel(traj.i, weights, out.i);
  transform_channel(traj.q, weights, out.q);
  return out;
}

SignatureVector segment_signature(double di, double dq, int order) {
  check_order(order);
  SignatureVector s;
  s.order = order;
  s.values.assign(SignatureVector::length_for(order), 0.0);
  s.values[0] = 1.0;
  // level k = level (k-1) (x) delta / k
  for (int k = 1; k <= order; ++k) {
    const std::size_t prev = SignatureVector::level_offset(k - 1);
    const std::size_t cur = SignatureVector::level_offset(k);
    const std::size_t prev_len = std::size_t{1} << (k - 1);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t w = 0; w < prev_len; ++w) {
      s.values[cur + 2 * w] = s.values[prev + w] * di * inv_k;
      s.values[cur + 2 * w + 1] = s.values[prev + w] * dq * inv_k;
    }
  }
  return s;
}

SignatureVector chen_product(const SignatureVector& a, const SignatureVector& b) {
  if (a.order != b.order) {
    throw ArgumentError("chen_product operands have different orders");
  }
  const int order = a.order;
  SignatureVector c;
  c.order = order;
  c.values.assign(SignatureVector::length_for(order), 0.0);
  for (int k = 0; k <= order; ++k) {
    double* out = c.values.data() + SignatureVector::level_offset(k);
    for (int j = 0; j <= k; ++j) {
      // (a_j (x) b_{k-j}): word u of length j followed by word v of length k-j.
      const double* left = a.values.data() + SignatureVector::level_offset(j);
      const double* right = b.values.data() + SignatureVector::level_offset(k - j);
      const std::size_t left_len = std::size_t{1} << j;
      const std::size_t right_len = std::size_t{1} << (k - j);
      for (std::size_t u = 0; u < left_len; ++u) {
        const double lu = left[u];
        if (lu == 0.0) {
          continue;
        }
        double* dst = out + u * right_len;
        for (std::size_t v = 0; v < right_len; ++v) {
          dst[v] += lu * right[v];
        }
      }
    }
  }
  return c;
}

SignatureVector signature(const dsp::IqTrajectory& traj, int order) {
  check_order(order);
  if (traj.size() < 2) {
    throw ArgumentError("signature needs a trajectory with at least two points");
  }
  SignatureVector acc = segment_signature(traj.i[1] - traj.i[0], traj.q[1] - traj.q[0], order);
  for (std::size_t n = 2; n < traj.size(); ++n) {
    acc = chen_product(acc, segment_signature(traj.i[n] - traj.i[n - 1], traj.q[n] - traj.q[n - 1], order));
  }
  return acc;
}

}  // namespace qreadout::pathfeat
