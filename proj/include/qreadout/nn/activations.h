#pragma once

#include <cmath>
#include <span>
#include <string_view>

namespace qreadout::nn {

enum class Activation { kLinear, kRelu, kSelu, kTanh, kSigmoid };
enum class OutputActivation { kSoftmax, kSigmoid };

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double activate(Activation a, double x);
// Derivative expressed through the pre-activation z and the output y = act(z).
double activate_grad(Activation a, double z, double y);

// In-place softmax / elementwise sigmoid over logits.
void apply_output(OutputActivation a, std::span<double> logits);

// Weighted-cross-entropy loss of `probs` for class `label`. Softmax uses the
// categorical form -log p_y; sigmoid sums per-class binary cross-entropy.
double output_loss(OutputActivation a, std::span<const double> probs, std::size_t label);

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);
std::string_view output_name(OutputActivation a);
OutputActivation output_from_name(std::string_view name);

}  // namespace qreadout::nn
