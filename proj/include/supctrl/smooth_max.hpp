#pragma once

#include <span>
#include <vector>

namespace supctrl {

// Smooth-max value of one discretized window together with the derivative
// weights.  `weights` is a density over the window samples: weights[i] >= 0
// and dt * sum(weights) == 1, so d(value)/d(sample i) = dt * weights[i].
struct SmoothMaxResult {
  double value = 0.0;
  std::vector<double> weights;
  double k = 0.0;
};

// log(sum exp(k*v_i)) / k, evaluated in shifted form so it never overflows.
// Satisfies max(v) <= lse(v, k) <= max(v) + log(n)/k.
double lse(std::span<const double> values, double k);

// Smooth maximum of a function window sampled at `window` with spacing dt:
// value = max + log(dt * sum exp(k*(w_i - max))) / k.  The rectangle-rule
// analogue of (1/k) log integral exp(k w); always evaluated shifted by the
// window max.
SmoothMaxResult lie_window(std::span<const double> window, double dt, double k);

// Componentwise smooth maximum of an n-component window.  `window` holds
// n_samples rows of n components (row-major); outputs mirror that layout.
struct VectorSmoothMaxResult {
  std::vector<double> value;    // n
  std::vector<double> weights;  // n_samples x n, row-major
  double k = 0.0;
};
VectorSmoothMaxResult lie_vector_window(std::span<const double> window,
                                        int n_samples, int n_components,
                                        double dt, double k);

namespace detail {

// Hot-path kernel shared by the integrators and the adjoint sweep.  Operates
// on a strided view of one component of a trajectory window.  Returns the
// window max and the shifted sum S = sum exp(k*(w_i - max)); the smooth-max
// value is max + log(dt*S)/k and weight i is exp(k*(w_i - max)) / (dt*S).
struct WindowStats {
  double wmax;
  double shifted_sum;
};
WindowStats scan_window(const double* first, int count, int stride, double k);

// Exponents below this threshold contribute less than 1e-17 relative to the
// shifted sum and are skipped.
inline constexpr double kNegligibleExponent = -46.0;

}  // namespace detail

}  // namespace supctrl
