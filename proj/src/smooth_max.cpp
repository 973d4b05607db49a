#include "supctrl/smooth_max.hpp"

#include <algorithm>
#include <cmath>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace detail {

WindowStats scan_window(const double* first, int count, int stride, double k) {
  double m = first[0];
  double s = 0.0;
  if (stride == 1) {  // contiguous fast path (vectorizable max scan)
    for (int i = 1; i < count; ++i) m = std::max(m, first[i]);
    const double floor = m + kNegligibleExponent / k;
    for (int i = 0; i < count; ++i) {
      if (first[i] >= floor) s += std::exp(k * (first[i] - m));
    }
  } else {
    for (int i = 1; i < count; ++i) m = std::max(m, first[i * stride]);
    const double floor = m + kNegligibleExponent / k;
    for (int i = 0; i < count; ++i) {
      const double v = first[i * stride];
      if (v >= floor) s += std::exp(k * (v - m));
    }
  }
  return {m, s};
}

}  // namespace detail

namespace {

void check_sharpness(double k) {
  if (!(k > 0.0)) throw BadSharpness("sharpness parameter k must be positive");
}

}  // namespace

double lse(std::span<const double> values, double k) {
  check_sharpness(k);
  if (values.empty()) throw EmptyInput("lse: empty value list");
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(k * (v - m));
  return m + std::log(s) / k;
}

SmoothMaxResult lie_window(std::span<const double> window, double dt, double k) {
  check_sharpness(k);
  if (window.empty()) throw EmptyWindow("lie_window: empty window");
  const auto stats = detail::scan_window(window.data(),
                                         static_cast<int>(window.size()), 1, k);
  SmoothMaxResult out;
  out.k = k;
  out.value = stats.wmax + std::log(dt * stats.shifted_sum) / k;
  out.weights.resize(window.size());
  const double inv_mass = 1.0 / (dt * stats.shifted_sum);
  const double floor = stats.wmax + detail::kNegligibleExponent / k;
  for (std::size_t i = 0; i < window.size(); ++i) {
    out.weights[i] = window[i] >= floor
                         ? std::exp(k * (window[i] - stats.wmax)) * inv_mass
                         : 0.0;
  }
  return out;
}

VectorSmoothMaxResult lie_vector_window(std::span<const double> window,
                                        int n_samples, int n_components,
                                        double dt, double k) {
  check_sharpness(k);
  if (n_samples < 1) throw EmptyWindow("lie_vector_window: empty window");
  if (window.size() != static_cast<std::size_t>(n_samples) * n_components) {
    throw Error("lie_vector_window: window size does not match layout");
  }
  VectorSmoothMaxResult out;
  out.k = k;
  out.value.resize(n_components);
  out.weights.resize(window.size());
  for (int c = 0; c < n_components; ++c) {
    const auto stats =
        detail::scan_window(window.data() + c, n_samples, n_components, k);
    out.value[c] = stats.wmax + std::log(dt * stats.shifted_sum) / k;
    const double inv_mass = 1.0 / (dt * stats.shifted_sum);
    const double floor = stats.wmax + detail::kNegligibleExponent / k;
    for (int i = 0; i < n_samples; ++i) {
      const double v = window[static_cast<std::size_t>(i) * n_components + c];
      out.weights[static_cast<std::size_t>(i) * n_components + c] =
          v >= floor ? std::exp(k * (v - stats.wmax)) * inv_mass : 0.0;
    }
  }
  return out;
}

}  // namespace supctrl
