#include "supctrl/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "supctrl/errors.hpp"

namespace supctrl {

Trajectory Trajectory::sampled(TimeGrid grid, int dim, Span span,
                               const std::function<double(double, int)>& f) {
  Trajectory out(grid, dim, span);
  for (int i = 0; i < out.node_count(); ++i) {
    const double t = out.time(i);
    for (int c = 0; c < dim; ++c) out.at(i, c) = f(t, c);
  }
  return out;
}

Trajectory Trajectory::constant(TimeGrid grid, int dim, Span span, double value) {
  Trajectory out(grid, dim, span);
  out.fill(value);
  return out;
}

double Trajectory::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Trajectory::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.dim() != b.dim() || a.span() != b.span() ||
      a.node_count() != b.node_count()) {
    throw Error("sup_distance: trajectory layouts differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

}  // namespace supctrl
