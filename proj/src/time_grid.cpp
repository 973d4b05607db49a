#include "supctrl/time_grid.hpp"

#include <cmath>
#include <sstream>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

int checked_ratio(double length, double dt, const char* name) {
  const long long n = std::llround(length / dt);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - length) > 1e-12 * length) {
    std::ostringstream msg;
    msg << "step " << dt << " does not tile " << name << " = " << length
        << " (ratio " << length / dt << ")";
    throw NonCommensurateStep(msg.str());
  }
  return static_cast<int>(n);
}

}  // namespace

TimeGrid make_grid(double tau, double horizon, double dt) {
  if (!(dt > 0.0) || !(tau > 0.0) || !(horizon > 0.0)) {
    throw NonCommensurateStep("tau, T and dt must all be positive");
  }
  TimeGrid g;
  g.tau = tau;
  g.horizon = horizon;
  g.dt = dt;
  g.n_hist = checked_ratio(tau, dt, "tau");
  g.n_fwd = checked_ratio(horizon, dt, "T");
  return g;
}

int TimeGrid::index(double t) const {
  return static_cast<int>(std::llround(t / dt)) + n_hist;
}

}  // namespace supctrl
