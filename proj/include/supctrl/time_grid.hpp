#pragma once

#include <cstdint>

namespace supctrl {

// Uniform grid on [-tau, T].  Node i sits at time -tau + i*dt; the history
// segment [-tau, 0] occupies nodes 0..n_hist and the forward segment [0, T]
// occupies nodes n_hist..n_hist+n_fwd.  dt must tile both tau and T exactly
// (checked to 1e-12 relative by make_grid).
struct TimeGrid {
  double tau = 0.0;
  double horizon = 0.0;
  double dt = 0.0;
  int n_hist = 0;  // tau / dt
  int n_fwd = 0;   // horizon / dt

  int node_count() const { return n_hist + n_fwd + 1; }
  int forward_node_count() const { return n_fwd + 1; }

  // Anchored at t=0 so forward node times are exact multiples of dt.
  double time(int node) const { return (node - n_hist) * dt; }
  double forward_time(int fwd_node) const { return fwd_node * dt; }

  int index(double t) const;  // nearest node; exact round-trip for node times

  bool operator==(const TimeGrid&) const = default;
};

// Throws NonCommensurateStep if dt does not tile tau and T.
TimeGrid make_grid(double tau, double horizon, double dt);

}  // namespace supctrl
