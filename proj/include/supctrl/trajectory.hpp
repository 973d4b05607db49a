#pragma once

#include <functional>
#include <vector>

#include "supctrl/time_grid.hpp"

namespace supctrl {

enum class Span { Full, Forward };  // [-tau, T] vs [0, T]

// Grid-sampled vector-valued function: one dim-vector per node of its span,
// stored row-major (node, component).  Used for states (Full), controls,
// adjoints and gradients (Forward).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(TimeGrid grid, int dim, Span span)
      : grid_(grid),
        dim_(dim),
        span_(span),
        values_(static_cast<std::size_t>(node_count()) * dim, 0.0) {}

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  Span span() const { return span_; }
  int node_count() const {
    return span_ == Span::Full ? grid_.node_count() : grid_.forward_node_count();
  }
  // Time of local node i (Full spans start at -tau, Forward spans at 0).
  double time(int node) const {
    return span_ == Span::Full ? grid_.time(node) : grid_.forward_time(node);
  }

  double& at(int node, int comp) { return values_[idx(node, comp)]; }
  double at(int node, int comp) const { return values_[idx(node, comp)]; }
  double* node_data(int node) { return values_.data() + idx(node, 0); }
  const double* node_data(int node) const { return values_.data() + idx(node, 0); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v) { values_.assign(values_.size(), v); }

  // Samples f(t) componentwise over every node of the span.
  static Trajectory sampled(TimeGrid grid, int dim, Span span,
                            const std::function<double(double, int)>& f);
  static Trajectory constant(TimeGrid grid, int dim, Span span, double value);

  double max_abs() const;
  bool all_finite() const;

 private:
  std::size_t idx(int node, int comp) const {
    return static_cast<std::size_t>(node) * dim_ + comp;
  }

  TimeGrid grid_;
  int dim_ = 0;
  Span span_ = Span::Forward;
  std::vector<double> values_;
};

// Sup-norm distance over shared nodes (both must have equal dims and spans).
double sup_distance(const Trajectory& a, const Trajectory& b);

}  // namespace supctrl
