#include <doctest.h>

#include "supctrl/errors.hpp"
#include "supctrl/time_grid.hpp"
#include "supctrl/trajectory.hpp"

using namespace supctrl;

TEST_CASE("grid tiling for the tracking setup") {
  const TimeGrid g = make_grid(0.2, 3.0, 1e-3);
  CHECK(g.n_hist == 200);
  CHECK(g.n_fwd == 3000);
  CHECK(g.node_count() == 3201);
}

TEST_CASE("single-step tiling") {
  const TimeGrid g = make_grid(1.0, 1.0, 1.0);
  CHECK(g.n_hist == 1);
  CHECK(g.n_fwd == 1);
}

TEST_CASE("non-commensurate step is rejected") {
  CHECK_THROWS_AS(make_grid(0.2, 3.0, 0.3), NonCommensurateStep);
  CHECK_THROWS_AS(make_grid(0.2, 3.0, 0.0), NonCommensurateStep);
  CHECK_THROWS_AS(make_grid(-0.2, 3.0, 0.1), NonCommensurateStep);
  CHECK_THROWS_AS(make_grid(0.2, 3.0, 0.4), NonCommensurateStep);  // > tau
}

TEST_CASE("node time round-trips exactly") {
  for (const TimeGrid g : {make_grid(0.2, 3.0, 1e-3), make_grid(2.0, 1.0, 1e-4),
                           make_grid(0.7, 1.4, 0.07)}) {
    for (int i = 0; i < g.node_count(); ++i) {
      const double t = g.time(i);
      CHECK(g.index(t) == i);
      CHECK(g.time(g.index(t)) == t);  // bitwise
    }
    CHECK(g.time(g.n_hist) == 0.0);
    CHECK(g.forward_time(0) == 0.0);
  }
}

TEST_CASE("trajectory spans and sampling") {
  const TimeGrid g = make_grid(0.5, 1.0, 0.25);
  Trajectory full = Trajectory::sampled(g, 2, Span::Full,
                                        [](double t, int c) { return t + c; });
  CHECK(full.node_count() == g.node_count());
  CHECK(full.at(0, 0) == doctest::Approx(-0.5));
  CHECK(full.at(0, 1) == doctest::Approx(0.5));

  Trajectory fwd = Trajectory::constant(g, 1, Span::Forward, 3.0);
  CHECK(fwd.node_count() == g.forward_node_count());
  CHECK(fwd.time(0) == 0.0);
  CHECK(fwd.max_abs() == 3.0);
  CHECK(fwd.all_finite());
}
