#include <doctest.h>

#include <cmath>
#include <vector>

#include "fpi/attractor.hpp"
#include "fpi/fields.hpp"
#include "fpi/generator.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/random.hpp"
#include "fpi/stepper.hpp"

using namespace fpi;

namespace {

Grid build_grid(int n) {
  GridSpec spec;
  spec.dim = 2;
  spec.extent = {1.0, 1.0, 1.0};
  spec.cells = {n, n, 1};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

TimeParams fast_params(double dt, double horizon) {
  TimeParams p;
  p.dt = dt;
  p.horizon = horizon;
  p.theta = 0.5;
  p.nonlinear_iterations = 1;
  p.solver_tol = 1e-11;
  return p;
}

// States spread along the segment s * base, s in [0,1]: a one-dimensional set.
std::vector<SystemState> segment_cloud(const Grid& g, const SystemState& base, int count) {
  std::vector<SystemState> cloud;
  cloud.reserve(count);
  RngStream rng(77, 5);
  for (int i = 0; i < count; ++i) {
    const double s = rng.uniform();
    SystemState p(g);
    axpy(s, base.v, p.v);
    axpy(s, base.plate.u, p.plate.u);
    axpy(s, base.plate.ut, p.plate.ut);
    p.sync_interface();
    cloud.push_back(p);
  }
  return cloud;
}

}  // namespace

TEST_SUITE("attractor") {

TEST_CASE("correlation dimension recovers a line and a plane") {
  const Grid g = build_grid(8);
  RngStream rng(31, 1);
  SystemState base = random_state(g, rng, 1.0);

  DimensionReport line = dimension_probe(segment_cloud(g, base, 360), 0.0);
  CHECK_FALSE(line.degenerate);
  CHECK(line.samples == 360);
  CHECK(line.dimension >= 0.8);
  CHECK(line.dimension <= 1.2);
  CHECK(line.band_low <= line.dimension);
  CHECK(line.band_high >= line.dimension);
  REQUIRE(line.log_eps.size() == line.log_c.size());
  CHECK(line.log_eps.size() >= 6);
  // correlation counts are monotone in the radius
  for (std::size_t i = 1; i < line.log_c.size(); ++i) {
    CHECK(line.log_c[i] >= line.log_c[i - 1] - 1e-12);
  }

  // two orthogonal directions: dimension near two
  SystemState second = random_state(g, rng, 1.0);
  const double proj = phase_inner_product(second, base) / phase_inner_product(base, base);
  axpy(-proj, base.v, second.v);
  axpy(-proj, base.plate.u, second.plate.u);
  axpy(-proj, base.plate.ut, second.plate.ut);
  second.sync_interface();

  std::vector<SystemState> plane;
  RngStream prng(78, 6);
  for (int i = 0; i < 360; ++i) {
    SystemState p(g);
    const double a = prng.uniform();
    const double b = prng.uniform();
    axpy(a, base.v, p.v);
    axpy(a, base.plate.u, p.plate.u);
    axpy(a, base.plate.ut, p.plate.ut);
    axpy(b, second.v, p.v);
    axpy(b, second.plate.u, p.plate.u);
    axpy(b, second.plate.ut, p.plate.ut);
    p.sync_interface();
    plane.push_back(p);
  }
  DimensionReport flat = dimension_probe(plane, 0.0);
  CHECK(flat.dimension >= 1.6);
  CHECK(flat.dimension <= 2.4);
}

TEST_CASE("dimension probe flags degenerate clouds") {
  const Grid g = build_grid(6);
  RngStream rng(3, 2);
  SystemState s = random_state(g, rng, 1.0);
  std::vector<SystemState> same(24, s);
  DimensionReport rep = dimension_probe(same, 0.0);
  CHECK(rep.degenerate);

  std::vector<SystemState> tiny(3, s);
  CHECK(dimension_probe(tiny, 0.0).samples <= 3);
}

TEST_CASE("transient fraction drops the leading samples") {
  const Grid g = build_grid(6);
  RngStream rng(9, 3);
  SystemState base = random_state(g, rng, 1.0);
  std::vector<SystemState> cloud = segment_cloud(g, base, 200);
  DimensionReport all = dimension_probe(cloud, 0.0);
  DimensionReport tail = dimension_probe(cloud, 0.5);
  CHECK(all.samples == 200);
  CHECK(tail.samples == 100);
}

TEST_CASE("regularity monitor accepts a decaying trajectory and rejects growth") {
  const Grid g = build_grid(8);
  RngStream rng(13, 4);
  SystemState s0 = random_state(g, rng, 1.0);
  TimeParams p = fast_params(1e-2, 1.2);
  p.snapshot_cadence = 4;
  RunResult run = run_simulation(g, PotentialSpec::quartic(1.0), p, VelocityField(g), s0);
  REQUIRE(run.snapshots.size() >= 6);

  RegularityReport rep = attractor_regularity_check(run.snapshots, 4 * p.dt);
  CHECK(rep.bounded);
  CHECK(rep.sup_v_t > 0.0);
  CHECK(rep.sup_laplacian > 0.0);
  CHECK(rep.sup_ut_half > 0.0);
  CHECK(rep.sup_u_tt > 0.0);
  CHECK(rep.sup_plate_balance > 0.0);

  // exponentially growing synthetic sequence trips the growth detector
  std::vector<SystemState> growing;
  for (int n = 0; n < 10; ++n) {
    SystemState s = s0;
    const double f = std::exp(0.9 * n);
    scale(s.v, f);
    scale(s.plate.u, f);
    scale(s.plate.ut, f);
    s.sync_interface();
    s.t = 0.1 * n;
    growing.push_back(s);
  }
  RegularityReport bad = attractor_regularity_check(growing, 0.1);
  CHECK_FALSE(bad.bounded);

  // too-short histories cannot certify boundedness
  std::vector<SystemState> stub(run.snapshots.begin(), run.snapshots.begin() + 3);
  CHECK_FALSE(attractor_regularity_check(stub, 4 * p.dt).bounded);
}

TEST_CASE("absorbing ensemble yields an invariant ball with finite entry times") {
  const Grid g = build_grid(8);
  const PotentialSpec quartic = PotentialSpec::quartic(1.0);
  VelocityField forcing = vortex_field(g, 0.5);
  TimeParams p = fast_params(1e-2, 2.5);
  p.output_cadence = 2;

  AbsorbingSetReport rep =
      absorbing_set_check(g, quartic, p, forcing, 0.6, 4, 2024, 1.0);
  CHECK(rep.trajectories == 4);
  CHECK(rep.c0 > 0.0);
  CHECK(rep.c1 > 0.0);
  CHECK(rep.envelope_margin >= 0.0);
  CHECK(rep.ball_radius > 0.0);
  REQUIRE(rep.entry_times.size() == 4);
  for (double t : rep.entry_times) {
    CHECK(t >= 0.0);
    CHECK(t <= 2.5);
  }
  CHECK(rep.restart_invariant);
  CHECK(rep.restart_max_norm <= rep.ball_radius * (1.0 + 1e-6));
}

TEST_CASE("stabilizability margins hold at the linear rate") {
  const Grid g = build_grid(8);
  const GeneratorMatrix gen = assemble_generator(g);
  const double omega = -0.9 * spectral_abscissa(gen).abscissa;
  REQUIRE(omega > 0.0);

  const PotentialSpec quartic = PotentialSpec::quartic(1.0);
  VelocityField forcing(g);
  TimeParams p = fast_params(1e-2, 2.0);

  StabilizabilityReport rep =
      stabilizability_check(g, quartic, p, forcing, omega, 0.8, 4, 7);
  CHECK(rep.omega == doctest::Approx(omega).epsilon(1e-15));
  REQUIRE(rep.pairs.size() == 4);
  CHECK(rep.min_margin >= 0.0);
  for (const auto& pair : rep.pairs) {
    CHECK(pair.initial_distance > 0.0);
    CHECK(pair.c0 >= 1.0);
    CHECK(pair.c_r >= 0.0);
    CHECK(pair.margin >= rep.min_margin - 1e-15);
  }
}

}  // TEST_SUITE
