#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/generator.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/random.hpp"
#include "fpi/stepper.hpp"
#include "fpi/stokes.hpp"

using namespace fpi;

namespace {

Grid build_grid(int dim, int n) {
  GridSpec spec;
  spec.dim = dim;
  spec.extent = {1.0, 1.0, 1.0};
  spec.cells = {n, n, (dim == 3) ? n : 1};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

TimeParams base_params(double dt, double horizon) {
  TimeParams p;
  p.dt = dt;
  p.horizon = horizon;
  p.theta = 0.5;
  p.solver_tol = 1e-12;
  return p;
}

double max_abs_divergence(const VelocityField& v) {
  PressureField div = divergence(v);
  double m = 0.0;
  for (double q : div.val) m = std::max(m, std::abs(q));
  return m;
}

// theta-average of the fluid parts of two states, trace included
VelocityField theta_average(const SystemState& before, const SystemState& after, double theta) {
  VelocityField mid = before.v;
  scale(mid, 1.0 - theta);
  axpy(theta, after.v, mid);
  PlateField wm = before.plate.ut;
  scale(wm, 1.0 - theta);
  axpy(theta, after.plate.ut, wm);
  mid.top_trace = wm;
  return mid;
}

}  // namespace

TEST_SUITE("stepper") {

TEST_CASE("time parameter validation") {
  TimeParams p = base_params(1e-2, 1.0);
  p.validate();

  TimeParams bad = p;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.theta = 0.4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.theta = 1.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.nonlinear_iterations = 4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.output_cadence = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.solver_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("energy breakdown matches the quadratic forms") {
  const Grid g = build_grid(2, 6);
  RngStream rng(2, 0);
  SystemState s = random_state(g, rng, 1.2);
  const PotentialSpec quartic = PotentialSpec::quartic(0.8);
  const EnergyBreakdown e = total_energy(s, quartic);
  CHECK(e.fluid == doctest::Approx(0.5 * dot_velocity(s.v, s.v)).epsilon(1e-13));
  CHECK(e.plate_kinetic ==
        doctest::Approx(0.5 * dot_plate(s.plate.ut, s.plate.ut)).epsilon(1e-13));
  CHECK(e.plate_elastic ==
        doctest::Approx(0.5 * plate_form_a(s.plate.u, s.plate.u)).epsilon(1e-13));
  CHECK(e.potential == doctest::Approx(potential_energy(s.plate.u, quartic)).epsilon(1e-13));
  CHECK(e.total() == doctest::Approx(e.fluid + e.plate_kinetic + e.plate_elastic +
                                     e.potential).epsilon(1e-15));
}

TEST_CASE("one linear step balances energy exactly at theta one half") {
  for (int dim = 2; dim <= 3; ++dim) {
    const Grid g = build_grid(dim, (dim == 2) ? 8 : 4);
    RngStream rng(3, dim);
    SystemState s0 = random_state(g, rng, 1.0);
    const PotentialSpec zero = PotentialSpec::zero();
    VelocityField forcing = vortex_field(g, 0.8);
    if (dim == 3) forcing = leray_project(forcing, 1e-12).v;

    TimeParams p = base_params(1e-2, 1e-2);
    CoupledStepper stepper(g, zero, p, forcing);

    SystemState s1 = s0;
    stepper.step(s1);
    CHECK(s1.t == doctest::Approx(1e-2).epsilon(1e-12));

    const VelocityField mid = theta_average(s0, s1, p.theta);
    const double de = total_energy(s1, zero).total() - total_energy(s0, zero).total();
    const double expected = -p.dt * g.nu() * grad_norm_sq(mid) + p.dt * dot_velocity(forcing, mid);
    CHECK(std::abs(de - expected) <= 1e-13 * std::max(1.0, std::abs(de)));

    // kinematics: u1 - u0 = dt * average plate velocity
    PlateField du = s1.plate.u;
    axpy(-1.0, s0.plate.u, du);
    PlateField wm = s0.plate.ut;
    scale(wm, 1.0 - p.theta);
    axpy(p.theta, s1.plate.ut, wm);
    axpy(-p.dt, wm, du);
    CHECK(norm_plate(du) <= 1e-14);
  }
}

TEST_CASE("implicit weighting adds numerical dissipation for theta above one half") {
  const Grid g = build_grid(2, 8);
  RngStream rng(9, 1);
  SystemState s0 = random_state(g, rng, 1.0);
  const PotentialSpec zero = PotentialSpec::zero();
  VelocityField forcing(g);

  TimeParams p = base_params(1e-2, 1e-2);
  p.theta = 1.0;
  CoupledStepper stepper(g, zero, p, forcing);
  SystemState s1 = s0;
  stepper.step(s1);

  const VelocityField mid = theta_average(s0, s1, p.theta);
  const double de = total_energy(s1, zero).total() - total_energy(s0, zero).total();
  const double scheme_diss = -p.dt * g.nu() * grad_norm_sq(mid);
  CHECK(de <= scheme_diss + 1e-13);
}

TEST_CASE("steps preserve the divergence constraint and the interface") {
  const Grid g = build_grid(2, 8);
  RngStream rng(4, 2);
  SystemState s = random_state(g, rng, 1.0);
  const PotentialSpec quartic = PotentialSpec::quartic(1.0);
  VelocityField forcing = vortex_field(g, 0.5);
  TimeParams p = base_params(1e-2, 1e-2);
  p.nonlinear_iterations = 1;
  CoupledStepper stepper(g, quartic, p, forcing);
  for (int n = 0; n < 10; ++n) stepper.step(s);

  CHECK(max_abs_divergence(s.v) <= 1e-10);
  PlateField gap = s.v.top_trace;
  axpy(-1.0, s.plate.ut, gap);
  CHECK(norm_plate(gap) <= 1e-14);
  // clamped plate nodes never move
  for (int c = 0; c < g.plate_components(); ++c) {
    CHECK(s.plate.u.at(c, 0) == 0.0);
    CHECK(s.plate.u.at(c, g.cells(c)) == 0.0);
  }
}

TEST_CASE("zero data with zero forcing is a fixed point") {
  const Grid g = build_grid(2, 6);
  SystemState s(g);
  VelocityField forcing(g);
  CoupledStepper stepper(g, PotentialSpec::quartic(1.0), base_params(1e-2, 1e-2), forcing);
  for (int n = 0; n < 5; ++n) stepper.step(s);
  CHECK(phase_norm(s) == 0.0);
}

TEST_CASE("unforced linear energy decreases monotonically") {
  const Grid g = build_grid(2, 8);
  RngStream rng(8, 3);
  SystemState s = random_state(g, rng, 1.0);
  VelocityField forcing(g);
  const PotentialSpec zero = PotentialSpec::zero();
  CoupledStepper stepper(g, zero, base_params(5e-3, 1.0), forcing);
  double prev = total_energy(s, zero).total();
  for (int n = 0; n < 40; ++n) {
    stepper.step(s);
    const double now = total_energy(s, zero).total();
    CHECK(now <= prev * (1.0 + 1e-14));
    prev = now;
  }
}

TEST_CASE("forced linear run settles on the stationary stokes solution") {
  const Grid g = build_grid(2, 8);
  VelocityField forcing = vortex_field(g, 1.0);
  const PotentialSpec zero = PotentialSpec::zero();

  TimeParams p = base_params(2e-2, 40.0);
  p.output_cadence = 200;
  RunResult run = run_simulation(g, zero, p, forcing, SystemState(g));

  // at equilibrium the plate is at rest and the fluid solves stationary
  // stokes with zero interface data
  CHECK(norm_plate(run.final_state.plate.ut) <= 1e-6);
  StokesSolution stokes = solve_stationary_stokes(forcing, PlateField(g), 1e-12);
  VelocityField dv = run.final_state.v;
  axpy(-1.0, stokes.v, dv);
  CHECK(norm_velocity(dv) <= 1e-5);

  // the plate carries the equilibrium shear: A u = -gamma(v; 0)
  VelocityField rest = run.final_state.v;
  rest.top_trace.set_zero();
  PlateField balance = apply_plate_operator(run.final_state.plate.u);
  axpy(1.0, interface_shear(rest), balance);
  CHECK(norm_plate(balance) <= 1e-5);
}

TEST_CASE("ledger closes to round-off for linear dynamics") {
  const Grid g = build_grid(2, 8);
  RngStream rng(6, 4);
  SystemState s0 = random_state(g, rng, 1.0);
  VelocityField forcing = vortex_field(g, 0.7);
  TimeParams p = base_params(1e-2, 1.0);
  p.output_cadence = 5;

  RunResult run = run_simulation(g, PotentialSpec::zero(), p, forcing, s0);
  REQUIRE(!run.ledger.empty());
  double worst = 0.0;
  for (const auto& row : run.ledger) worst = std::max(worst, std::abs(row.residual));
  CHECK(worst <= 1e-12);
  CHECK_FALSE(run.instability_warning);

  // ledger columns are consistent with the tracked state
  const LedgerRow& last = run.ledger.back();
  const EnergyBreakdown e = total_energy(run.final_state, PotentialSpec::zero());
  CHECK(last.e_fluid == doctest::Approx(e.fluid).epsilon(1e-12));
  CHECK(last.norm_h == doctest::Approx(phase_norm(run.final_state)).epsilon(1e-12));
  CHECK(last.t == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nonlinear ledger residual converges at second order") {
  const Grid g = build_grid(2, 8);
  RngStream rng(6, 5);
  SystemState s0 = random_state(g, rng, 1.0);
  VelocityField forcing = vortex_field(g, 0.5);
  const PotentialSpec quartic = PotentialSpec::quartic(1.0);

  auto max_residual = [&](double dt) {
    TimeParams p = base_params(dt, 0.5);
    p.nonlinear_iterations = 1;
    p.output_cadence = 1;
    RunResult run = run_simulation(g, quartic, p, forcing, s0);
    double worst = 0.0;
    for (const auto& row : run.ledger) worst = std::max(worst, std::abs(row.residual));
    return worst;
  };

  const double coarse = max_residual(1e-2);
  const double fine = max_residual(5e-3);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine >= 3.0);
  CHECK(coarse / fine <= 5.5);
}

TEST_CASE("nonlinear corrections stay stable and balanced") {
  const Grid g = build_grid(2, 8);
  RngStream rng(12, 6);
  SystemState s0 = random_state(g, rng, 1.0);
  VelocityField forcing = vortex_field(g, 0.5);
  const PotentialSpec quartic = PotentialSpec::quartic(1.0);

  for (int iters : {0, 2}) {
    TimeParams p = base_params(1e-2, 0.5);
    p.nonlinear_iterations = iters;
    RunResult run = run_simulation(g, quartic, p, forcing, s0);
    CHECK_FALSE(run.instability_warning);
    double worst = 0.0;
    for (const auto& row : run.ledger) worst = std::max(worst, std::abs(row.residual));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("single step matches the dense propagator at second order") {
  const Grid g = build_grid(2, 4);
  const GeneratorMatrix gen = assemble_generator(g);
  RngStream rng(10, 7);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(gen.size());
  for (int i = 0; i < gen.size(); ++i) x0[i] = rng.symmetric();
  // smooth data: damp stiff modes that dt cannot resolve
  x0 = (exp_minus_tA(gen, 0.5) * x0).eval();
  x0 /= std::sqrt(x0.dot(gen.gram * x0));
  SystemState u0 = coords_to_state(gen, x0);

  const double t_end = 0.4;
  auto stepping_error = [&](double dt) {
    TimeParams p = base_params(dt, t_end);
    VelocityField forcing(g);
    SystemState s = u0;
    CoupledStepper stepper(g, PotentialSpec::zero(), p, forcing);
    const int steps = static_cast<int>(std::llround(t_end / dt));
    for (int n = 0; n < steps; ++n) stepper.step(s);
    SystemState exact = coords_to_state(gen, Eigen::VectorXd(exp_minus_tA(gen, t_end) * x0));
    SystemState diff = s;
    axpy(-1.0, exact.v, diff.v);
    axpy(-1.0, exact.plate.u, diff.plate.u);
    axpy(-1.0, exact.plate.ut, diff.plate.ut);
    diff.sync_interface();
    return phase_norm(diff);
  };

  const double e1 = stepping_error(0.05);
  const double e2 = stepping_error(0.025);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 1.7);
  CHECK(order <= 2.3);
}

TEST_CASE("decay fit recovers synthetic exponential rates") {
  std::vector<double> times, norms;
  for (int n = 0; n <= 200; ++n) {
    const double t = 0.05 * n;
    times.push_back(t);
    norms.push_back(3.0 * std::exp(-0.85 * t));
  }
  DecayFit fit = decay_rate_fit(times, norms, 0.6);
  CHECK(fit.samples >= 4);
  CHECK(fit.alpha == doctest::Approx(0.85).epsilon(1e-9));
  CHECK(fit.r_squared >= 1.0 - 1e-12);
  CHECK(fit.window_start > 0.0);
  CHECK(fit.window_end == doctest::Approx(10.0).epsilon(1e-12));

  // samples at the noise floor are skipped
  std::vector<double> noisy = norms;
  for (std::size_t i = 150; i < noisy.size(); ++i) noisy[i] = 1e-16;
  DecayFit partial = decay_rate_fit(times, noisy, 0.9);
  CHECK(partial.samples > 0);
  CHECK(partial.alpha == doctest::Approx(0.85).epsilon(1e-6));

  DecayFit empty = decay_rate_fit({0.0, 1.0}, {1.0, 0.5}, 0.6);
  CHECK(empty.samples == 0);
}

TEST_CASE("continuous dependence ratio is exactly one for linear dynamics") {
  const Grid g = build_grid(2, 8);
  RngStream rng(14, 8);
  SystemState a = random_state(g, rng, 1.0);
  SystemState b = a;
  PlateField bump = random_plate_field(g, rng, 1e-3);
  axpy(1.0, bump, b.plate.u);

  VelocityField forcing(g);
  TimeParams p = base_params(1e-2, 0.5);
  ContinuousDependenceReport rep =
      continuous_dependence_probe(g, PotentialSpec::zero(), p, forcing, a, b);
  CHECK(rep.initial_distance > 0.0);
  CHECK(rep.ratio == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.max_distance <= rep.initial_distance * (1.0 + 1e-12));

  ContinuousDependenceReport same =
      continuous_dependence_probe(g, PotentialSpec::zero(), p, forcing, a, a);
  CHECK(same.initial_distance == 0.0);
  CHECK(same.ratio == 0.0);

  // nonlinear coupling keeps the ratio near one for small perturbations
  ContinuousDependenceReport nl = continuous_dependence_probe(
      g, PotentialSpec::quartic(1.0), p, vortex_field(g, 0.5), a, b);
  CHECK(nl.ratio >= 1.0 - 1e-12);
  CHECK(nl.ratio <= 2.0);
}

TEST_CASE("run bookkeeping: cadences, snapshots, projection of raw data") {
  const Grid g = build_grid(2, 6);
  RngStream rng(20, 9);

  // raw (non-solenoidal) initial data is projected before stepping
  SystemState s0(g);
  for (int c = 0; c < 2; ++c) {
    for (int n = 0; n < g.comp_size(c); ++n) s0.v.comp[c][n] = rng.symmetric();
  }
  for (int j = 0; j < g.cells(1); ++j) {
    s0.v.at(0, 0, j) = 0.0;
    s0.v.at(0, g.cells(0), j) = 0.0;
  }
  for (int i = 0; i < g.cells(0); ++i) {
    s0.v.at(1, i, 0) = 0.0;
    s0.v.at(1, i, g.cells(1)) = 0.0;
  }

  TimeParams p = base_params(1e-2, 0.1);
  p.output_cadence = 4;
  p.snapshot_cadence = 5;
  RunResult run = run_simulation(g, PotentialSpec::zero(), p, VelocityField(g), s0);

  // 10 steps: ledger rows at 0,4,8,10; snapshots at 0,5,10
  CHECK(run.ledger.size() == 4);
  CHECK(run.snapshots.size() == 3);
  CHECK(run.snapshots.front().t == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(run.snapshots.back().t == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(max_abs_divergence(run.snapshots.front().v) <= 1e-9);
  CHECK(run.eta > 0.0);
}

TEST_CASE("lyapunov candidate stays within the energy sandwich") {
  const Grid g = build_grid(2, 8);
  const PlateSpectrum spectrum(g);
  const HarmonicExtensionTable n0(g, 1e-11);
  const double eta = lyapunov_eta_threshold(g, spectrum, n0);
  CHECK(eta > 0.0);

  RngStream rng(40, 10);
  const PotentialSpec quartic = PotentialSpec::quartic(1.0);
  for (int trial = 0; trial < 12; ++trial) {
    SystemState s = random_state(g, rng, 0.2 + 0.4 * trial);
    const double e = total_energy(s, quartic).total();
    const double w = lyapunov_w(s, quartic, eta, n0);
    CHECK(w >= 0.5 * e * (1.0 - 1e-10));
    CHECK(w <= 2.0 * e * (1.0 + 1e-10));
  }
}

}  // TEST_SUITE
