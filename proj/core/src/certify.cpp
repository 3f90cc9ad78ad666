#include "fpi/certify.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "fpi/attractor.hpp"
#include "fpi/fields.hpp"
#include "fpi/generator.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/random.hpp"
#include "fpi/stepper.hpp"
#include "fpi/stokes.hpp"

namespace fpi {

namespace {

Grid square_grid(int n, int dim = 2) {
  GridSpec spec;
  spec.dim = dim;
  spec.cells = dim == 2 ? std::array<int, 3>{n, n, 1} : std::array<int, 3>{n, n, n};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double max_abs_residual(const RunResult& run) {
  double m = 0.0;
  for (const auto& row : run.ledger) m = std::max(m, std::abs(row.residual));
  return m;
}

// 1: discrete energy balance closes and tightens at second order in dt.
CriterionResult energy_balance_order(std::uint64_t seed) {
  CriterionResult r;
  r.name = "energy_balance_order";
  const Grid grid = square_grid(16);
  const PotentialSpec potential = PotentialSpec::quartic(1.0);
  const VelocityField forcing = [&] {
    VelocityField g = vortex_field(grid, 0.5);
    return g;
  }();
  RngStream rng(seed, 1);
  const SystemState u0 = random_state(grid, rng, 1.0);

  TimeParams params;
  params.theta = 0.5;
  params.horizon = 2.0;
  params.nonlinear_iterations = 1;
  params.output_cadence = 4;

  params.dt = 1e-2;
  const RunResult coarse = run_simulation(grid, potential, params, forcing, u0);
  params.dt = 5e-3;
  const RunResult fine = run_simulation(grid, potential, params, forcing, u0);

  const double e0 = coarse.ledger.front().e_fluid + coarse.ledger.front().e_plate_kinetic +
                    coarse.ledger.front().e_plate_elastic + coarse.ledger.front().e_potential;
  const double res_coarse = max_abs_residual(coarse);
  const double res_fine = max_abs_residual(fine);
  const double ratio = res_fine > 0.0 ? res_coarse / res_fine : 1e9;

  r.value = ratio;
  r.threshold = 3.0;
  r.pass = res_coarse <= 1e-3 * e0 && res_fine <= 1e-3 * e0 && ratio >= 3.0;
  r.detail = "max|res| " + num(res_coarse) + " -> " + num(res_fine) + " (cap " +
             num(1e-3 * e0) + "), halving ratio " + num(ratio) + " (need >= 3)";
  return r;
}

// 2: (A U, U)_H equals the viscous dissipation exactly on random states.
CriterionResult accretivity_identity(std::uint64_t seed) {
  CriterionResult r;
  r.name = "accretivity_identity";
  const Grid grid = square_grid(16);
  const GeneratorMatrix gen = assemble_generator(grid);
  const AccretivityReport rep = check_accretivity(gen, 100, seed);
  r.value = rep.max_identity_defect;
  r.threshold = 1e-10;
  r.pass = rep.max_identity_defect <= 1e-10;
  r.detail = "max defect " + num(rep.max_identity_defect) + " over " +
             std::to_string(rep.samples) + " states (cap 1e-10), min sym eig " +
             num(rep.min_symmetric_eigenvalue);
  return r;
}

// 3: spectral abscissa strictly negative at two resolutions and the weighted
// propagator is a contraction at t = 1.
CriterionResult spectral_stability(std::uint64_t seed) {
  (void)seed;
  CriterionResult r;
  r.name = "spectral_stability";
  const GeneratorMatrix gen8 = assemble_generator(square_grid(8));
  const GeneratorMatrix gen16 = assemble_generator(square_grid(16));
  const double a8 = spectral_abscissa(gen8).abscissa;
  const double a16 = spectral_abscissa(gen16).abscissa;
  const double norm1 = weighted_exp_norm(gen16, 1.0);
  r.value = std::max(a8, a16);
  r.threshold = -1e-4;
  r.pass = a8 < -1e-4 && a16 < -1e-4 && norm1 <= 1.0 + 1e-8;
  r.detail = "abscissa " + num(a8) + " (8x8), " + num(a16) + " (16x16), ||exp(-A)||_H " +
             num(norm1) + " (cap 1+1e-8)";
  return r;
}

// 4: unforced nonlinear trajectories decay at the linear rate.
CriterionResult nonlinear_decay_rate(std::uint64_t seed) {
  CriterionResult r;
  r.name = "nonlinear_decay_rate";
  const Grid grid = square_grid(16);
  const PotentialSpec potential = PotentialSpec::quartic(1.0);
  const VelocityField forcing(grid);
  RngStream rng(seed, 4);
  const SystemState u0 = random_state(grid, rng, 0.3);

  TimeParams params;
  params.dt = 1e-2;
  params.horizon = 8.0;
  params.output_cadence = 2;
  const RunResult run = run_simulation(grid, potential, params, forcing, u0);

  std::vector<double> ts, ns;
  for (const auto& row : run.ledger) {
    ts.push_back(row.t);
    ns.push_back(row.norm_h);
  }
  const DecayFit fit = decay_rate_fit(ts, ns, 0.6);
  const double alpha_lin = -spectral_abscissa(assemble_generator(grid)).abscissa;
  const double rel_gap = std::abs(fit.alpha - alpha_lin) / alpha_lin;

  r.value = fit.alpha;
  r.threshold = alpha_lin;
  r.pass = fit.alpha > 0.0 && fit.r_squared >= 0.95 && rel_gap <= 0.20;
  r.detail = "alpha " + num(fit.alpha) + " vs linear " + num(alpha_lin) + " (gap " +
             num(rel_gap * 100.0) + "%, cap 20%), R^2 " + num(fit.r_squared) +
             " (need >= 0.95)";
  return r;
}

// 5: iterative projection and Stokes solves match dense oracles; the measured
// extension norm stays resolution-stable.
CriterionResult projection_and_stokes_oracles(std::uint64_t seed) {
  CriterionResult r;
  r.name = "projection_and_stokes_oracles";
  const Grid grid = square_grid(6);
  RngStream rng(seed, 5);

  // Random face data with zero boundary-normal entries.
  VelocityField w(grid);
  for (int c = 0; c < grid.dim(); ++c) {
    for (int k = 0; k < grid.comp_extent(c, 2); ++k) {
      for (int j = 0; j < grid.comp_extent(c, 1); ++j) {
        for (int i = 0; i < grid.comp_extent(c, 0); ++i) {
          if (!grid.normal_boundary_face(c, i, j, k)) {
            w.at(c, i, j, k) = rng.symmetric();
          }
        }
      }
    }
  }

  const GeneratorMatrix gen = assemble_generator(grid);
  Eigen::VectorXd flat(grid.total_velocity_size());
  {
    int off = 0;
    for (int c = 0; c < grid.dim(); ++c) {
      for (int m = 0; m < grid.comp_size(c); ++m) flat[off + m] = w.comp[c][m];
      off += grid.comp_size(c);
    }
  }
  const Eigen::MatrixXd basis(gen.basis);
  const Eigen::VectorXd coef =
      (basis.transpose() * basis).llt().solve(basis.transpose() * flat);
  const Eigen::VectorXd dense_flat = basis * coef;
  VelocityField dense_proj(grid);
  {
    int off = 0;
    for (int c = 0; c < grid.dim(); ++c) {
      for (int m = 0; m < grid.comp_size(c); ++m) dense_proj.comp[c][m] = dense_flat[off + m];
      off += grid.comp_size(c);
    }
  }
  const VelocityField leray = leray_project(w, 1e-12).v;
  VelocityField diff = leray;
  axpy(-1.0, dense_proj, diff);
  const double leray_err = norm_velocity(diff) / std::max(norm_velocity(w), 1e-300);

  // Dense saddle oracle for the stationary problem with interface data.
  const PlateField psi = pluck_plate_field(grid, 1.0);
  const VelocityField g_load = vortex_field(grid, 1.0);
  double stokes_err = 0.0;
  {
    std::array<std::vector<int>, 3> vmap;
    int n_v = 0;
    for (int c = 0; c < grid.dim(); ++c) {
      vmap[c].assign(grid.comp_size(c), -1);
      for (int k = 0; k < grid.comp_extent(c, 2); ++k) {
        for (int j = 0; j < grid.comp_extent(c, 1); ++j) {
          for (int i = 0; i < grid.comp_extent(c, 0); ++i) {
            if (!grid.normal_boundary_face(c, i, j, k)) {
              vmap[c][grid.vidx(c, i, j, k)] = n_v++;
            }
          }
        }
      }
    }
    const int n_c = grid.cell_count();
    const int n = n_v + n_c + 1;
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

    // Momentum block columns from operator applications on unit fields.
    VelocityField unit(grid);
    for (int c = 0; c < grid.dim(); ++c) {
      for (int m = 0; m < grid.comp_size(c); ++m) {
        const int col = vmap[c][m];
        if (col < 0) continue;
        unit.set_zero();
        unit.comp[c][m] = 1.0;
        const VelocityField lap = apply_neg_laplacian(unit);
        for (int c2 = 0; c2 < grid.dim(); ++c2) {
          for (int m2 = 0; m2 < grid.comp_size(c2); ++m2) {
            const int row = vmap[c2][m2];
            if (row >= 0) mat(row, col) += grid.nu() * lap.comp[c2][m2];
          }
        }
      }
    }
    // Interface data enters the top tangential rows through the ghost.
    VelocityField ghost(grid);
    ghost.top_trace = psi;
    const VelocityField lap_psi = apply_neg_laplacian(ghost);
    for (int c = 0; c < grid.dim(); ++c) {
      for (int m = 0; m < grid.comp_size(c); ++m) {
        const int row = vmap[c][m];
        if (row >= 0) rhs[row] = g_load.comp[c][m] - grid.nu() * lap_psi.comp[c][m];
      }
    }
    // Gradient, divergence, gauge.
    for (int k = 0; k < grid.cells(2); ++k) {
      for (int j = 0; j < grid.cells(1); ++j) {
        for (int i = 0; i < grid.cells(0); ++i) {
          const int cell = grid.cidx(i, j, k);
          for (int c = 0; c < grid.dim(); ++c) {
            const int lo = vmap[c][grid.vidx(c, i, j, k)];
            const int hi = vmap[c][grid.vidx(c, i + (c == 0 ? 1 : 0), j + (c == 1 ? 1 : 0),
                                             k + (c == 2 ? 1 : 0))];
            if (lo >= 0) {
              mat(lo, n_v + cell) -= 1.0 / grid.h(c);
              mat(n_v + cell, lo) -= 1.0 / grid.h(c);
            }
            if (hi >= 0) {
              mat(hi, n_v + cell) += 1.0 / grid.h(c);
              mat(n_v + cell, hi) += 1.0 / grid.h(c);
            }
          }
          mat(n_v + cell, n_v + n_c) = 1.0;
          mat(n_v + n_c, n_v + cell) = 1.0;
        }
      }
    }
    const Eigen::VectorXd sol = mat.fullPivLu().solve(rhs);

    const StokesSolution iter = solve_stationary_stokes(g_load, psi, 1e-12);
    double num_sq = 0.0, den_sq = 0.0;
    for (int c = 0; c < grid.dim(); ++c) {
      for (int m = 0; m < grid.comp_size(c); ++m) {
        const int id = vmap[c][m];
        const double dense_v = id >= 0 ? sol[id] : 0.0;
        const double d = iter.v.comp[c][m] - dense_v;
        num_sq += d * d;
        den_sq += dense_v * dense_v;
      }
    }
    stokes_err = std::sqrt(num_sq) / std::max(std::sqrt(den_sq), 1e-300);
  }

  const double n6 = HarmonicExtensionTable(square_grid(6)).operator_norm();
  const double n12 = HarmonicExtensionTable(square_grid(12)).operator_norm();
  const double n24 = HarmonicExtensionTable(square_grid(24)).operator_norm();
  const double c0_spread = std::max({n6, n12, n24}) / std::min({n6, n12, n24});

  r.value = std::max(leray_err, stokes_err);
  r.threshold = 1e-8;
  r.pass = leray_err <= 1e-8 && stokes_err <= 1e-8 && c0_spread <= 2.0;
  r.detail = "projection err " + num(leray_err) + ", stationary-solve err " + num(stokes_err) +
             " (cap 1e-8); ||N0|| " + num(n6) + "/" + num(n12) + "/" + num(n24) + " spread " +
             num(c0_spread) + " (cap 2)";
  return r;
}

// 6: the pointwise force is the exact gradient of the potential energy.
CriterionResult force_gradient_consistency(std::uint64_t seed) {
  CriterionResult r;
  r.name = "force_gradient_consistency";
  double worst = 0.0;
  int done = 0;
  auto probe = [&](const Grid& grid, const PotentialSpec& spec, RngStream& rng) {
    PlateField u = random_plate_field(grid, rng, 1.5);
    PlateField d = random_plate_field(grid, rng, 1.0);
    const double analytic = dot_plate(nonlinear_force(u, spec), d);
    const double eps = 1e-5;
    PlateField up = u, um = u;
    axpy(eps, d, up);
    axpy(-eps, d, um);
    const double fd = (potential_energy(up, spec) - potential_energy(um, spec)) / (2.0 * eps);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-12});
    worst = std::max(worst, rel);
    ++done;
  };

  const Grid g2 = square_grid(8);
  const Grid g3 = square_grid(6, 3);
  RngStream rng(seed, 6);
  const PotentialSpec quartic = PotentialSpec::quartic(1.3);
  const PotentialSpec separable = PotentialSpec::separable({0.5, 0.25}, {0.75});
  for (int p = 0; p < 15; ++p) probe(g2, quartic, rng);
  for (int p = 0; p < 15; ++p) probe(g2, separable, rng);
  for (int p = 0; p < 10; ++p) probe(g3, quartic, rng);
  for (int p = 0; p < 10; ++p) probe(g3, separable, rng);

  r.value = worst;
  r.threshold = 1e-6;
  r.pass = worst <= 1e-6;
  r.detail = "max rel gradient error " + num(worst) + " over " + std::to_string(done) +
             " pairs (cap 1e-6)";
  return r;
}

// 7: forced ensembles stay under the fitted envelope and re-enter a common
// invariant ball that survives restarting.
CriterionResult absorbing_ensemble(std::uint64_t seed) {
  CriterionResult r;
  r.name = "absorbing_ensemble";
  const Grid grid = square_grid(16);
  const PotentialSpec potential = PotentialSpec::quartic(1.0);
  const VelocityField forcing = vortex_field(grid, 1.0);
  TimeParams params;
  params.dt = 5e-3;
  params.horizon = 5.0;
  params.output_cadence = 2;
  const AbsorbingSetReport rep =
      absorbing_set_check(grid, potential, params, forcing, 1.0, 10, seed);
  double worst_entry = 0.0;
  bool entered = true;
  for (double t : rep.entry_times) {
    if (t < 0.0) entered = false;
    worst_entry = std::max(worst_entry, t);
  }
  r.value = rep.envelope_margin;
  r.threshold = 0.0;
  r.pass = rep.envelope_margin >= 0.0 && rep.restart_invariant && entered;
  r.detail = "envelope margin " + num(rep.envelope_margin) + ", ball radius " +
             num(rep.ball_radius) + ", last entry t " + num(worst_entry) + ", restart max " +
             num(rep.restart_max_norm) + (rep.restart_invariant ? " (held)" : " (left ball)");
  return r;
}

// 8: trajectory pairs obey the exponential-plus-feedback bound with the rate
// taken from the linear spectrum.
CriterionResult stabilizability_margin(std::uint64_t seed) {
  CriterionResult r;
  r.name = "stabilizability_margin";
  const Grid grid = square_grid(16);
  const PotentialSpec potential = PotentialSpec::quartic(1.0);
  const VelocityField forcing(grid);
  const double abscissa = spectral_abscissa(assemble_generator(grid)).abscissa;
  const double omega = 0.9 * (-abscissa);
  TimeParams params;
  params.dt = 5e-3;
  params.horizon = 5.0;
  const StabilizabilityReport rep =
      stabilizability_check(grid, potential, params, forcing, omega, 1.0, 10, seed);
  r.value = rep.min_margin;
  r.threshold = 0.0;
  r.pass = rep.min_margin >= 0.0;
  double max_cr = 0.0;
  for (const auto& p : rep.pairs) max_cr = std::max(max_cr, p.c_r);
  r.detail = "min margin " + num(rep.min_margin) + " over " +
             std::to_string(rep.pairs.size()) + " pairs at omega " + num(omega) +
             ", max c_R " + num(max_cr);
  return r;
}

// 9: the time stepper converges to the dense matrix exponential at order 2.
CriterionResult propagator_order(std::uint64_t seed) {
  CriterionResult r;
  r.name = "propagator_order";
  const Grid grid = square_grid(4);
  const GeneratorMatrix gen = assemble_generator(grid);
  RngStream rng(seed, 9);
  SystemState seed_state = random_state(grid, rng, 1.0);

  const CoordinateState coords = state_to_coords(gen, seed_state);
  // damp the underresolved stiff modes so the classical order is observable
  Eigen::VectorXd x0 = exp_minus_tA(gen, 0.5) * coords.x;
  x0 /= std::sqrt(x0.dot(gen.gram * x0));
  const SystemState u0 = coords_to_state(gen, x0);
  const double horizon = 0.5;
  const Eigen::MatrixXd prop = exp_minus_tA(gen, horizon);
  const SystemState exact = coords_to_state(gen, (prop * x0).eval());

  const PotentialSpec potential = PotentialSpec::zero();
  const VelocityField forcing(grid);
  auto run_err = [&](double dt) {
    TimeParams params;
    params.dt = dt;
    params.horizon = horizon;
    params.output_cadence = 1000000;
    const RunResult run = run_simulation(grid, potential, params, forcing, u0);
    SystemState diff = run.final_state;
    axpy(-1.0, exact.v, diff.v);
    axpy(-1.0, exact.plate.u, diff.plate.u);
    axpy(-1.0, exact.plate.ut, diff.plate.ut);
    diff.sync_interface();
    return phase_norm(diff);
  };
  const double e1 = run_err(2.5e-2);
  const double e2 = run_err(1.25e-2);
  const double order = e2 > 0.0 ? std::log2(e1 / e2) : 2.0;

  r.value = order;
  r.threshold = 1.8;
  r.pass = order >= 1.8 && coords.fluid_residual <= 1e-10;
  r.detail = "errors " + num(e1) + " -> " + num(e2) + ", observed order " + num(order) +
             " (need >= 1.8), basis residual " + num(coords.fluid_residual);
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = energy_balance_order(seed); break;
    case 2: r = accretivity_identity(seed); break;
    case 3: r = spectral_stability(seed); break;
    case 4: r = nonlinear_decay_rate(seed); break;
    case 5: r = projection_and_stokes_oracles(seed); break;
    case 6: r = force_gradient_consistency(seed); break;
    case 7: r = absorbing_ensemble(seed); break;
    case 8: r = stabilizability_margin(seed); break;
    case 9: r = propagator_order(seed); break;
    default:
      throw std::invalid_argument("certify: unknown criterion id " + std::to_string(id));
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_certification(const std::vector<int>& ids,
                                               std::uint64_t seed) {
  std::vector<CriterionResult> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(run_criterion(id, seed));
  return out;
}

std::string criterion_line(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.pass ? "PASS" : "FAIL") << "  " << r.id << " " << r.name << ": " << r.detail
      << " [" << num(r.seconds) << "s]";
  return out.str();
}

}  // namespace fpi
