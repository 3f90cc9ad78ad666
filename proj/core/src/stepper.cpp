#include "fpi/stepper.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "fpi/errors.hpp"

namespace fpi {

void TimeParams::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("time: dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("time: horizon must be positive");
  if (!(theta >= 0.5 && theta <= 1.0)) {
    throw std::invalid_argument("time: theta must lie in [1/2, 1]");
  }
  if (nonlinear_iterations < 0 || nonlinear_iterations > 3) {
    throw std::invalid_argument("time: nonlinear_iterations must lie in [0, 3]");
  }
  if (output_cadence < 1) throw std::invalid_argument("time: output_cadence must be >= 1");
  if (snapshot_cadence < 0) throw std::invalid_argument("time: snapshot_cadence must be >= 0");
  if (!(solver_tol > 0.0)) throw std::invalid_argument("time: solver tolerance must be positive");
  if (solver_max_iterations < 1) {
    throw std::invalid_argument("time: solver iteration cap must be >= 1");
  }
}

EnergyBreakdown total_energy(const SystemState& state, const PotentialSpec& potential) {
  EnergyBreakdown e;
  e.fluid = 0.5 * dot_velocity(state.v, state.v);
  e.plate_kinetic = 0.5 * dot_plate(state.plate.ut, state.plate.ut);
  e.plate_elastic = 0.5 * plate_form_a(state.plate.u, state.plate.u);
  e.potential = potential_energy(state.plate.u, potential);
  return e;
}

double lyapunov_w(const SystemState& state, const PotentialSpec& potential, double eta,
                  const HarmonicExtensionTable& n0) {
  const EnergyBreakdown e = total_energy(state, potential);
  const double cross = dot_plate(state.plate.u, state.plate.ut) + n0.pair(state.v, state.plate.u);
  return e.total() + eta * cross;
}

double lyapunov_eta_threshold(const Grid& grid, const PlateSpectrum& spectrum,
                              const HarmonicExtensionTable& n0) {
  (void)grid;
  const double lambda1 = spectrum.smallest_eigenvalue();
  const double n0_norm = n0.operator_norm();
  return std::sqrt(lambda1) / (2.0 * (1.0 + n0_norm));
}

struct CoupledStepper::Impl {
  const Grid* grid;
  PotentialSpec potential;
  TimeParams params;
  VelocityField forcing;

  // Unknown layout: free velocity faces, free plate nodes, cells, mean gauge.
  std::array<std::vector<int>, 3> v_unknown;   // per component flat index -> id or -1
  std::array<std::vector<int>, 2> p_unknown;   // per plate component -> id or -1
  int n_v = 0;
  int n_p = 0;
  int n_c = 0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::MatrixXd plate_a;   // dense stiffness on free plate DOFs

  Impl(const Grid& g, const PotentialSpec& pot, const TimeParams& tp, const VelocityField& G)
      : grid(&g), potential(pot), params(tp), forcing(G) {
    params.validate();
    build_maps();
    build_plate_matrix();
    factorize();
  }

  void build_maps() {
    const Grid& g = *grid;
    int id = 0;
    for (int c = 0; c < g.dim(); ++c) {
      v_unknown[c].assign(g.comp_size(c), -1);
      for (int k = 0; k < g.comp_extent(c, 2); ++k) {
        for (int j = 0; j < g.comp_extent(c, 1); ++j) {
          for (int i = 0; i < g.comp_extent(c, 0); ++i) {
            if (!g.normal_boundary_face(c, i, j, k)) {
              v_unknown[c][g.vidx(c, i, j, k)] = id++;
            }
          }
        }
      }
    }
    n_v = id;
    id = 0;
    for (int c = 0; c < g.plate_components(); ++c) {
      p_unknown[c].assign(g.plate_size(c), -1);
      const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < g.plate_extent(c, 0); ++i) {
          if (!g.plate_clamped_node(c, i, j)) p_unknown[c][g.pidx(c, i, j)] = id++;
        }
      }
    }
    n_p = id;
    n_c = g.cell_count();
  }

  void build_plate_matrix() {
    const Grid& g = *grid;
    plate_a.resize(n_p, n_p);
    std::vector<double> unit(n_p, 0.0), packed(n_p);
    PlateField col;
    for (int m = 0; m < n_p; ++m) {
      unit.assign(n_p, 0.0);
      unit[m] = 1.0;
      plate_unpack(g, unit.data(), col);
      plate_pack(apply_plate_operator(col), packed.data());
      for (int r = 0; r < n_p; ++r) plate_a(r, m) = packed[r];
    }
  }

  int top_k() const { return grid->cells(grid->vertical_axis()) - 1; }

  // Plate node (c,i,j) and tangential face (c,i,j,k_top) share unknown layout.
  int plate_id_of_face(int c, int i, int j) const {
    return p_unknown[c][grid->pidx(c, i, j)];
  }

  void factorize() {
    const Grid& g = *grid;
    const double dt = params.dt;
    const double th = params.theta;
    const double nu = g.nu();
    const double hz = g.hz();
    const int n_total = n_v + n_p + n_c + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_total) * 8);

    // Momentum rows.
    for (int c = 0; c < g.dim(); ++c) {
      for (int k = 0; k < g.comp_extent(c, 2); ++k) {
        for (int j = 0; j < g.comp_extent(c, 1); ++j) {
          for (int i = 0; i < g.comp_extent(c, 0); ++i) {
            const int row = v_unknown[c][g.vidx(c, i, j, k)];
            if (row < 0) continue;
            double diag = 1.0 / dt;
            for (int a = 0; a < g.dim(); ++a) {
              const double w = nu * th / (g.h(a) * g.h(a));
              const int pos = (a == 0) ? i : (a == 1) ? j : k;
              const int last = g.comp_extent(c, a) - 1;
              diag += 2.0 * w;
              for (int side = -1; side <= 1; side += 2) {
                const int npos = pos + side;
                if (npos >= 0 && npos <= last) {
                  const int nid = v_unknown[c][g.vidx(c, i + (a == 0 ? side : 0),
                                                      j + (a == 1 ? side : 0),
                                                      k + (a == 2 ? side : 0))];
                  if (nid >= 0) trip.emplace_back(row, nid, -w);
                } else {
                  // Off-range neighbor: tangential Dirichlet ghost 2*b - v.
                  diag += w;
                  if (side > 0 && a == g.vertical_axis() && c != g.vertical_axis()) {
                    const int wid = plate_id_of_face(c, i, g.dim() == 3 ? j : 0);
                    if (wid >= 0) trip.emplace_back(row, n_v + wid, -2.0 * w);
                  }
                }
              }
            }
            trip.emplace_back(row, row, diag);
            // Pressure gradient along the face normal.
            const int cell_hi = g.cidx(i, j, k);
            const int cell_lo = g.cidx(i - (c == 0 ? 1 : 0), j - (c == 1 ? 1 : 0),
                                       k - (c == 2 ? 1 : 0));
            trip.emplace_back(row, n_v + n_p + cell_hi, 1.0 / g.h(c));
            trip.emplace_back(row, n_v + n_p + cell_lo, -1.0 / g.h(c));
          }
        }
      }
    }

    // Plate velocity rows.
    const double shear = 2.0 * nu / hz;
    for (int c = 0; c < g.plate_components(); ++c) {
      const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < g.plate_extent(c, 0); ++i) {
          const int m = p_unknown[c][g.pidx(c, i, j)];
          if (m < 0) continue;
          const int row = n_v + m;
          const int fid = v_unknown[c][g.vidx(c, i, g.dim() == 3 ? j : top_k(),
                                              g.dim() == 3 ? top_k() : 0)];
          if (fid >= 0) trip.emplace_back(row, fid, -th * shear);
          for (int m2 = 0; m2 < n_p; ++m2) {
            double val = th * th * dt * plate_a(m, m2);
            if (m2 == m) val += 1.0 / dt + th * shear;
            if (val != 0.0) trip.emplace_back(row, n_v + m2, val);
          }
        }
      }
    }

    // Divergence rows plus the mean-gauge pair.
    for (int k = 0; k < g.cells(2); ++k) {
      for (int j = 0; j < g.cells(1); ++j) {
        for (int i = 0; i < g.cells(0); ++i) {
          const int row = n_v + n_p + g.cidx(i, j, k);
          for (int c = 0; c < g.dim(); ++c) {
            const int lo = v_unknown[c][g.vidx(c, i, j, k)];
            const int hi = v_unknown[c][g.vidx(c, i + (c == 0 ? 1 : 0), j + (c == 1 ? 1 : 0),
                                               k + (c == 2 ? 1 : 0))];
            if (lo >= 0) trip.emplace_back(row, lo, -1.0 / g.h(c));
            if (hi >= 0) trip.emplace_back(row, hi, 1.0 / g.h(c));
          }
          trip.emplace_back(row, n_v + n_p + n_c, 1.0);
          trip.emplace_back(n_v + n_p + n_c, row, 1.0);
        }
      }
    }

    Eigen::SparseMatrix<double> mat(n_total, n_total);
    mat.setFromTriplets(trip.begin(), trip.end());
    mat.makeCompressed();
    lu.compute(mat);
    if (lu.info() != Eigen::Success) {
      throw SolverError("time-step matrix factorization failed", 0, 0.0);
    }
  }

  Eigen::VectorXd rhs(const SystemState& state, const PlateField& f_nl) const {
    const Grid& g = *state.v.grid;
    const double dt = params.dt;
    const double th = params.theta;
    const int n_total = n_v + n_p + n_c + 1;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_total);

    const VelocityField lap = apply_neg_laplacian(state.v);
    for (int c = 0; c < g.dim(); ++c) {
      for (std::size_t m = 0; m < state.v.comp[c].size(); ++m) {
        const int id = v_unknown[c][m];
        if (id < 0) continue;
        b[id] = state.v.comp[c][m] / dt - g.nu() * (1.0 - th) * lap.comp[c][m] +
                forcing.comp[c][m];
      }
    }

    const PlateField au = apply_plate_operator(state.plate.u);
    const PlateField aw = apply_plate_operator(state.plate.ut);
    const PlateField shear = interface_shear(state.v);
    for (int c = 0; c < g.plate_components(); ++c) {
      for (std::size_t m = 0; m < state.plate.ut.comp[c].size(); ++m) {
        const int id = p_unknown[c][m];
        if (id < 0) continue;
        b[n_v + id] = state.plate.ut.comp[c][m] / dt - au.comp[c][m] -
                      th * (1.0 - th) * dt * aw.comp[c][m] -
                      (1.0 - th) * shear.comp[c][m] - f_nl.comp[c][m];
      }
    }
    return b;
  }

  void apply_solution(const Eigen::VectorXd& x, SystemState& state) const {
    const Grid& g = *state.v.grid;
    const double dt = params.dt;
    const double th = params.theta;
    PlateField w_new(g);
    for (int c = 0; c < g.plate_components(); ++c) {
      for (std::size_t m = 0; m < w_new.comp[c].size(); ++m) {
        const int id = p_unknown[c][m];
        if (id >= 0) w_new.comp[c][m] = x[n_v + id];
      }
    }
    for (int c = 0; c < g.plate_components(); ++c) {
      for (std::size_t m = 0; m < state.plate.u.comp[c].size(); ++m) {
        state.plate.u.comp[c][m] +=
            dt * (th * w_new.comp[c][m] + (1.0 - th) * state.plate.ut.comp[c][m]);
      }
    }
    state.plate.ut = w_new;
    for (int c = 0; c < g.dim(); ++c) {
      for (std::size_t m = 0; m < state.v.comp[c].size(); ++m) {
        const int id = v_unknown[c][m];
        state.v.comp[c][m] = (id >= 0) ? x[id] : 0.0;
      }
    }
    state.sync_interface();
    state.t += dt;
  }

  void step(SystemState& state) {
    if (state.v.grid != grid) {
      throw std::invalid_argument("stepper: state grid does not match");
    }
    const double dt = params.dt;
    const double th = params.theta;

    PlateField u_eval = state.plate.u;
    axpy(th * dt, state.plate.ut, u_eval);
    PlateField f_nl = nonlinear_force(u_eval, potential);

    SystemState base = state;
    Eigen::VectorXd x = lu.solve(rhs(base, f_nl));
    if (lu.info() != Eigen::Success) {
      throw SolverError("time-step solve failed at t = " + std::to_string(state.t), 0, 0.0);
    }
    for (int pass = 0; pass < params.nonlinear_iterations; ++pass) {
      SystemState trial = base;
      apply_solution(x, trial);
      u_eval = base.plate.u;
      scale(u_eval, 1.0 - th);
      axpy(th, trial.plate.u, u_eval);
      f_nl = nonlinear_force(u_eval, potential);
      x = lu.solve(rhs(base, f_nl));
      if (lu.info() != Eigen::Success) {
        throw SolverError("time-step correction solve failed at t = " + std::to_string(state.t),
                          pass, 0.0);
      }
    }
    apply_solution(x, state);
  }
};

CoupledStepper::CoupledStepper(const Grid& grid, const PotentialSpec& potential,
                               const TimeParams& params, const VelocityField& forcing)
    : impl_(std::make_unique<Impl>(grid, potential, params, forcing)) {}

CoupledStepper::~CoupledStepper() = default;
CoupledStepper::CoupledStepper(CoupledStepper&&) noexcept = default;
CoupledStepper& CoupledStepper::operator=(CoupledStepper&&) noexcept = default;

void CoupledStepper::step(SystemState& state) { impl_->step(state); }

const Grid& CoupledStepper::grid() const { return *impl_->grid; }

const VelocityField& CoupledStepper::forcing() const { return impl_->forcing; }

RunResult run_simulation(const Grid& grid, const PotentialSpec& potential,
                         const TimeParams& params, const VelocityField& forcing,
                         const SystemState& initial) {
  params.validate();
  SystemState state = initial;
  state.sync_interface();
  {
    LerayResult proj = leray_project(state.v, params.solver_tol, params.solver_max_iterations);
    state.v = proj.v;
    state.sync_interface();
  }

  const PlateSpectrum spectrum(grid);
  const HarmonicExtensionTable n0(grid, params.solver_tol, params.solver_max_iterations);
  const double eta = lyapunov_eta_threshold(grid, spectrum, n0);

  CoupledStepper stepper(grid, potential, params, forcing);
  RunResult result;
  result.eta = eta;

  const int steps = static_cast<int>(std::llround(params.horizon / params.dt));
  const EnergyBreakdown e0 = total_energy(state, potential);
  double diss_cum = 0.0;
  double work_cum = 0.0;
  VelocityField v_prev = state.v;
  PlateField w_prev = state.plate.ut;

  auto ledger_row = [&](const SystemState& s, double residual) {
    const EnergyBreakdown e = total_energy(s, potential);
    LedgerRow row;
    row.t = s.t;
    row.e_fluid = e.fluid;
    row.e_plate_kinetic = e.plate_kinetic;
    row.e_plate_elastic = e.plate_elastic;
    row.e_potential = e.potential;
    row.dissipation_cum = diss_cum;
    row.work_cum = work_cum;
    row.residual = residual;
    row.norm_h = phase_norm(s);
    row.w_lyap = lyapunov_w(s, potential, eta, n0);
    return row;
  };

  result.ledger.push_back(ledger_row(state, 0.0));
  if (params.snapshot_cadence > 0) result.snapshots.push_back(state);

  const double warn_scale = std::max(e0.total(), 1e-12);
  for (int n = 1; n <= steps; ++n) {
    stepper.step(state);
    // the scheme balances energy exactly against the theta-average field
    VelocityField v_mid = v_prev;
    scale(v_mid, 1.0 - params.theta);
    axpy(params.theta, state.v, v_mid);
    PlateField w_mid = w_prev;
    scale(w_mid, 1.0 - params.theta);
    axpy(params.theta, state.plate.ut, w_mid);
    v_mid.top_trace = w_mid;
    diss_cum += params.dt * grid.nu() * grad_norm_sq(v_mid);
    work_cum += params.dt * dot_velocity(forcing, v_mid);
    v_prev = state.v;
    w_prev = state.plate.ut;
    const EnergyBreakdown e = total_energy(state, potential);
    const double residual = e.total() + diss_cum - e0.total() - work_cum;
    if (std::abs(residual) > 0.5 * (warn_scale + std::abs(work_cum))) {
      result.instability_warning = true;
    }
    if (n % params.output_cadence == 0 || n == steps) {
      result.ledger.push_back(ledger_row(state, residual));
    }
    if (params.snapshot_cadence > 0 && (n % params.snapshot_cadence == 0 || n == steps)) {
      result.snapshots.push_back(state);
    }
  }
  result.final_state = state;
  return result;
}

DecayFit decay_rate_fit(const std::vector<double>& times, const std::vector<double>& norms,
                        double window_fraction) {
  DecayFit fit;
  if (times.size() != norms.size() || times.size() < 4) return fit;
  double peak = 0.0;
  for (double n : norms) peak = std::max(peak, n);
  if (peak <= 0.0) return fit;
  const double floor = peak * 1e-13;

  std::vector<double> ts, ln;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (norms[i] > floor) {
      ts.push_back(times[i]);
      ln.push_back(std::log(norms[i]));
    }
  }
  if (ts.size() < 4) return fit;
  const double t_lo = ts.front();
  const double t_hi = ts.back();
  const double t_start = t_hi - window_fraction * (t_hi - t_lo);
  std::size_t first = 0;
  while (first < ts.size() && ts[first] < t_start) ++first;
  if (ts.size() - first < 4) first = ts.size() - 4;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  const int n = static_cast<int>(ts.size() - first);
  for (std::size_t i = first; i < ts.size(); ++i) {
    sx += ts[i];
    sy += ln[i];
    sxx += ts[i] * ts[i];
    sxy += ts[i] * ln[i];
    syy += ln[i] * ln[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) return fit;
  const double slope = (n * sxy - sx * sy) / det;
  const double ss_tot = syy - sy * sy / n;
  const double ss_res = [&] {
    const double intercept = (sy - slope * sx) / n;
    double acc = 0.0;
    for (std::size_t i = first; i < ts.size(); ++i) {
      const double d = ln[i] - (slope * ts[i] + intercept);
      acc += d * d;
    }
    return acc;
  }();
  fit.alpha = -slope;
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.window_start = ts[first];
  fit.window_end = ts.back();
  fit.samples = n;
  return fit;
}

ContinuousDependenceReport continuous_dependence_probe(
    const Grid& grid, const PotentialSpec& potential, const TimeParams& params,
    const VelocityField& forcing, const SystemState& a0, const SystemState& b0) {
  ContinuousDependenceReport report;
  SystemState a = a0;
  SystemState b = b0;
  a.sync_interface();
  b.sync_interface();
  a.v = leray_project(a.v, params.solver_tol, params.solver_max_iterations).v;
  b.v = leray_project(b.v, params.solver_tol, params.solver_max_iterations).v;
  a.sync_interface();
  b.sync_interface();

  auto diff_state = [&](const SystemState& x, const SystemState& y) {
    SystemState d = x;
    axpy(-1.0, y.v, d.v);
    axpy(-1.0, y.plate.u, d.plate.u);
    axpy(-1.0, y.plate.ut, d.plate.ut);
    d.sync_interface();
    return d;
  };

  SystemState d = diff_state(a, b);
  const double dist0_sq = phase_inner_product(d, d);
  report.initial_distance = std::sqrt(dist0_sq);
  if (dist0_sq == 0.0) return report;

  CoupledStepper stepper(grid, potential, params, forcing);
  const int steps = static_cast<int>(std::llround(params.horizon / params.dt));
  SystemState d_prev = d;
  double grad_int = 0.0;
  double sup = 1.0;  // at t = 0 the ratio is exactly 1
  double max_dist = report.initial_distance;
  for (int n = 1; n <= steps; ++n) {
    stepper.step(a);
    stepper.step(b);
    d = diff_state(a, b);
    VelocityField d_mid = d_prev.v;
    scale(d_mid, 1.0 - params.theta);
    axpy(params.theta, d.v, d_mid);
    PlateField dw_mid = d_prev.plate.ut;
    scale(dw_mid, 1.0 - params.theta);
    axpy(params.theta, d.plate.ut, dw_mid);
    d_mid.top_trace = dw_mid;
    grad_int += params.dt * 2.0 * grid.nu() * grad_norm_sq(d_mid);
    d_prev = d;
    const double dist_sq = phase_inner_product(d, d);
    max_dist = std::max(max_dist, std::sqrt(dist_sq));
    sup = std::max(sup, (dist_sq + grad_int) / dist0_sq);
  }
  report.ratio = sup;
  report.max_distance = max_dist;
  return report;
}

}  // namespace fpi
