#include "fpi/stokes.hpp"

#include <cmath>
#include <stdexcept>

#include "fpi/errors.hpp"

namespace fpi {

namespace {

int axis_pos(int a, int i, int j, int k) { return (a == 0) ? i : (a == 1) ? j : k; }

// Stored neighbor index offset along axis a for component c.
int shifted(const Grid& g, int c, int a, int i, int j, int k, int step) {
  return g.vidx(c, i + (a == 0 ? step : 0), j + (a == 1 ? step : 0), k + (a == 2 ? step : 0));
}

// Dirichlet value of tangential component c on the wall hit when stepping
// off-range along axis a (top face carries the interface trace, walls zero).
double wall_value(const VelocityField& v, int c, int a, bool high, int i, int j, int k) {
  const Grid& g = *v.grid;
  if (high && a == g.vertical_axis() && c != g.vertical_axis()) {
    return g.dim() == 2 ? v.top_trace.at(c, i) : v.top_trace.at(c, i, j);
  }
  return 0.0;
}

}  // namespace

PressureField divergence(const VelocityField& v) {
  const Grid& g = *v.grid;
  PressureField out(g);
  for (int k = 0; k < g.cells(2); ++k) {
    for (int j = 0; j < g.cells(1); ++j) {
      for (int i = 0; i < g.cells(0); ++i) {
        double acc = 0.0;
        for (int c = 0; c < g.dim(); ++c) {
          const double lo = v.comp[c][g.vidx(c, i, j, k)];
          const double hi = v.comp[c][shifted(g, c, c, i, j, k, 1)];
          acc += (hi - lo) / g.h(c);
        }
        out.val[g.cidx(i, j, k)] = acc;
      }
    }
  }
  return out;
}

VelocityField gradient(const PressureField& q) {
  const Grid& g = *q.grid;
  VelocityField out(g);
  for (int c = 0; c < g.dim(); ++c) {
    for (int k = 0; k < g.comp_extent(c, 2); ++k) {
      for (int j = 0; j < g.comp_extent(c, 1); ++j) {
        for (int i = 0; i < g.comp_extent(c, 0); ++i) {
          if (g.normal_boundary_face(c, i, j, k)) continue;
          const int cell_hi = g.cidx(i, j, k);
          const int cell_lo = g.cidx(i - (c == 0 ? 1 : 0), j - (c == 1 ? 1 : 0),
                                     k - (c == 2 ? 1 : 0));
          out.comp[c][g.vidx(c, i, j, k)] = (q.val[cell_hi] - q.val[cell_lo]) / g.h(c);
        }
      }
    }
  }
  return out;
}

VelocityField apply_neg_laplacian(const VelocityField& v) {
  const Grid& g = *v.grid;
  VelocityField out(g);
  out.top_trace = v.top_trace;
  for (int c = 0; c < g.dim(); ++c) {
    for (int k = 0; k < g.comp_extent(c, 2); ++k) {
      for (int j = 0; j < g.comp_extent(c, 1); ++j) {
        for (int i = 0; i < g.comp_extent(c, 0); ++i) {
          if (g.normal_boundary_face(c, i, j, k)) continue;
          const double center = v.comp[c][g.vidx(c, i, j, k)];
          double acc = 0.0;
          for (int a = 0; a < g.dim(); ++a) {
            const int pos = axis_pos(a, i, j, k);
            const int last = g.comp_extent(c, a) - 1;
            double lo, hi;
            if (pos == 0 && a != c) {
              lo = 2.0 * wall_value(v, c, a, false, i, j, k) - center;
            } else {
              lo = v.comp[c][shifted(g, c, a, i, j, k, -1)];
            }
            if (pos == last && a != c) {
              hi = 2.0 * wall_value(v, c, a, true, i, j, k) - center;
            } else {
              hi = v.comp[c][shifted(g, c, a, i, j, k, +1)];
            }
            acc += (2.0 * center - lo - hi) / (g.h(a) * g.h(a));
          }
          out.comp[c][g.vidx(c, i, j, k)] = acc;
        }
      }
    }
  }
  return out;
}

double grad_inner(const VelocityField& va, const VelocityField& vb) {
  if (va.grid == nullptr || va.grid != vb.grid) {
    throw std::invalid_argument("stokes: gradient form needs a common grid");
  }
  const Grid& g = *va.grid;
  const double w = g.face_weight();
  double acc = 0.0;
  for (int c = 0; c < g.dim(); ++c) {
    for (int a = 0; a < g.dim(); ++a) {
      const double inv_h = 1.0 / g.h(a);
      if (a == c) {
        // On-axis differences run between stored faces (boundary values pinned).
        for (int k = 0; k < g.comp_extent(c, 2); ++k) {
          for (int j = 0; j < g.comp_extent(c, 1); ++j) {
            for (int i = 0; i < g.comp_extent(c, 0); ++i) {
              if (axis_pos(a, i, j, k) == g.comp_extent(c, a) - 1) continue;
              const int lo = g.vidx(c, i, j, k);
              const int hi = shifted(g, c, a, i, j, k, +1);
              acc += w * inv_h * inv_h * (va.comp[c][hi] - va.comp[c][lo]) *
                     (vb.comp[c][hi] - vb.comp[c][lo]);
            }
          }
        }
      } else {
        // Off-axis: interior differences plus half-cell Dirichlet wall strips.
        for (int k = 0; k < g.comp_extent(c, 2); ++k) {
          for (int j = 0; j < g.comp_extent(c, 1); ++j) {
            for (int i = 0; i < g.comp_extent(c, 0); ++i) {
              const int pos = axis_pos(a, i, j, k);
              const int idx = g.vidx(c, i, j, k);
              if (pos > 0) {
                const int lo = shifted(g, c, a, i, j, k, -1);
                acc += w * inv_h * inv_h * (va.comp[c][idx] - va.comp[c][lo]) *
                       (vb.comp[c][idx] - vb.comp[c][lo]);
              }
              if (pos == 0) {
                const double da = 2.0 * (va.comp[c][idx] - wall_value(va, c, a, false, i, j, k));
                const double db = 2.0 * (vb.comp[c][idx] - wall_value(vb, c, a, false, i, j, k));
                acc += 0.5 * w * inv_h * inv_h * da * db;
              }
              if (pos == g.comp_extent(c, a) - 1) {
                const double da = 2.0 * (wall_value(va, c, a, true, i, j, k) - va.comp[c][idx]);
                const double db = 2.0 * (wall_value(vb, c, a, true, i, j, k) - vb.comp[c][idx]);
                acc += 0.5 * w * inv_h * inv_h * da * db;
              }
            }
          }
        }
      }
    }
  }
  return acc;
}

double grad_norm_sq(const VelocityField& v) { return grad_inner(v, v); }

namespace {

// CG for the cell-centered Neumann Poisson problem div grad q = b.
// The operator is applied matrix-free through gradient() and divergence().
struct PoissonResult {
  PressureField q;
  int iterations;
  double residual;
};

PoissonResult solve_cell_poisson(const Grid& g, PressureField b, double tol, int max_it) {
  const int n = g.cell_count();
  // removing the incompatible mean and flipping the sign turns the problem
  // into (-div grad) q = -b with an SPD operator on the mean-zero subspace
  double mean = 0.0;
  for (double x : b.val) mean += x;
  mean /= n;
  for (double& x : b.val) x = mean - x;

  PressureField q(g);
  PressureField r = b;
  PressureField p = r;
  auto dot = [](const PressureField& x, const PressureField& y) {
    double acc = 0.0;
    for (std::size_t m = 0; m < x.val.size(); ++m) acc += x.val[m] * y.val[m];
    return acc;
  };
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) return {q, 0, 0.0};
  double rr = dot(r, r);
  int it = 0;
  for (; it < max_it; ++it) {
    if (std::sqrt(rr) <= tol * b_norm) break;
    PressureField ap(g);
    {
      VelocityField gp = gradient(p);
      PressureField d = divergence(gp);
      ap.val.swap(d.val);
      for (double& x : ap.val) x = -x;
    }
    const double denom = dot(p, ap);
    if (denom <= 0.0) break;
    const double alpha = rr / denom;
    for (int m = 0; m < n; ++m) {
      q.val[m] += alpha * p.val[m];
      r.val[m] -= alpha * ap.val[m];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int m = 0; m < n; ++m) p.val[m] = r.val[m] + beta * p.val[m];
  }
  const double res = std::sqrt(rr) / b_norm;
  if (res > tol) {
    throw SolverError("pressure Poisson solve did not converge: residual " +
                          std::to_string(res) + " after " + std::to_string(it) + " iterations",
                      it, res);
  }
  double qmean = 0.0;
  for (double x : q.val) qmean += x;
  qmean /= n;
  for (double& x : q.val) x -= qmean;
  return {q, it, res};
}

}  // namespace

LerayResult leray_project(const VelocityField& w, double tol, int max_iterations) {
  const Grid& g = *w.grid;
  PoissonResult ps = solve_cell_poisson(g, divergence(w), tol, max_iterations);
  LerayResult out{w, ps.q, ps.iterations, ps.residual};
  VelocityField gq = gradient(ps.q);
  for (int c = 0; c < g.dim(); ++c) {
    for (std::size_t m = 0; m < out.v.comp[c].size(); ++m) {
      out.v.comp[c][m] -= gq.comp[c][m];
    }
  }
  return out;
}

VelocityField apply_stokes_operator(const VelocityField& v, double tol, int max_iterations) {
  VelocityField hom = v;
  hom.top_trace.set_zero();
  VelocityField lap = apply_neg_laplacian(hom);
  lap.top_trace.set_zero();
  LerayResult proj = leray_project(lap, tol, max_iterations);
  scale(proj.v, v.grid->nu());
  return proj.v;
}

namespace {

// CG for the component-wise Dirichlet operator nu * (-Laplacian) on the free
// velocity DOFs (zero boundary data; normal faces stay pinned).
struct MomentumSolve {
  const Grid& g;
  double tol;
  int max_it;

  VelocityField solve(const VelocityField& b) const {
    VelocityField x(g);
    VelocityField r = b;
    r.top_trace.set_zero();
    VelocityField p = r;
    const double b_norm = std::sqrt(dot_velocity(b, b));
    if (b_norm == 0.0) return x;
    double rr = dot_velocity(r, r);
    int it = 0;
    for (; it < max_it; ++it) {
      if (std::sqrt(rr) <= tol * b_norm) break;
      VelocityField ap = apply_neg_laplacian(p);
      scale(ap, g.nu());
      const double alpha = rr / dot_velocity(p, ap);
      axpy(alpha, p, x);
      axpy(-alpha, ap, r);
      const double rr_new = dot_velocity(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (int c = 0; c < g.dim(); ++c) {
        for (std::size_t m = 0; m < p.comp[c].size(); ++m) {
          p.comp[c][m] = r.comp[c][m] + beta * p.comp[c][m];
        }
      }
    }
    const double res = std::sqrt(rr) / b_norm;
    if (res > tol) {
      throw SolverError("momentum solve did not converge: residual " + std::to_string(res) +
                            " after " + std::to_string(it) + " iterations",
                        it, res);
    }
    return x;
  }
};

// Scatters the ghost contribution of inhomogeneous top-face Dirichlet data
// into the momentum right-hand side: 2*nu/h^2 on the outermost tangential row.
void add_trace_load(const Grid& g, const PlateField& psi, double nu, VelocityField& rhs) {
  const int va = g.vertical_axis();
  const double coef = 2.0 * nu / (g.hz() * g.hz());
  const int k_top = g.cells(va) - 1;
  for (int c = 0; c < g.dim() - 1; ++c) {
    if (g.dim() == 2) {
      for (int i = 0; i < g.comp_extent(c, 0); ++i) {
        if (g.normal_boundary_face(c, i, k_top)) continue;
        rhs.comp[c][g.vidx(c, i, k_top)] += coef * psi.at(c, i);
      }
    } else {
      for (int j = 0; j < g.comp_extent(c, 1); ++j) {
        for (int i = 0; i < g.comp_extent(c, 0); ++i) {
          if (g.normal_boundary_face(c, i, j, k_top)) continue;
          rhs.comp[c][g.vidx(c, i, j, k_top)] += coef * psi.at(c, i, j);
        }
      }
    }
  }
}

}  // namespace

StokesSolution solve_stationary_stokes(const VelocityField& g_force, const PlateField& psi,
                                       double tol, int max_iterations) {
  const Grid& g = *g_force.grid;
  const double inner_tol = std::max(tol * 1e-2, 1e-14);
  MomentumSolve mom{g, inner_tol, max_iterations};

  VelocityField rhs = g_force;
  rhs.top_trace.set_zero();
  add_trace_load(g, psi, g.nu(), rhs);

  // Uzawa: CG on the (negated) pressure Schur complement D A^{-1} G.
  VelocityField a_inv_b = mom.solve(rhs);
  PressureField srhs = divergence(a_inv_b);
  double mean = 0.0;
  for (double x : srhs.val) mean += x;
  mean /= g.cell_count();
  for (double& x : srhs.val) x -= mean;

  auto sdot = [](const PressureField& x, const PressureField& y) {
    double acc = 0.0;
    for (std::size_t m = 0; m < x.val.size(); ++m) acc += x.val[m] * y.val[m];
    return acc;
  };
  auto schur = [&](const PressureField& p) {
    VelocityField gp = gradient(p);
    VelocityField z = mom.solve(gp);
    PressureField out = divergence(z);
    for (double& x : out.val) x = -x;  // -D A^{-1} G is positive semidefinite
    return out;
  };

  PressureField p(g);
  PressureField r = srhs;
  for (double& x : r.val) x = -x;
  PressureField dir = r;
  const double s_norm = std::sqrt(sdot(r, r));
  int outer = 0;
  if (s_norm > 0.0) {
    double rr = sdot(r, r);
    for (; outer < max_iterations; ++outer) {
      if (std::sqrt(rr) <= tol * 0.1 * s_norm) break;
      PressureField ad = schur(dir);
      const double alpha = rr / sdot(dir, ad);
      for (int m = 0; m < g.cell_count(); ++m) {
        p.val[m] += alpha * dir.val[m];
        r.val[m] -= alpha * ad.val[m];
      }
      const double rr_new = sdot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (int m = 0; m < g.cell_count(); ++m) dir.val[m] = r.val[m] + beta * dir.val[m];
    }
    if (outer >= max_iterations) {
      throw SolverError("Uzawa iteration did not converge", outer, std::sqrt(rr) / s_norm);
    }
  }
  double pmean = 0.0;
  for (double x : p.val) pmean += x;
  pmean /= g.cell_count();
  for (double& x : p.val) x -= pmean;

  StokesSolution sol;
  VelocityField load = rhs;
  axpy(-1.0, gradient(p), load);
  sol.v = mom.solve(load);
  sol.v.top_trace = psi;
  sol.p = p;
  sol.outer_iterations = outer;

  // Report true algebraic residuals of the returned pair.
  VelocityField mres = apply_neg_laplacian(sol.v);
  scale(mres, g.nu());
  axpy(1.0, gradient(p), mres);
  axpy(-1.0, g_force, mres);
  // apply_neg_laplacian consumed the trace data, so mres already accounts for psi.
  mres.top_trace.set_zero();
  const double scale_ref = std::max({norm_velocity(g_force), norm_plate(psi), 1e-30});
  sol.residual_momentum = norm_velocity(mres) / scale_ref;
  PressureField dv = divergence(sol.v);
  sol.residual_divergence = std::sqrt(sdot(dv, dv)) / scale_ref;
  return sol;
}

VelocityField harmonic_extension(const PlateField& psi, double tol, int max_iterations) {
  VelocityField zero(*psi.grid);
  return solve_stationary_stokes(zero, psi, tol, max_iterations).v;
}

HarmonicExtensionTable::HarmonicExtensionTable(const Grid& grid, double tol, int max_iterations)
    : grid_(&grid) {
  for (int c = 0; c < grid.plate_components(); ++c) {
    const int n0 = grid.plate_extent(c, 0);
    const int n1 = grid.dim() == 3 ? grid.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (grid.plate_clamped_node(c, i, j)) continue;
        PlateField e(grid);
        e.at(c, i, j) = 1.0;
        columns_.push_back(harmonic_extension(e, tol, max_iterations));
      }
    }
  }
}

VelocityField HarmonicExtensionTable::apply(const PlateField& psi) const {
  const Grid& g = *grid_;
  VelocityField out(g);
  int n = 0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (g.plate_clamped_node(c, i, j)) continue;
        const double coef = psi.at(c, i, j);
        if (coef != 0.0) axpy(coef, columns_[n], out);
        ++n;
      }
    }
  }
  out.top_trace = psi;
  return out;
}

double HarmonicExtensionTable::pair(const VelocityField& v, const PlateField& psi) const {
  const Grid& g = *grid_;
  double acc = 0.0;
  int n = 0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (g.plate_clamped_node(c, i, j)) continue;
        const double coef = psi.at(c, i, j);
        if (coef != 0.0) acc += coef * dot_velocity(v, columns_[n]);
        ++n;
      }
    }
  }
  return acc;
}

double HarmonicExtensionTable::operator_norm() const {
  const Grid& g = *grid_;
  PlateField x(g);
  for (int c = 0; c < g.plate_components(); ++c) {
    for (double& e : x.comp[c]) e = 1.0;
  }
  // Clear clamped entries so the iterate stays admissible.
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (g.plate_clamped_node(c, i, j)) x.comp[c][g.pidx(c, i, j)] = 0.0;
      }
    }
  }
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    VelocityField nx = apply(x);
    nx.top_trace.set_zero();
    // Adjoint N0^T in the weighted inner products.
    PlateField y(g);
    int n = 0;
    for (int c = 0; c < g.plate_components(); ++c) {
      const int n0 = g.plate_extent(c, 0);
      const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n0; ++i) {
          if (g.plate_clamped_node(c, i, j)) continue;
          y.at(c, i, j) = dot_velocity(nx, columns_[n]) / g.plate_weight();
          ++n;
        }
      }
    }
    const double norm = norm_plate(y);
    if (norm == 0.0) return 0.0;
    lambda = norm / std::max(norm_plate(x), 1e-300);
    scale(y, 1.0 / norm);
    x = y;
  }
  return std::sqrt(lambda);
}

PlateField trace_gamma(const VelocityField& v) {
  const Grid& g = *v.grid;
  PlateField out(g);
  const int va = g.vertical_axis();
  const int k_top = g.cells(va) - 1;
  const double h = g.hz();
  const double nu = g.nu();
  for (int c = 0; c < g.dim() - 1; ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        const double b = g.dim() == 2 ? v.top_trace.at(c, i) : v.top_trace.at(c, i, j);
        const double s1 = g.dim() == 2 ? v.at(c, i, k_top) : v.at(c, i, j, k_top);
        const double s2 = g.dim() == 2 ? v.at(c, i, k_top - 1) : v.at(c, i, j, k_top - 1);
        // One-sided 3-point stencil at x3 = 0 through the samples at 0, -h/2, -3h/2.
        out.at(c, i, j) = nu * (8.0 * b / (3.0 * h) - 3.0 * s1 / h + s2 / (3.0 * h));
      }
    }
  }
  return out;
}

PlateField interface_shear(const VelocityField& v) {
  const Grid& g = *v.grid;
  PlateField out(g);
  const int va = g.vertical_axis();
  const int k_top = g.cells(va) - 1;
  const double coef = 2.0 * g.nu() / g.hz();
  for (int c = 0; c < g.dim() - 1; ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        const double b = g.dim() == 2 ? v.top_trace.at(c, i) : v.top_trace.at(c, i, j);
        const double s1 = g.dim() == 2 ? v.at(c, i, k_top) : v.at(c, i, j, k_top);
        out.at(c, i, j) = coef * (b - s1);
      }
    }
  }
  return out;
}

double greens_identity_check(const VelocityField& v, const PlateField& u, double tol,
                             int max_iterations) {
  const Grid& g = *v.grid;
  VelocityField n0u = harmonic_extension(u, tol, max_iterations);
  VelocityField lap = apply_neg_laplacian(v);
  const double term_lap = -g.nu() * dot_velocity(lap, n0u);
  const double term_grad = g.nu() * grad_inner(v, n0u);
  const double term_trace = dot_plate(trace_gamma(v), u);
  return std::abs(term_lap + term_grad - term_trace);
}

}  // namespace fpi
