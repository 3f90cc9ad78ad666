#pragma once

#include <vector>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"

namespace fpi {

/// Cell-centered divergence of a MAC field.
PressureField divergence(const VelocityField& v);

/// Face gradient of a cell field; zero on boundary-normal faces (homogeneous
/// Neumann ghost convention).
VelocityField gradient(const PressureField& q);

/// Minus the component-wise five/seven-point Laplacian.  Tangential Dirichlet
/// data enters through ghost reflection: v.top_trace on the top face, zero on
/// the walls.  Boundary-normal faces are read as stored (pinned zero) and the
/// output is zero there.
VelocityField apply_neg_laplacian(const VelocityField& v);

/// Dirichlet form ||grad v||^2 with the same ghost convention; boundary strips
/// use the carried trace data, so the value matches (-Lap v, v) + trace terms
/// exactly (discrete summation by parts).
double grad_norm_sq(const VelocityField& v);
/// Polarized version of grad_norm_sq; each argument uses its own trace data.
double grad_inner(const VelocityField& a, const VelocityField& b);

struct LerayResult {
  VelocityField v;
  PressureField q;
  int iterations = 0;
  double residual = 0.0;
};

/// Orthogonal projection onto discretely divergence-free fields with zero
/// normal boundary values: w - grad q with div grad q = div w (Neumann).
/// Throws SolverError on non-convergence.  Trace data is passed through.
LerayResult leray_project(const VelocityField& w, double tol = 1e-10,
                          int max_iterations = 10000);

/// Stokes operator A0 v = nu * P_L(-Lap v); the domain convention is zero
/// Dirichlet data, so the input's trace is ignored.
VelocityField apply_stokes_operator(const VelocityField& v, double tol = 1e-10,
                                    int max_iterations = 10000);

struct StokesSolution {
  VelocityField v;
  PressureField p;
  int outer_iterations = 0;
  double residual_momentum = 0.0;
  double residual_divergence = 0.0;
};

/// Stationary Stokes: -nu Lap v + grad p = g, div v = 0, v = 0 on the walls,
/// tangential v = psi on the top face (normal component zero).  Uzawa outer
/// iteration (CG on the pressure Schur complement) with CG momentum solves.
StokesSolution solve_stationary_stokes(const VelocityField& g, const PlateField& psi,
                                       double tol = 1e-10, int max_iterations = 10000);

/// Velocity part of the g = 0 Stokes solve (harmonic-type extension N0 psi).
VelocityField harmonic_extension(const PlateField& psi, double tol = 1e-10,
                                 int max_iterations = 10000);

/// Columns of N0 against unit plate nodes, built once and reused wherever
/// (v, N0 u)_O is needed per time step.
class HarmonicExtensionTable {
 public:
  HarmonicExtensionTable() = default;
  explicit HarmonicExtensionTable(const Grid& grid, double tol = 1e-10,
                                  int max_iterations = 10000);

  VelocityField apply(const PlateField& psi) const;
  /// (v, N0 psi)_O without forming N0 psi.
  double pair(const VelocityField& v, const PlateField& psi) const;
  /// Operator norm estimate ||N0||_{Y->X} via power iteration on the columns.
  double operator_norm() const;
  bool ready() const { return !columns_.empty(); }

 private:
  const Grid* grid_ = nullptr;
  std::vector<VelocityField> columns_;
};

/// Second-order one-sided interface trace: component c is
/// nu * d v^c / d x_vertical at the top face, sampled at the plate nodes.
/// Uses the carried top trace value plus the two interior samples below it.
PlateField trace_gamma(const VelocityField& v);

/// Ghost-consistent wall shear 2*nu*(trace - nearest sample)/h_z; this is the
/// trace the coupled dynamics use, making the discrete energy identity exact.
PlateField interface_shear(const VelocityField& v);

/// | nu(Lap_h v, N0 u)_O + nu(grad v, grad N0 u)_O - (trace_gamma v, u)_Omega |.
/// First-order consistent diagnostic; N0 u is solved internally.
double greens_identity_check(const VelocityField& v, const PlateField& u,
                             double tol = 1e-10, int max_iterations = 10000);

}  // namespace fpi
