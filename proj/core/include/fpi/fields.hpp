#pragma once

#include <array>
#include <vector>

#include "fpi/grid.hpp"

namespace fpi {

/// In-plane plate data: one scalar array per tangential direction.
/// Component c is collocated with the top-face columns of fluid component c.
struct PlateField {
  PlateField() = default;
  explicit PlateField(const Grid& grid);

  const Grid* grid = nullptr;
  std::array<std::vector<double>, 2> comp;

  void set_zero();
  double& at(int c, int i, int j = 0) { return comp[c][grid->pidx(c, i, j)]; }
  double at(int c, int i, int j = 0) const { return comp[c][grid->pidx(c, i, j)]; }
};

/// MAC velocity field: one array per component over all faces (boundary-normal
/// faces stored and pinned to zero) plus the tangential Dirichlet data carried
/// on the top face.  Wall tangential data is identically zero.
struct VelocityField {
  VelocityField() = default;
  explicit VelocityField(const Grid& grid);

  const Grid* grid = nullptr;
  std::array<std::vector<double>, 3> comp;
  PlateField top_trace;

  void set_zero();
  double& at(int c, int i, int j, int k = 0) { return comp[c][grid->vidx(c, i, j, k)]; }
  double at(int c, int i, int j, int k = 0) const { return comp[c][grid->vidx(c, i, j, k)]; }
};

/// Cell-centered scalar (pressure or pressure-like potential).
struct PressureField {
  PressureField() = default;
  explicit PressureField(const Grid& grid);

  const Grid* grid = nullptr;
  std::vector<double> val;

  void set_zero();
  double& at(int i, int j, int k = 0) { return val[grid->cidx(i, j, k)]; }
  double at(int i, int j, int k = 0) const { return val[grid->cidx(i, j, k)]; }
};

/// Plate displacement and velocity.
struct PlateState {
  PlateState() = default;
  explicit PlateState(const Grid& grid) : u(grid), ut(grid) {}

  PlateField u;
  PlateField ut;
};

/// Full phase-space point.  Invariants maintained by the stepper: div v = 0 to
/// solver tolerance, v.top_trace == plate.ut, clamped plate nodes zero.
struct SystemState {
  SystemState() = default;
  explicit SystemState(const Grid& grid) : v(grid), plate(grid) {}

  VelocityField v;
  PlateState plate;
  double t = 0.0;

  const Grid* grid() const { return v.grid; }
  /// Copies plate.ut into the fluid's top-face Dirichlet data.
  void sync_interface();
};

// Linear-algebra style helpers used across modules; all loops run in a fixed
// index order so reductions are deterministic.

double dot_velocity(const VelocityField& a, const VelocityField& b);
double dot_plate(const PlateField& a, const PlateField& b);
double norm_velocity(const VelocityField& a);
double norm_plate(const PlateField& a);

void axpy(double alpha, const VelocityField& x, VelocityField& y);
void axpy(double alpha, const PlateField& x, PlateField& y);
void scale(VelocityField& x, double alpha);
void scale(PlateField& x, double alpha);

/// (U,U*)_H = (v,v*)_O + a(u,u*) + (u_t,u_t*)_Omega; throws
/// std::invalid_argument when the states live on different grids.
double phase_inner_product(const SystemState& a, const SystemState& b);
double phase_norm(const SystemState& a);

}  // namespace fpi
