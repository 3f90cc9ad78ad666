#include "fpi/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fpi/plate.hpp"

namespace fpi {

PlateField::PlateField(const Grid& g) : grid(&g) {
  for (int c = 0; c < g.plate_components(); ++c) {
    comp[c].assign(g.plate_size(c), 0.0);
  }
}

void PlateField::set_zero() {
  for (auto& v : comp) std::fill(v.begin(), v.end(), 0.0);
}

VelocityField::VelocityField(const Grid& g) : grid(&g), top_trace(g) {
  for (int c = 0; c < g.dim(); ++c) {
    comp[c].assign(g.comp_size(c), 0.0);
  }
}

void VelocityField::set_zero() {
  for (auto& v : comp) std::fill(v.begin(), v.end(), 0.0);
  top_trace.set_zero();
}

PressureField::PressureField(const Grid& g) : grid(&g), val(g.cell_count(), 0.0) {}

void PressureField::set_zero() { std::fill(val.begin(), val.end(), 0.0); }

void SystemState::sync_interface() { v.top_trace = plate.ut; }

namespace {

void require_same_grid(const Grid* a, const Grid* b) {
  if (a == nullptr || b == nullptr || a != b) {
    throw std::invalid_argument("fields: operands live on different grids");
  }
}

}  // namespace

double dot_velocity(const VelocityField& a, const VelocityField& b) {
  require_same_grid(a.grid, b.grid);
  const Grid& g = *a.grid;
  double sum = 0.0;
  for (int c = 0; c < g.dim(); ++c) {
    const auto& x = a.comp[c];
    const auto& y = b.comp[c];
    for (std::size_t n = 0; n < x.size(); ++n) sum += x[n] * y[n];
  }
  return sum * g.face_weight();
}

double dot_plate(const PlateField& a, const PlateField& b) {
  require_same_grid(a.grid, b.grid);
  const Grid& g = *a.grid;
  double sum = 0.0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const auto& x = a.comp[c];
    const auto& y = b.comp[c];
    for (std::size_t n = 0; n < x.size(); ++n) sum += x[n] * y[n];
  }
  return sum * g.plate_weight();
}

double norm_velocity(const VelocityField& a) { return std::sqrt(dot_velocity(a, a)); }

double norm_plate(const PlateField& a) { return std::sqrt(dot_plate(a, a)); }

void axpy(double alpha, const VelocityField& x, VelocityField& y) {
  require_same_grid(x.grid, y.grid);
  for (int c = 0; c < x.grid->dim(); ++c) {
    for (std::size_t n = 0; n < x.comp[c].size(); ++n) y.comp[c][n] += alpha * x.comp[c][n];
  }
  axpy(alpha, x.top_trace, y.top_trace);
}

void axpy(double alpha, const PlateField& x, PlateField& y) {
  require_same_grid(x.grid, y.grid);
  for (int c = 0; c < x.grid->plate_components(); ++c) {
    for (std::size_t n = 0; n < x.comp[c].size(); ++n) y.comp[c][n] += alpha * x.comp[c][n];
  }
}

void scale(VelocityField& x, double alpha) {
  for (auto& v : x.comp) {
    for (double& e : v) e *= alpha;
  }
  scale(x.top_trace, alpha);
}

void scale(PlateField& x, double alpha) {
  for (auto& v : x.comp) {
    for (double& e : v) e *= alpha;
  }
}

double phase_inner_product(const SystemState& a, const SystemState& b) {
  require_same_grid(a.grid(), b.grid());
  return dot_velocity(a.v, b.v) + plate_form_a(a.plate.u, b.plate.u) +
         dot_plate(a.plate.ut, b.plate.ut);
}

double phase_norm(const SystemState& a) { return std::sqrt(phase_inner_product(a, a)); }

}  // namespace fpi
