#include "fpi/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fpi {

double GridSpec::resolved_lambda() const {
  if (poisson_mu) {
    const double mu = *poisson_mu;
    const double lambda = (1.0 + mu) / (1.0 - mu);
    if (lame_lambda && std::abs(*lame_lambda - lambda) > 1e-12 * (1.0 + std::abs(lambda))) {
      throw std::invalid_argument("grid: lambda and poisson_mu disagree: lambda = " +
                                  std::to_string(*lame_lambda) + " but (1+mu)/(1-mu) = " +
                                  std::to_string(lambda));
    }
    return lambda;
  }
  if (lame_lambda) return *lame_lambda;
  throw std::invalid_argument("grid: one of lambda or poisson_mu is required");
}

void GridSpec::validate() const {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("grid: dim must be 2 or 3");
  }
  for (int a = 0; a < dim; ++a) {
    if (cells[a] < 3) {
      throw std::invalid_argument("grid: need at least 3 cells per axis, axis " +
                                  std::to_string(a) + " has " + std::to_string(cells[a]));
    }
    if (!(extent[a] > 0.0)) {
      throw std::invalid_argument("grid: extents must be positive");
    }
  }
  if (!(viscosity > 0.0)) {
    throw std::invalid_argument("grid: viscosity must be positive");
  }
  if (poisson_mu && !(*poisson_mu > 0.0 && *poisson_mu < 0.5)) {
    throw std::invalid_argument("grid: poisson_mu must lie in (0, 1/2)");
  }
  const double lambda = resolved_lambda();
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("grid: lambda must be positive");
  }
}

Grid Grid::build(const GridSpec& spec) {
  spec.validate();
  Grid g;
  g.dim_ = spec.dim;
  g.nu_ = spec.viscosity;
  g.lambda_ = spec.resolved_lambda();
  for (int a = 0; a < 3; ++a) {
    if (a < spec.dim) {
      g.cells_[a] = spec.cells[a];
      g.extent_[a] = spec.extent[a];
    } else {
      g.cells_[a] = 1;
      g.extent_[a] = 1.0;
    }
    g.h_[a] = g.extent_[a] / g.cells_[a];
  }
  g.cell_count_ = g.cells_[0] * g.cells_[1] * g.cells_[2];
  g.total_velocity_size_ = 0;
  for (int c = 0; c < spec.dim; ++c) {
    int n = 1;
    for (int a = 0; a < 3; ++a) n *= g.comp_extent(c, a);
    g.comp_size_[c] = n;
    g.total_velocity_size_ += n;
  }
  g.total_plate_size_ = 0;
  for (int c = 0; c < spec.dim - 1; ++c) {
    int n = 1;
    for (int a = 0; a < spec.dim - 1; ++a) n *= g.plate_extent(c, a);
    g.plate_size_[c] = n;
    g.total_plate_size_ += n;
  }
  g.face_weight_ = 1.0;
  for (int a = 0; a < spec.dim; ++a) g.face_weight_ *= g.h_[a];
  g.plate_weight_ = 1.0;
  for (int a = 0; a < spec.dim - 1; ++a) g.plate_weight_ *= g.h_[a];
  return g;
}

double Grid::face_coord(int c, int a, int i, int j, int k) const {
  const int pos = (a == 0) ? i : (a == 1) ? j : k;
  const double offset = (a == c) ? 0.0 : 0.5;
  const double x = (pos + offset) * h_[a];
  return (a == dim_ - 1) ? x - extent_[a] : x;
}

double Grid::cell_coord(int a, int i, int j, int k) const {
  const int pos = (a == 0) ? i : (a == 1) ? j : k;
  const double x = (pos + 0.5) * h_[a];
  return (a == dim_ - 1) ? x - extent_[a] : x;
}

double Grid::plate_coord(int c, int a, int i, int j) const {
  const int pos = (a == 0) ? i : j;
  const double offset = (a == c) ? 0.0 : 0.5;
  return (pos + offset) * h_[a];
}

}  // namespace fpi
