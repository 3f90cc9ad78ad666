#include "fpi/random.hpp"

#include <cmath>

#include "fpi/stokes.hpp"

namespace fpi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Discrete curl of a vertex stream function; exactly divergence-free on the
// staggered grid with zero normal boundary data.
VelocityField curl_of_stream_2d(const Grid& g, const std::vector<double>& psi) {
  const int nx = g.cells(0);
  const int nz = g.cells(1);
  auto sid = [nx](int i, int j) { return j * (nx + 1) + i; };
  VelocityField v(g);
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i <= nx; ++i) {
      v.at(0, i, j) = (psi[sid(i, j + 1)] - psi[sid(i, j)]) / g.h(1);
    }
  }
  for (int j = 0; j <= nz; ++j) {
    for (int i = 0; i < nx; ++i) {
      v.at(1, i, j) = -(psi[sid(i + 1, j)] - psi[sid(i, j)]) / g.h(0);
    }
  }
  return v;
}

}  // namespace

VelocityField random_divergence_free(const Grid& grid, RngStream& rng, double amplitude) {
  VelocityField v(grid);
  if (amplitude == 0.0) return v;
  if (grid.dim() == 2) {
    const int nx = grid.cells(0);
    const int nz = grid.cells(1);
    std::vector<double> psi((nx + 1) * (nz + 1), 0.0);
    for (int j = 1; j < nz; ++j) {
      for (int i = 1; i < nx; ++i) {
        psi[j * (nx + 1) + i] = rng.symmetric();
      }
    }
    v = curl_of_stream_2d(grid, psi);
  } else {
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < grid.comp_extent(c, 2); ++k) {
        for (int j = 0; j < grid.comp_extent(c, 1); ++j) {
          for (int i = 0; i < grid.comp_extent(c, 0); ++i) {
            if (!grid.normal_boundary_face(c, i, j, k)) {
              v.at(c, i, j, k) = rng.symmetric();
            }
          }
        }
      }
    }
    v = leray_project(v).v;
  }
  const double n = norm_velocity(v);
  if (n > 0.0) scale(v, amplitude / n);
  return v;
}

PlateField random_plate_field(const Grid& grid, RngStream& rng, double amplitude) {
  PlateField u(grid);
  if (amplitude == 0.0) return u;
  for (int c = 0; c < grid.plate_components(); ++c) {
    const double l_own = grid.extent(c);
    const int n1 = grid.dim() == 3 ? grid.plate_extent(c, 1) : 1;
    const int other = 1 - c;
    for (int m = 1; m <= 4; ++m) {
      for (int n = 0; n <= (grid.dim() == 3 ? 2 : 0); ++n) {
        const double coeff = rng.symmetric();
        for (int j = 0; j < n1; ++j) {
          for (int i = 0; i < grid.plate_extent(c, 0); ++i) {
            if (grid.plate_clamped_node(c, i, j)) continue;
            const double x_own = grid.plate_coord(c, c, i, j);
            double mode = std::sin(m * kPi * x_own / l_own);
            if (grid.dim() == 3) {
              const double x_oth = grid.plate_coord(c, other, i, j);
              mode *= std::cos(n * kPi * x_oth / grid.extent(other));
            }
            u.at(c, i, j) += coeff * mode;
          }
        }
      }
    }
  }
  const double n = norm_plate(u);
  if (n > 0.0) scale(u, amplitude / n);
  return u;
}

SystemState random_state(const Grid& grid, RngStream& rng, double amplitude) {
  SystemState state(grid);
  if (amplitude == 0.0) return state;
  state.v = random_divergence_free(grid, rng, 1.0);
  state.plate.u = random_plate_field(grid, rng, 1.0);
  state.plate.ut = random_plate_field(grid, rng, 1.0);
  state.sync_interface();
  const double n = phase_norm(state);
  if (n > 0.0) {
    scale(state.v, amplitude / n);
    scale(state.plate.u, amplitude / n);
    scale(state.plate.ut, amplitude / n);
    state.sync_interface();
  }
  return state;
}

VelocityField vortex_field(const Grid& grid, double amplitude) {
  auto bump = [](double s) {
    const double f = std::sin(kPi * s);
    return f * f;
  };
  if (grid.dim() == 2) {
    const int nx = grid.cells(0);
    const int nz = grid.cells(1);
    std::vector<double> psi((nx + 1) * (nz + 1), 0.0);
    for (int j = 0; j <= nz; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const double x = i * grid.h(0) / grid.extent(0);
        const double z = static_cast<double>(j) / nz;  // scaled depth in [0,1]
        psi[j * (nx + 1) + i] = amplitude * bump(x) * bump(z);
      }
    }
    return curl_of_stream_2d(grid, psi);
  }
  // Analytic curl of the stream (0, psi(x,z) g(y), 0); normal components
  // vanish on every wall.
  VelocityField v(grid);
  const double l0 = grid.extent(0);
  const double l1 = grid.extent(1);
  const double l2 = grid.extent(2);
  auto psi_x = [&](double x, double z) {
    return 2.0 * kPi / l0 * std::sin(kPi * x / l0) * std::cos(kPi * x / l0) *
           bump((z + l2) / l2);
  };
  auto psi_z = [&](double x, double z) {
    return bump(x / l0) * 2.0 * kPi / l2 * std::sin(kPi * (z + l2) / l2) *
           std::cos(kPi * (z + l2) / l2);
  };
  for (int c = 0; c < 3; ++c) {
    if (c == 1) continue;
    for (int k = 0; k < grid.comp_extent(c, 2); ++k) {
      for (int j = 0; j < grid.comp_extent(c, 1); ++j) {
        for (int i = 0; i < grid.comp_extent(c, 0); ++i) {
          if (grid.normal_boundary_face(c, i, j, k)) continue;
          const double x = grid.face_coord(c, 0, i, j, k);
          const double y = grid.face_coord(c, 1, i, j, k);
          const double z = grid.face_coord(c, 2, i, j, k);
          const double g = bump(y / l1);
          v.at(c, i, j, k) =
              amplitude * g * (c == 0 ? -psi_z(x, z) : psi_x(x, z));
        }
      }
    }
  }
  return v;
}

PlateField pluck_plate_field(const Grid& grid, double amplitude) {
  PlateField u(grid);
  for (int c = 0; c < grid.plate_components(); ++c) {
    const double l_own = grid.extent(c);
    const int n1 = grid.dim() == 3 ? grid.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < grid.plate_extent(c, 0); ++i) {
        if (grid.plate_clamped_node(c, i, j)) continue;
        const double x = grid.plate_coord(c, c, i, j);
        u.at(c, i, j) = amplitude * std::sin(kPi * x / l_own);
      }
    }
  }
  return u;
}

}  // namespace fpi
