#include "fpi/generator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "fpi/plate.hpp"
#include "fpi/random.hpp"
#include "fpi/stokes.hpp"

namespace fpi {

namespace {

int comp_offset(const Grid& g, int c) {
  int off = 0;
  for (int a = 0; a < c; ++a) off += g.comp_size(a);
  return off;
}

Eigen::SparseMatrix<double> stream_basis_2d(const Grid& g) {
  const int nx = g.cells(0);
  const int nz = g.cells(1);
  const int n_modes = (nx - 1) * (nz - 1);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_modes) * 4);
  const int off_u = comp_offset(g, 0);
  const int off_w = comp_offset(g, 1);
  int col = 0;
  for (int b = 1; b < nz; ++b) {
    for (int a = 1; a < nx; ++a) {
      trip.emplace_back(off_u + g.vidx(0, a, b - 1), col, 1.0 / g.h(1));
      trip.emplace_back(off_u + g.vidx(0, a, b), col, -1.0 / g.h(1));
      trip.emplace_back(off_w + g.vidx(1, a - 1, b), col, -1.0 / g.h(0));
      trip.emplace_back(off_w + g.vidx(1, a, b), col, 1.0 / g.h(0));
      ++col;
    }
  }
  Eigen::SparseMatrix<double> basis(g.total_velocity_size(), n_modes);
  basis.setFromTriplets(trip.begin(), trip.end());
  return basis;
}

Eigen::SparseMatrix<double> nullspace_basis_3d(const Grid& g) {
  std::vector<int> free_global;
  for (int c = 0; c < g.dim(); ++c) {
    const int off = comp_offset(g, c);
    for (int k = 0; k < g.comp_extent(c, 2); ++k) {
      for (int j = 0; j < g.comp_extent(c, 1); ++j) {
        for (int i = 0; i < g.comp_extent(c, 0); ++i) {
          if (!g.normal_boundary_face(c, i, j, k)) {
            free_global.push_back(off + g.vidx(c, i, j, k));
          }
        }
      }
    }
  }
  const int n_free = static_cast<int>(free_global.size());
  std::vector<int> free_id(g.total_velocity_size(), -1);
  for (int m = 0; m < n_free; ++m) free_id[free_global[m]] = m;

  Eigen::MatrixXd div = Eigen::MatrixXd::Zero(g.cell_count(), n_free);
  for (int k = 0; k < g.cells(2); ++k) {
    for (int j = 0; j < g.cells(1); ++j) {
      for (int i = 0; i < g.cells(0); ++i) {
        const int row = g.cidx(i, j, k);
        for (int c = 0; c < g.dim(); ++c) {
          const int lo = free_id[comp_offset(g, c) + g.vidx(c, i, j, k)];
          const int hi = free_id[comp_offset(g, c) +
                                 g.vidx(c, i + (c == 0 ? 1 : 0), j + (c == 1 ? 1 : 0),
                                        k + (c == 2 ? 1 : 0))];
          if (lo >= 0) div(row, lo) -= 1.0 / g.h(c);
          if (hi >= 0) div(row, hi) += 1.0 / g.h(c);
        }
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(div, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? sv(0) * 1e-10 : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  const int n_modes = n_free - rank;
  const Eigen::MatrixXd null_cols = svd.matrixV().rightCols(n_modes);

  std::vector<Eigen::Triplet<double>> trip;
  for (int q = 0; q < n_modes; ++q) {
    for (int m = 0; m < n_free; ++m) {
      const double val = null_cols(m, q);
      if (val != 0.0) trip.emplace_back(free_global[m], q, val);
    }
  }
  Eigen::SparseMatrix<double> basis(g.total_velocity_size(), n_modes);
  basis.setFromTriplets(trip.begin(), trip.end());
  return basis;
}

VelocityField column_field(const GeneratorMatrix& gen, const Eigen::VectorXd& s) {
  const Grid& g = *gen.grid;
  VelocityField v(g);
  Eigen::VectorXd flat = gen.basis * s;
  int off = 0;
  for (int c = 0; c < g.dim(); ++c) {
    for (int m = 0; m < g.comp_size(c); ++m) v.comp[c][m] = flat[off + m];
    off += g.comp_size(c);
  }
  return v;
}

Eigen::VectorXd weighted_projection(const GeneratorMatrix& gen, const VelocityField& z) {
  const Grid& g = *gen.grid;
  Eigen::VectorXd flat(g.total_velocity_size());
  int off = 0;
  for (int c = 0; c < g.dim(); ++c) {
    for (int m = 0; m < g.comp_size(c); ++m) flat[off + m] = z.comp[c][m];
    off += g.comp_size(c);
  }
  return gen.basis.transpose() * (g.face_weight() * flat);
}

}  // namespace

GeneratorMatrix assemble_generator(const Grid& grid, int dense_limit) {
  GeneratorMatrix gen;
  gen.grid = &grid;
  gen.basis = grid.dim() == 2 ? stream_basis_2d(grid) : nullspace_basis_3d(grid);
  gen.n_fluid = static_cast<int>(gen.basis.cols());
  gen.n_u = plate_free_count(grid);
  gen.n_ut = gen.n_u;
  const int n = gen.size();
  if (n > dense_limit) {
    throw std::invalid_argument("generator: state dimension " + std::to_string(n) +
                                " exceeds dense limit " + std::to_string(dense_limit));
  }

  // Gram: fluid mass in the basis, plate form a(.,.), plate mass.
  gen.gram = Eigen::MatrixXd::Zero(n, n);
  {
    Eigen::SparseMatrix<double> mass = gen.basis.transpose() * gen.basis;
    gen.gram.topLeftCorner(gen.n_fluid, gen.n_fluid) =
        grid.face_weight() * Eigen::MatrixXd(mass);
  }
  Eigen::MatrixXd plate_a(gen.n_u, gen.n_u);
  {
    std::vector<double> unit(gen.n_u, 0.0), packed(gen.n_u);
    PlateField col;
    for (int m = 0; m < gen.n_u; ++m) {
      unit.assign(gen.n_u, 0.0);
      unit[m] = 1.0;
      plate_unpack(grid, unit.data(), col);
      plate_pack(apply_plate_operator(col), packed.data());
      for (int r = 0; r < gen.n_u; ++r) plate_a(r, m) = packed[r];
    }
  }
  gen.gram.block(gen.n_fluid, gen.n_fluid, gen.n_u, gen.n_u) =
      grid.plate_weight() * plate_a;
  gen.gram.bottomRightCorner(gen.n_ut, gen.n_ut) =
      grid.plate_weight() * Eigen::MatrixXd::Identity(gen.n_ut, gen.n_ut);

  // Columns of A from operator applications on unit states.
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> packed(gen.n_u);

  for (int q = 0; q < gen.n_fluid; ++q) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(gen.n_fluid);
    e[q] = 1.0;
    VelocityField v = column_field(gen, e);
    VelocityField lap = apply_neg_laplacian(v);
    scale(lap, grid.nu());
    raw.col(q).head(gen.n_fluid) = weighted_projection(gen, lap);
    plate_pack(interface_shear(v), packed.data());
    for (int m = 0; m < gen.n_ut; ++m) raw(gen.n_fluid + gen.n_u + m, q) = packed[m];
  }
  {
    PlateField unit_u;
    std::vector<double> coords(gen.n_u, 0.0);
    for (int q = 0; q < gen.n_u; ++q) {
      coords.assign(gen.n_u, 0.0);
      coords[q] = 1.0;
      plate_unpack(grid, coords.data(), unit_u);
      plate_pack(apply_plate_operator(unit_u), packed.data());
      for (int m = 0; m < gen.n_ut; ++m) {
        raw(gen.n_fluid + gen.n_u + m, gen.n_fluid + q) = packed[m];
      }
    }
  }
  {
    PlateField unit_w;
    std::vector<double> coords(gen.n_u, 0.0);
    for (int q = 0; q < gen.n_ut; ++q) {
      coords.assign(gen.n_u, 0.0);
      coords[q] = 1.0;
      plate_unpack(grid, coords.data(), unit_w);
      VelocityField ghost(grid);
      ghost.top_trace = unit_w;
      VelocityField lap = apply_neg_laplacian(ghost);
      scale(lap, grid.nu());
      const int col = gen.n_fluid + gen.n_u + q;
      raw.col(col).head(gen.n_fluid) = weighted_projection(gen, lap);
      raw(gen.n_fluid + q, col) = -1.0;  // u-dot = w
      plate_pack(interface_shear(ghost), packed.data());
      for (int m = 0; m < gen.n_ut; ++m) raw(gen.n_fluid + gen.n_u + m, col) += packed[m];
    }
  }

  gen.op = raw;
  Eigen::LLT<Eigen::MatrixXd> llt(gen.gram.topLeftCorner(gen.n_fluid, gen.n_fluid));
  gen.op.topRows(gen.n_fluid) = llt.solve(raw.topRows(gen.n_fluid));
  return gen;
}

CoordinateState state_to_coords(const GeneratorMatrix& gen, const SystemState& state) {
  const Grid& g = *gen.grid;
  const int n = gen.size();
  CoordinateState out;
  out.x = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd rhs = weighted_projection(gen, state.v);
  Eigen::LLT<Eigen::MatrixXd> llt(gen.gram.topLeftCorner(gen.n_fluid, gen.n_fluid));
  Eigen::VectorXd s = llt.solve(rhs);
  out.x.head(gen.n_fluid) = s;

  VelocityField recon = column_field(gen, s);
  axpy(-1.0, state.v, recon);
  out.fluid_residual = norm_velocity(recon);

  std::vector<double> packed(gen.n_u);
  plate_pack(state.plate.u, packed.data());
  for (int m = 0; m < gen.n_u; ++m) out.x[gen.n_fluid + m] = packed[m];
  plate_pack(state.plate.ut, packed.data());
  for (int m = 0; m < gen.n_ut; ++m) out.x[gen.n_fluid + gen.n_u + m] = packed[m];
  (void)g;
  return out;
}

SystemState coords_to_state(const GeneratorMatrix& gen, const Eigen::VectorXd& x) {
  const Grid& g = *gen.grid;
  SystemState state(g);
  state.v = column_field(gen, x.head(gen.n_fluid));
  std::vector<double> packed(gen.n_u);
  for (int m = 0; m < gen.n_u; ++m) packed[m] = x[gen.n_fluid + m];
  plate_unpack(g, packed.data(), state.plate.u);
  for (int m = 0; m < gen.n_ut; ++m) packed[m] = x[gen.n_fluid + gen.n_u + m];
  plate_unpack(g, packed.data(), state.plate.ut);
  state.sync_interface();
  return state;
}

AccretivityReport check_accretivity(const GeneratorMatrix& gen, int samples,
                                    std::uint64_t seed) {
  AccretivityReport report;
  report.samples = samples;
  const int n = gen.size();
  RngStream rng(seed, 7);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.symmetric();
    const double norm_sq = x.dot(gen.gram * x);
    if (norm_sq <= 0.0) continue;
    const double pairing = x.dot(gen.gram * (gen.op * x));
    SystemState state = coords_to_state(gen, x);
    const double grad = gen.grid->nu() * grad_norm_sq(state.v);
    report.max_identity_defect =
        std::max(report.max_identity_defect, std::abs(pairing - grad) / norm_sq);
  }
  Eigen::MatrixXd weighted = gen.gram * gen.op;
  Eigen::MatrixXd sym = 0.5 * (weighted + weighted.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, gen.gram);
  report.min_symmetric_eigenvalue = es.eigenvalues().minCoeff();
  return report;
}

ResolventSolution solve_generator(const GeneratorMatrix& gen, const Eigen::VectorXd& f,
                                  double alpha) {
  const int n = gen.size();
  Eigen::MatrixXd m = gen.op + alpha * Eigen::MatrixXd::Identity(n, n);
  ResolventSolution sol;
  sol.x = m.partialPivLu().solve(f);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  sol.condition_number = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                 : std::numeric_limits<double>::infinity();
  return sol;
}

SpectrumReport spectral_abscissa(const GeneratorMatrix& gen) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(-gen.op);
  SpectrumReport report;
  const auto& ev = es.eigenvalues();
  report.eigenvalues.reserve(ev.size());
  for (int i = 0; i < ev.size(); ++i) report.eigenvalues.push_back(ev[i]);
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
  report.abscissa = report.eigenvalues.empty() ? 0.0 : report.eigenvalues.front().real();
  return report;
}

Eigen::MatrixXd exp_minus_tA(const GeneratorMatrix& gen, double t) {
  Eigen::MatrixXd m = -t * gen.op;
  return m.exp();
}

double weighted_exp_norm(const GeneratorMatrix& gen, double t) {
  Eigen::MatrixXd e = exp_minus_tA(gen, t);
  Eigen::LLT<Eigen::MatrixXd> llt(gen.gram);
  Eigen::MatrixXd l = llt.matrixL();
  // || L^T E L^{-T} ||_2 equals the H-weighted operator norm of E; its
  // transpose L^{-1} E^T L has the same singular values.
  Eigen::MatrixXd m = l.triangularView<Eigen::Lower>().solve(e.transpose() * l);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace fpi
