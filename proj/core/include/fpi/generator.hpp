#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <cstdint>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"

namespace fpi {

/// Dense coupled generator on the free coordinates (divergence-free fluid
/// modes; plate displacement; plate velocity), interface condition eliminated
/// by substitution.  op acts on coordinates, gram realizes the phase inner
/// product: (A x, y)_H = y^T gram op x.
struct GeneratorMatrix {
  Eigen::MatrixXd op;
  Eigen::MatrixXd gram;
  /// Divergence-free basis: velocity DOFs (stacked components) x fluid modes.
  Eigen::SparseMatrix<double> basis;
  int n_fluid = 0;
  int n_u = 0;
  int n_ut = 0;
  const Grid* grid = nullptr;

  int size() const { return n_fluid + n_u + n_ut; }
};

/// Assembles the generator column by column from the coupled linear operators
/// applied to unit basis states.  The fluid basis is the discrete
/// curl-of-stream-function construction in d=2 and a null-space basis of the
/// divergence matrix in d=3.  Throws std::invalid_argument when the state
/// dimension exceeds dense_limit.
GeneratorMatrix assemble_generator(const Grid& grid, int dense_limit = 5000);

/// Exact coordinate representation of a divergence-free state (least squares
/// in the fluid inner product; the residual is reported for verification).
struct CoordinateState {
  Eigen::VectorXd x;
  double fluid_residual = 0.0;
};
CoordinateState state_to_coords(const GeneratorMatrix& gen, const SystemState& state);
SystemState coords_to_state(const GeneratorMatrix& gen, const Eigen::VectorXd& x);

struct AccretivityReport {
  double max_identity_defect = 0.0;   // max |(AU,U)_H - nu ||grad v||^2| / ||U||_H^2
  double min_symmetric_eigenvalue = 0.0;  // of the Gram-weighted symmetric part
  int samples = 0;
};

/// Verifies (A U, U)_H = nu ||grad v||^2 on random states and the positive
/// semidefiniteness of the symmetric part in the Gram metric.
AccretivityReport check_accretivity(const GeneratorMatrix& gen, int samples,
                                    std::uint64_t seed);

struct ResolventSolution {
  Eigen::VectorXd x;
  double condition_number = 0.0;
};

/// Dense solve of (alpha I + A) x = f; alpha = 0 gives the stationary problem.
ResolventSolution solve_generator(const GeneratorMatrix& gen, const Eigen::VectorXd& f,
                                  double alpha = 0.0);

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // of -A, sorted by real part desc
  double abscissa = 0.0;                          // max real part of spec(-A)
};

SpectrumReport spectral_abscissa(const GeneratorMatrix& gen);

/// || exp(-t A) ||_H (Gram-weighted operator norm of the dense propagator).
double weighted_exp_norm(const GeneratorMatrix& gen, double t);

/// Dense propagator itself, for one-step comparisons.
Eigen::MatrixXd exp_minus_tA(const GeneratorMatrix& gen, double t);

}  // namespace fpi
