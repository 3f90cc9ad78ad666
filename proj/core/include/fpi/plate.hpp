#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"

namespace fpi {

/// Interior restoring potential Phi acting on the in-plane displacement.
///
/// Built-ins: "zero"; "quartic" Phi(u) = kappa*(sum_c (u^c)^2)^2; "separable"
/// Phi(u) = psi_1(u^1) + psi_2(u^2) with even polynomials psi_i(s) =
/// sum_m coeff[m] * s^(2(m+1)).  In d=2 only psi_1 participates.
struct PotentialSpec {
  enum class Kind { kZero, kQuartic, kSeparable };

  Kind kind = Kind::kZero;
  double kappa = 1.0;
  std::vector<double> psi1;
  std::vector<double> psi2;

  static PotentialSpec zero();
  static PotentialSpec quartic(double kappa);
  static PotentialSpec separable(std::vector<double> psi1, std::vector<double> psi2);

  /// Pointwise value at a sample (components beyond arity are ignored).
  double value(const std::array<double, 2>& u, int arity) const;
  /// Pointwise gradient dPhi/du^c.
  std::array<double, 2> grad(const std::array<double, 2>& u, int arity) const;
  /// Growth exponent p such that |f''| <= C(1+|u|^p); 2 for the quartic.
  int growth_exponent() const;
  std::string name() const;
};

/// Energy form a(u,v) = sum_c (grad u^c, grad v^c)_Omega + lambda (div u, div v)_Omega
/// with clamped boundary (d=2 reduction: (1+lambda)(u', v')).
double plate_form_a(const PlateField& u, const PlateField& v);

/// A u, the Riesz representer of a(u, .) in the plate inner product, assembled
/// by second-order central differences; exact summation by parts against
/// plate_form_a holds by construction.
PlateField apply_plate_operator(const PlateField& u);

/// Integral of Phi over the plate (nodal quadrature; in d=3 coupled potentials
/// are evaluated at cell centers from component averages).
double potential_energy(const PlateField& u, const PotentialSpec& spec);

/// f(u), the exact discrete gradient of potential_energy in the plate inner
/// product (criterion for every finite-difference consistency check).
PlateField nonlinear_force(const PlateField& u, const PotentialSpec& spec);

/// Free (unclamped) plate degrees of freedom and the fixed packing order used
/// by the dense analysis paths (component, then row, then column).
int plate_free_count(const Grid& grid);
void plate_pack(const PlateField& u, double* out);
void plate_unpack(const Grid& grid, const double* in, PlateField& u);

/// Dense eigendecomposition of the plate operator, orthonormal in the plate
/// inner product.  Used for fractional norms and the Lyapunov eta threshold.
class PlateSpectrum {
 public:
  explicit PlateSpectrum(const Grid& grid);

  double smallest_eigenvalue() const { return eigenvalues_.front(); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  /// || A^(s/2) u ||_Omega for fractional s in [0,2].
  double fractional_norm(const PlateField& u, double s) const;

 private:
  const Grid* grid_ = nullptr;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<double>> eigenvectors_;
};

struct DissipativityReport {
  bool feasible = false;
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  double min_value = 0.0;
  std::array<double, 2> argmin{0.0, 0.0};
};

/// Scans a sample box for the pointwise bound
/// sum_c u^c f^c(u) - c1 Phi(u) + delta |u|^2 >= -c2, reporting the smallest
/// feasible c2 for the best c1 in (0, 4].
DissipativityReport check_dissipativity(const PotentialSpec& spec, int arity,
                                        double delta, double box_half_width,
                                        int samples_per_axis);

struct LipschitzReport {
  double max_ratio = 0.0;
  double sigma = 0.0;
  int pairs = 0;
};

/// Empirical local Lipschitz constant of f between random pairs:
/// ||f(u)-f(v)||_Omega / (||u-v||_{sigma} * (1 + ||u||_*^p + ||v||_*^p)) with
/// fractional norms taken through the plate spectrum.
LipschitzReport lipschitz_probe(const Grid& grid, const PotentialSpec& spec,
                                const PlateSpectrum& spectrum, double sigma,
                                int pairs, std::uint64_t seed);

}  // namespace fpi
