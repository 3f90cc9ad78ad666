#include "fpi/plate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "fpi/random.hpp"

namespace fpi {

PotentialSpec PotentialSpec::zero() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::quartic(double kappa) {
  PotentialSpec s;
  s.kind = Kind::kQuartic;
  s.kappa = kappa;
  return s;
}

PotentialSpec PotentialSpec::separable(std::vector<double> psi1, std::vector<double> psi2) {
  PotentialSpec s;
  s.kind = Kind::kSeparable;
  s.psi1 = std::move(psi1);
  s.psi2 = std::move(psi2);
  return s;
}

namespace {

// psi(s) = sum_m coeff[m] * s^(2(m+1)), even polynomial without constant term.
double poly_even(const std::vector<double>& coeff, double s) {
  const double s2 = s * s;
  double acc = 0.0;
  double pw = s2;
  for (double c : coeff) {
    acc += c * pw;
    pw *= s2;
  }
  return acc;
}

double poly_even_deriv(const std::vector<double>& coeff, double s) {
  const double s2 = s * s;
  double acc = 0.0;
  double pw = s;
  int degree = 2;
  for (double c : coeff) {
    acc += c * degree * pw;
    pw *= s2;
    degree += 2;
  }
  return acc;
}

}  // namespace

double PotentialSpec::value(const std::array<double, 2>& u, int arity) const {
  switch (kind) {
    case Kind::kZero:
      return 0.0;
    case Kind::kQuartic: {
      double q = u[0] * u[0];
      if (arity > 1) q += u[1] * u[1];
      return kappa * q * q;
    }
    case Kind::kSeparable: {
      double v = poly_even(psi1, u[0]);
      if (arity > 1) v += poly_even(psi2, u[1]);
      return v;
    }
  }
  return 0.0;
}

std::array<double, 2> PotentialSpec::grad(const std::array<double, 2>& u, int arity) const {
  switch (kind) {
    case Kind::kZero:
      return {0.0, 0.0};
    case Kind::kQuartic: {
      double q = u[0] * u[0];
      if (arity > 1) q += u[1] * u[1];
      return {4.0 * kappa * q * u[0], arity > 1 ? 4.0 * kappa * q * u[1] : 0.0};
    }
    case Kind::kSeparable:
      return {poly_even_deriv(psi1, u[0]),
              arity > 1 ? poly_even_deriv(psi2, u[1]) : 0.0};
  }
  return {0.0, 0.0};
}

int PotentialSpec::growth_exponent() const {
  switch (kind) {
    case Kind::kZero:
      return 0;
    case Kind::kQuartic:
      return 2;
    case Kind::kSeparable: {
      const std::size_t m = std::max(psi1.size(), psi2.size());
      return m == 0 ? 0 : static_cast<int>(2 * m);
    }
  }
  return 0;
}

std::string PotentialSpec::name() const {
  switch (kind) {
    case Kind::kZero:
      return "zero";
    case Kind::kQuartic:
      return "quartic";
    case Kind::kSeparable:
      return "separable";
  }
  return "zero";
}

namespace {

void require_plate_grid(const PlateField& u, const PlateField& v) {
  if (u.grid == nullptr || u.grid != v.grid) {
    throw std::invalid_argument("plate: operands live on different grids");
  }
}

// Enumerates the quadratic terms of the clamped energy form and feeds each
// difference through `emit(coefficient, node list, signs)` style callbacks.
// Shared between plate_form_a and apply_plate_operator so their summation by
// parts is exact by construction.

struct D2Terms {
  const Grid& g;

  template <typename F>
  void each(F&& f) const {
    const int nx = g.cells(0);
    const double w = (1.0 + g.lambda()) / g.h(0);
    for (int i = 0; i < nx; ++i) f(w, 0, g.pidx(0, i), 0, g.pidx(0, i + 1));
  }
};

struct D3Terms {
  const Grid& g;

  // f(weight, comp_a, idx_a, comp_b, idx_b) adds weight*(u_b - u_a)*(v_b - v_a);
  // s(weight, comp, idx) adds weight*u*v (half-cell Dirichlet wall strip);
  // d(weight, c0 nodes, c1 nodes) handled separately for the div-div term.
  template <typename F, typename S>
  void each(F&& f, S&& s) const {
    const double hx = g.h(0);
    const double hy = g.h(1);
    const double area = hx * hy;
    for (int c = 0; c < 2; ++c) {
      const int o = 1 - c;
      const double ht = g.h(c);
      const double ho = g.h(o);
      const int nt = g.plate_extent(c, c);       // cells(c)+1 nodes along own axis
      const int no = g.plate_extent(c, o);       // cells(o) nodes along other axis
      const double w_own = area / (ht * ht);
      const double w_other = area / (ho * ho);
      const double w_wall = 2.0 * ht / ho;
      for (int jo = 0; jo < no; ++jo) {
        for (int it = 0; it + 1 < nt; ++it) {
          f(w_own, c, node(c, it, jo), c, node(c, it + 1, jo));
        }
      }
      for (int jo = 1; jo < no; ++jo) {
        for (int it = 0; it < nt; ++it) {
          f(w_other, c, node(c, it, jo - 1), c, node(c, it, jo));
        }
      }
      for (int it = 0; it < nt; ++it) {
        s(w_wall, c, node(c, it, 0));
        s(w_wall, c, node(c, it, no - 1));
      }
    }
  }

  // Flat index from (own-axis position, other-axis position).
  int node(int c, int it, int jo) const {
    return c == 0 ? g.pidx(0, it, jo) : g.pidx(1, jo, it);
  }
};

double div_at_cell(const Grid& g, const PlateField& u, int i, int j) {
  return (u.at(0, i + 1, j) - u.at(0, i, j)) / g.h(0) +
         (u.at(1, i, j + 1) - u.at(1, i, j)) / g.h(1);
}

}  // namespace

double plate_form_a(const PlateField& u, const PlateField& v) {
  require_plate_grid(u, v);
  const Grid& g = *u.grid;
  double acc = 0.0;
  if (g.dim() == 2) {
    D2Terms{g}.each([&](double w, int ca, int ia, int cb, int ib) {
      acc += w * (u.comp[cb][ib] - u.comp[ca][ia]) * (v.comp[cb][ib] - v.comp[ca][ia]);
    });
    return acc;
  }
  D3Terms{g}.each(
      [&](double w, int ca, int ia, int cb, int ib) {
        acc += w * (u.comp[cb][ib] - u.comp[ca][ia]) * (v.comp[cb][ib] - v.comp[ca][ia]);
      },
      [&](double w, int c, int idx) { acc += w * u.comp[c][idx] * v.comp[c][idx]; });
  const double area = g.h(0) * g.h(1);
  for (int j = 0; j < g.cells(1); ++j) {
    for (int i = 0; i < g.cells(0); ++i) {
      acc += g.lambda() * area * div_at_cell(g, u, i, j) * div_at_cell(g, v, i, j);
    }
  }
  return acc;
}

PlateField apply_plate_operator(const PlateField& u) {
  if (u.grid == nullptr) throw std::invalid_argument("plate: field has no grid");
  const Grid& g = *u.grid;
  PlateField out(g);
  if (g.dim() == 2) {
    D2Terms{g}.each([&](double w, int ca, int ia, int cb, int ib) {
      const double d = u.comp[cb][ib] - u.comp[ca][ia];
      out.comp[cb][ib] += w * d;
      out.comp[ca][ia] -= w * d;
    });
  } else {
    D3Terms{g}.each(
        [&](double w, int ca, int ia, int cb, int ib) {
          const double d = u.comp[cb][ib] - u.comp[ca][ia];
          out.comp[cb][ib] += w * d;
          out.comp[ca][ia] -= w * d;
        },
        [&](double w, int c, int idx) { out.comp[c][idx] += w * u.comp[c][idx]; });
    const double area = g.h(0) * g.h(1);
    for (int j = 0; j < g.cells(1); ++j) {
      for (int i = 0; i < g.cells(0); ++i) {
        const double d = g.lambda() * area * div_at_cell(g, u, i, j);
        out.at(0, i + 1, j) += d / g.h(0);
        out.at(0, i, j) -= d / g.h(0);
        out.at(1, i, j + 1) += d / g.h(1);
        out.at(1, i, j) -= d / g.h(1);
      }
    }
  }
  // Riesz representer in the plate inner product; clamped rows are constrained.
  const double inv_mass = 1.0 / g.plate_weight();
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        const int idx = g.pidx(c, i, j);
        if (g.plate_clamped_node(c, i, j)) {
          out.comp[c][idx] = 0.0;
        } else {
          out.comp[c][idx] *= inv_mass;
        }
      }
    }
  }
  return out;
}

double potential_energy(const PlateField& u, const PotentialSpec& spec) {
  const Grid& g = *u.grid;
  if (spec.kind == PotentialSpec::Kind::kZero) return 0.0;
  const int arity = g.plate_components();
  double acc = 0.0;
  if (g.dim() == 2) {
    for (double s : u.comp[0]) acc += spec.value({s, 0.0}, 1);
    return acc * g.plate_weight();
  }
  if (spec.kind == PotentialSpec::Kind::kSeparable) {
    for (int c = 0; c < 2; ++c) {
      const auto& coeff = (c == 0) ? spec.psi1 : spec.psi2;
      for (double s : u.comp[c]) acc += poly_even(coeff, s);
    }
    return acc * g.plate_weight();
  }
  // Coupled potential on staggered components: cell-center averages.
  for (int j = 0; j < g.cells(1); ++j) {
    for (int i = 0; i < g.cells(0); ++i) {
      const double a0 = 0.5 * (u.at(0, i, j) + u.at(0, i + 1, j));
      const double a1 = 0.5 * (u.at(1, i, j) + u.at(1, i, j + 1));
      acc += spec.value({a0, a1}, arity);
    }
  }
  return acc * g.plate_weight();
}

PlateField nonlinear_force(const PlateField& u, const PotentialSpec& spec) {
  const Grid& g = *u.grid;
  PlateField out(g);
  if (spec.kind == PotentialSpec::Kind::kZero) return out;
  if (g.dim() == 2) {
    for (std::size_t n = 0; n < u.comp[0].size(); ++n) {
      out.comp[0][n] = spec.grad({u.comp[0][n], 0.0}, 1)[0];
    }
  } else if (spec.kind == PotentialSpec::Kind::kSeparable) {
    for (int c = 0; c < 2; ++c) {
      const auto& coeff = (c == 0) ? spec.psi1 : spec.psi2;
      for (std::size_t n = 0; n < u.comp[c].size(); ++n) {
        out.comp[c][n] = poly_even_deriv(coeff, u.comp[c][n]);
      }
    }
  } else {
    // Exact gradient of the cell-centered quadrature: each cell scatters half
    // of dPhi to the two nodes of each component it averages.
    for (int j = 0; j < g.cells(1); ++j) {
      for (int i = 0; i < g.cells(0); ++i) {
        const double a0 = 0.5 * (u.at(0, i, j) + u.at(0, i + 1, j));
        const double a1 = 0.5 * (u.at(1, i, j) + u.at(1, i, j + 1));
        const auto df = spec.grad({a0, a1}, 2);
        out.at(0, i, j) += 0.5 * df[0];
        out.at(0, i + 1, j) += 0.5 * df[0];
        out.at(1, i, j) += 0.5 * df[1];
        out.at(1, i, j + 1) += 0.5 * df[1];
      }
    }
  }
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (g.plate_clamped_node(c, i, j)) out.comp[c][g.pidx(c, i, j)] = 0.0;
      }
    }
  }
  return out;
}

int plate_free_count(const Grid& g) {
  int n = 0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (!g.plate_clamped_node(c, i, j)) ++n;
      }
    }
  }
  return n;
}

void plate_pack(const PlateField& u, double* out) {
  const Grid& g = *u.grid;
  int n = 0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (!g.plate_clamped_node(c, i, j)) out[n++] = u.comp[c][g.pidx(c, i, j)];
      }
    }
  }
}

void plate_unpack(const Grid& g, const double* in, PlateField& u) {
  u = PlateField(g);
  int n = 0;
  for (int c = 0; c < g.plate_components(); ++c) {
    const int n0 = g.plate_extent(c, 0);
    const int n1 = g.dim() == 3 ? g.plate_extent(c, 1) : 1;
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n0; ++i) {
        if (!g.plate_clamped_node(c, i, j)) u.comp[c][g.pidx(c, i, j)] = in[n++];
      }
    }
  }
}

PlateSpectrum::PlateSpectrum(const Grid& grid) : grid_(&grid) {
  const int n = plate_free_count(grid);
  Eigen::MatrixXd a(n, n);
  std::vector<double> unit(n, 0.0);
  PlateField col;
  std::vector<double> packed(n);
  for (int k = 0; k < n; ++k) {
    unit.assign(n, 0.0);
    unit[k] = 1.0;
    plate_unpack(grid, unit.data(), col);
    const PlateField au = apply_plate_operator(col);
    plate_pack(au, packed.data());
    for (int r = 0; r < n; ++r) a(r, k) = packed[r];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  eigenvalues_.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  eigenvectors_.resize(n);
  const double inv_sqrt_w = 1.0 / std::sqrt(grid.plate_weight());
  for (int k = 0; k < n; ++k) {
    eigenvectors_[k].resize(n);
    for (int r = 0; r < n; ++r) {
      eigenvectors_[k][r] = es.eigenvectors()(r, k) * inv_sqrt_w;
    }
  }
}

double PlateSpectrum::fractional_norm(const PlateField& u, double s) const {
  const Grid& g = *grid_;
  const int n = static_cast<int>(eigenvalues_.size());
  std::vector<double> packed(n);
  plate_pack(u, packed.data());
  const double w = g.plate_weight();
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    double coef = 0.0;
    for (int r = 0; r < n; ++r) coef += packed[r] * eigenvectors_[k][r];
    coef *= w;
    acc += std::pow(eigenvalues_[k], s) * coef * coef;
  }
  return std::sqrt(acc);
}

DissipativityReport check_dissipativity(const PotentialSpec& spec, int arity, double delta,
                                        double box_half_width, int samples_per_axis) {
  DissipativityReport report;
  report.delta = delta;
  const double r = box_half_width;
  const int n = samples_per_axis;
  const double candidates[] = {4.0, 3.0, 2.0, 1.0, 0.5};
  for (double c1 : candidates) {
    double min_value = 0.0;
    std::array<double, 2> argmin{0.0, 0.0};
    const int n2 = (arity > 1) ? n : 1;
    for (int b = 0; b < n2; ++b) {
      for (int a = 0; a < n; ++a) {
        std::array<double, 2> u{-r + 2.0 * r * a / (n - 1),
                                (arity > 1) ? -r + 2.0 * r * b / (n2 - 1) : 0.0};
        const auto f = spec.grad(u, arity);
        double val = u[0] * f[0] - c1 * spec.value(u, arity) + delta * u[0] * u[0];
        if (arity > 1) val += u[1] * f[1] + delta * u[1] * u[1];
        if (val < min_value) {
          min_value = val;
          argmin = u;
        }
      }
    }
    // A genuine lower bound needs the minimizer to sit inside the sample box;
    // a boundary argmin means the scan is still descending.
    const bool interior =
        std::abs(argmin[0]) < 0.95 * r && (arity == 1 || std::abs(argmin[1]) < 0.95 * r);
    if (interior) {
      report.feasible = true;
      report.c1 = c1;
      report.c2 = std::max(0.0, -min_value);
      report.min_value = min_value;
      report.argmin = argmin;
      return report;
    }
    report.c1 = c1;
    report.c2 = std::max(0.0, -min_value);
    report.min_value = min_value;
    report.argmin = argmin;
  }
  report.feasible = false;
  return report;
}

LipschitzReport lipschitz_probe(const Grid& grid, const PotentialSpec& spec,
                                const PlateSpectrum& spectrum, double sigma, int pairs,
                                std::uint64_t seed) {
  LipschitzReport report;
  report.sigma = sigma;
  report.pairs = pairs;
  RngStream rng(seed, 41);
  const int p = std::max(1, spec.growth_exponent());
  for (int k = 0; k < pairs; ++k) {
    PlateField u = random_plate_field(grid, rng, 1.0 + rng.uniform());
    PlateField v = random_plate_field(grid, rng, 1.0 + rng.uniform());
    PlateField diff = u;
    axpy(-1.0, v, diff);
    const double denom_d = spectrum.fractional_norm(diff, sigma);
    if (denom_d < 1e-14) continue;
    PlateField df = nonlinear_force(u, spec);
    axpy(-1.0, nonlinear_force(v, spec), df);
    const double nu = spectrum.fractional_norm(u, 1.0);
    const double nv = spectrum.fractional_norm(v, 1.0);
    const double growth = 1.0 + std::pow(nu, p) + std::pow(nv, p);
    const double ratio = norm_plate(df) / (denom_d * growth);
    if (ratio > report.max_ratio) report.max_ratio = ratio;
  }
  return report;
}

}  // namespace fpi
