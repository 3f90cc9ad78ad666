#include <doctest.h>

#include <cmath>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/random.hpp"

using namespace fpi;

namespace {

Grid grid_2d(int nx, int nz = 4, double lx = 1.0) {
  GridSpec spec;
  spec.dim = 2;
  spec.extent = {lx, 1.0, 1.0};
  spec.cells = {nx, nz, 1};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

Grid grid_3d(int n) {
  GridSpec spec;
  spec.dim = 3;
  spec.extent = {1.0, 1.0, 1.0};
  spec.cells = {n, n, n};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

}  // namespace

TEST_SUITE("plate") {

TEST_CASE("2d spectrum matches the closed-form clamped eigenvalues") {
  const int n = 12;
  const Grid g = grid_2d(n, 4, 1.0);
  const double h = g.h(0);
  const double lam = g.lambda();
  const PlateSpectrum spectrum(g);

  const auto& ev = spectrum.eigenvalues();
  REQUIRE(static_cast<int>(ev.size()) == n - 1);
  for (int k = 1; k < n; ++k) {
    const double s = std::sin(0.5 * k * M_PI / n);
    const double expect = (1.0 + lam) * 4.0 / (h * h) * s * s;
    CHECK(ev[k - 1] == doctest::Approx(expect).epsilon(1e-11));
  }
  CHECK(spectrum.smallest_eigenvalue() == doctest::Approx(ev.front()).epsilon(1e-15));
}

TEST_CASE("operator is the riesz representer of the energy form") {
  for (int dim = 2; dim <= 3; ++dim) {
    const Grid g = (dim == 2) ? grid_2d(9, 4, 1.3) : grid_3d(5);
    RngStream rng(71, dim);
    PlateField u = random_plate_field(g, rng, 1.0);
    PlateField v = random_plate_field(g, rng, 1.0);

    const double form_uv = plate_form_a(u, v);
    CHECK(form_uv == doctest::Approx(plate_form_a(v, u)).epsilon(1e-12));
    CHECK(dot_plate(apply_plate_operator(u), v) == doctest::Approx(form_uv).epsilon(1e-11));
    CHECK(dot_plate(u, apply_plate_operator(v)) == doctest::Approx(form_uv).epsilon(1e-11));
    CHECK(plate_form_a(u, u) > 0.0);

    // clamped nodes of A u stay zero
    PlateField au = apply_plate_operator(u);
    for (int c = 0; c < g.plate_components(); ++c) {
      const int end = g.cells(c);
      CHECK(au.at(c, 0, 0) == 0.0);
      CHECK(au.at(c, (c == 0) ? end : 0, (c == 0) ? 0 : end) == 0.0);
    }
  }
}

TEST_CASE("coercivity constant is the smallest eigenvalue") {
  const Grid g = grid_2d(10);
  const PlateSpectrum spectrum(g);
  const double lam1 = spectrum.smallest_eigenvalue();
  RngStream rng(5, 9);
  for (int trial = 0; trial < 16; ++trial) {
    PlateField u = random_plate_field(g, rng, 1.0);
    const double nn = dot_plate(u, u);
    if (nn == 0.0) continue;
    CHECK(plate_form_a(u, u) >= lam1 * nn * (1.0 - 1e-10));
  }
}

TEST_CASE("fractional norms interpolate the energy form") {
  const Grid g = grid_2d(8);
  const PlateSpectrum spectrum(g);
  RngStream rng(23, 1);
  PlateField u = random_plate_field(g, rng, 1.0);

  CHECK(spectrum.fractional_norm(u, 0.0) == doctest::Approx(norm_plate(u)).epsilon(1e-10));
  CHECK(spectrum.fractional_norm(u, 1.0) ==
        doctest::Approx(std::sqrt(plate_form_a(u, u))).epsilon(1e-10));
  CHECK(spectrum.fractional_norm(u, 2.0) ==
        doctest::Approx(norm_plate(apply_plate_operator(u))).epsilon(1e-10));

  const double lam1 = spectrum.smallest_eigenvalue();
  const double half = spectrum.fractional_norm(u, 0.5);
  CHECK(half >= std::pow(lam1, 0.25) * norm_plate(u) * (1.0 - 1e-10));
  CHECK(half <= spectrum.fractional_norm(u, 1.0) / std::pow(lam1, 0.25) * (1.0 + 1e-10));
}

TEST_CASE("nonlinear force is the exact gradient of the potential energy") {
  struct Case {
    int dim;
    PotentialSpec spec;
  };
  const Case cases[] = {
      {2, PotentialSpec::quartic(1.3)},
      {2, PotentialSpec::separable({0.5, 0.25}, {})},
      {3, PotentialSpec::quartic(0.7)},
      {3, PotentialSpec::separable({0.4, 0.1}, {0.3, 0.2})},
  };
  for (const auto& tc : cases) {
    const Grid g = (tc.dim == 2) ? grid_2d(8) : grid_3d(4);
    RngStream rng(51, tc.dim);
    PlateField u = random_plate_field(g, rng, 0.9);
    PlateField w = random_plate_field(g, rng, 1.0);

    const double eps = 1e-5;
    PlateField up = u, um = u;
    axpy(eps, w, up);
    axpy(-eps, w, um);
    const double fd =
        (potential_energy(up, tc.spec) - potential_energy(um, tc.spec)) / (2.0 * eps);
    const double pairing = dot_plate(nonlinear_force(u, tc.spec), w);
    const double scale_ref = std::max(1.0, std::abs(fd));
    CHECK(std::abs(pairing - fd) <= 2e-8 * scale_ref);
  }
}

TEST_CASE("quartic homogeneity ties force and energy") {
  for (int dim = 2; dim <= 3; ++dim) {
    const Grid g = (dim == 2) ? grid_2d(9) : grid_3d(4);
    RngStream rng(3, dim);
    PlateField u = random_plate_field(g, rng, 1.1);
    const PotentialSpec spec = PotentialSpec::quartic(2.0);
    CHECK(dot_plate(nonlinear_force(u, spec), u) ==
          doctest::Approx(4.0 * potential_energy(u, spec)).epsilon(1e-11));
    // degree-4 scaling
    PlateField u2 = u;
    scale(u2, 2.0);
    CHECK(potential_energy(u2, spec) ==
          doctest::Approx(16.0 * potential_energy(u, spec)).epsilon(1e-11));
  }
}

TEST_CASE("zero potential and 2d separable reduction") {
  const Grid g = grid_2d(8);
  RngStream rng(13, 0);
  PlateField u = random_plate_field(g, rng, 1.0);

  const PotentialSpec zero = PotentialSpec::zero();
  CHECK(potential_energy(u, zero) == 0.0);
  CHECK(norm_plate(nonlinear_force(u, zero)) == 0.0);

  // in d = 2 only psi1 participates
  const PotentialSpec with = PotentialSpec::separable({0.5, 0.2}, {9.0, 9.0});
  const PotentialSpec without = PotentialSpec::separable({0.5, 0.2}, {});
  CHECK(potential_energy(u, with) ==
        doctest::Approx(potential_energy(u, without)).epsilon(1e-14));
}

TEST_CASE("growth exponents") {
  CHECK(PotentialSpec::zero().growth_exponent() == 0);
  CHECK(PotentialSpec::quartic(1.0).growth_exponent() == 2);
  CHECK(PotentialSpec::separable({0.1}, {}).growth_exponent() >= 0);
}

TEST_CASE("dissipativity scan separates admissible and runaway potentials") {
  const DissipativityReport ok = check_dissipativity(PotentialSpec::quartic(1.0), 1, 0.25, 4.0, 41);
  CHECK(ok.feasible);
  CHECK(ok.c1 > 0.0);
  CHECK(ok.c2 >= 0.0);
  CHECK(ok.c2 <= 1.0);

  const DissipativityReport sep =
      check_dissipativity(PotentialSpec::separable({0.5, 0.25}, {0.75}), 2, 0.25, 4.0, 21);
  CHECK(sep.feasible);

  // negative quartic coefficient drives the scan minimum to the box edge
  const DissipativityReport bad =
      check_dissipativity(PotentialSpec::separable({1.0, -1.0}, {}), 1, 0.25, 4.0, 41);
  CHECK_FALSE(bad.feasible);
}

TEST_CASE("lipschitz probe reports finite ratios") {
  const Grid g = grid_2d(8);
  const PlateSpectrum spectrum(g);
  const LipschitzReport rep =
      lipschitz_probe(g, PotentialSpec::quartic(1.0), spectrum, 0.5, 32, 99);
  CHECK(rep.pairs == 32);
  CHECK(rep.sigma == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rep.max_ratio > 0.0);
  CHECK(rep.max_ratio < 1e3);

  const LipschitzReport nil =
      lipschitz_probe(g, PotentialSpec::zero(), spectrum, 0.5, 8, 99);
  CHECK(nil.max_ratio == 0.0);
}

TEST_CASE("pack round-trips the free degrees of freedom") {
  for (int dim = 2; dim <= 3; ++dim) {
    const Grid g = (dim == 2) ? grid_2d(7) : grid_3d(4);
    int expect = 0;
    for (int c = 0; c < g.plate_components(); ++c) {
      int clamped = 0;
      int total = g.plate_size(c);
      if (dim == 2) {
        clamped = 2;
      } else {
        // own-axis end planes
        clamped = 2 * ((c == 0) ? g.plate_extent(0, 1) : g.plate_extent(1, 0));
      }
      expect += total - clamped;
    }
    CHECK(plate_free_count(g) == expect);

    RngStream rng(31, dim);
    PlateField u = random_plate_field(g, rng, 1.0);
    std::vector<double> packed(plate_free_count(g));
    plate_pack(u, packed.data());
    PlateField back(g);
    plate_unpack(g, packed.data(), back);
    axpy(-1.0, u, back);
    CHECK(norm_plate(back) <= 1e-15);
  }
}

}  // TEST_SUITE
