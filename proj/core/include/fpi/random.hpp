#pragma once

#include <cstdint>
#include <random>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"

namespace fpi {

/// Deterministic RNG stream: one master seed, fixed per-purpose stream ids so
/// adding a consumer never perturbs the others.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  /// Uniform in [0,1) with platform-stable mapping.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [-1,1).
  double symmetric() { return 2.0 * uniform() - 1.0; }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Random divergence-free velocity with zero boundary data: random interior
/// stream coefficients (d=2) or a projected random face field (d=3).
VelocityField random_divergence_free(const Grid& grid, RngStream& rng, double amplitude);

/// Random clamped plate field from low-order sine modes.
PlateField random_plate_field(const Grid& grid, RngStream& rng, double amplitude);

/// Random admissible state scaled to the requested phase norm (fluid part
/// divergence-free, interface synchronized).  amplitude = 0 gives zero.
SystemState random_state(const Grid& grid, RngStream& rng, double amplitude);

/// Deterministic smooth fields for analytic tests and default forcing.
VelocityField vortex_field(const Grid& grid, double amplitude);
PlateField pluck_plate_field(const Grid& grid, double amplitude);

}  // namespace fpi
