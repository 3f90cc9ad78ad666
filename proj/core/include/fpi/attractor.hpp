#pragma once

#include <cstdint>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/stepper.hpp"

namespace fpi {

struct AbsorbingSetReport {
  double c0 = 0.0;
  double c1 = 0.0;
  double envelope_margin = 0.0;   // min over trajectories/time of envelope - W
  double ball_radius = 0.0;       // common forward-invariant phase-norm ball
  std::vector<double> entry_times;
  bool restart_invariant = false;
  double restart_max_norm = 0.0;
  int trajectories = 0;
};

/// Runs an ensemble from random data of phase norm <= radius, fits (c0, c1) in
/// W(t) <= W(0) e^{-c0 t} + (c1/c0)(c_f + ||G||^2)(1 - e^{-c0 t}), verifies the
/// envelope, extracts a common forward-invariant ball with entry times, and
/// replays restarts from inside the ball over a fresh horizon
/// (restart_horizon <= 0 reuses params.horizon).
AbsorbingSetReport absorbing_set_check(const Grid& grid, const PotentialSpec& potential,
                                       const TimeParams& params, const VelocityField& forcing,
                                       double radius, int trajectories, std::uint64_t seed,
                                       double restart_horizon = 0.0);

struct StabilizabilityPair {
  double c0 = 0.0;
  double c_r = 0.0;
  double margin = 0.0;
  double initial_distance = 0.0;
};

struct StabilizabilityReport {
  double omega = 0.0;
  double min_margin = 0.0;
  std::vector<StabilizabilityPair> pairs;
};

/// Checks ||S_t U0 - S_t U0*|| <= c0 e^{-omega t} ||U0 - U0*|| +
/// c_R int_0^t e^{-omega (t-s)} ||u - u*||_Omega ds on random pairs, with omega
/// fixed from the linear semigroup abscissa and (c0, c_R) fitted by
/// minimization; margins are reported per pair.
StabilizabilityReport stabilizability_check(const Grid& grid, const PotentialSpec& potential,
                                            const TimeParams& params, const VelocityField& forcing,
                                            double omega, double radius, int pairs,
                                            std::uint64_t seed);

struct DimensionReport {
  double dimension = 0.0;
  double band_low = 0.0;
  double band_high = 0.0;
  int samples = 0;
  std::vector<double> log_eps;
  std::vector<double> log_c;
  bool degenerate = false;   // all samples within noise of a single point
};

/// Grassberger-Procaccia correlation dimension of post-transient trajectory
/// samples under the phase-space metric.  Heuristic diagnostic, not a claim.
DimensionReport dimension_probe(const std::vector<SystemState>& samples,
                                double transient_fraction = 0.3);

struct RegularityReport {
  double sup_v_t = 0.0;
  double sup_laplacian = 0.0;
  double sup_ut_half = 0.0;   // ||A^{1/2} u_t||
  double sup_u_tt = 0.0;
  double sup_plate_balance = 0.0;  // ||A u + trace_gamma v||_Omega
  bool bounded = false;       // no growth trend across the tail
};

/// Monitors the smoothness quantities that stay bounded on the attractor,
/// using consecutive snapshots for the time derivatives.
RegularityReport attractor_regularity_check(const std::vector<SystemState>& snapshots,
                                            double snapshot_dt);

}  // namespace fpi
