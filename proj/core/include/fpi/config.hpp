#pragma once

#include <cstdint>
#include <string>

#include "fpi/fields.hpp"
#include "fpi/grid.hpp"
#include "fpi/plate.hpp"
#include "fpi/stepper.hpp"

namespace fpi {

struct ForcingSpec {
  enum class Kind { kZero, kVortex, kRandom };
  Kind kind = Kind::kZero;
  double amplitude = 0.0;
};

struct InitialSpec {
  enum class Kind { kZero, kRandom, kPluck };
  Kind kind = Kind::kZero;
  double amplitude = 1.0;
};

struct EnsembleSpec {
  int trajectories = 10;
  int pairs = 10;
  double radius = 1.0;
  double restart_horizon = 5.0;
};

struct ProbeSpec {
  double transient_fraction = 0.3;
  int stride = 1;
};

/// Full run description, parsed strictly from JSON (unknown keys rejected).
struct RunConfig {
  GridSpec grid;
  PotentialSpec potential;
  ForcingSpec forcing;
  TimeParams time;
  InitialSpec initial;
  EnsembleSpec ensemble;
  ProbeSpec probe;
};

/// Parses and validates; throws ConfigError with a pointed message on unknown
/// keys, wrong types, out-of-range values, mu/lambda inconsistency, or an
/// inadmissible potential.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& json_text);
/// Serialized resolved configuration (round-trips through parse_config_text).
std::string config_to_json(const RunConfig& config);

/// Divergence-free time-constant forcing field per spec (projected).
VelocityField materialize_forcing(const Grid& grid, const ForcingSpec& spec,
                                  std::uint64_t seed);
SystemState materialize_initial(const Grid& grid, const InitialSpec& spec,
                                std::uint64_t seed);

/// Thread cap from FPI_THREADS (>=1); defaults to 1 when unset or invalid.
int thread_cap();

/// Entry point shared by the installed binary and the tests: parses argv
/// ("fpi <subcommand> --config <path> [--out <dir>] [--seed <u64>]"), runs the
/// subcommand, writes outputs + manifest.  Exit codes: 0 success, 1 config or
/// validation error, 2 solver failure, 3 certification failure.
int cli_main(int argc, const char* const* argv);

}  // namespace fpi
