#include "fpi/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpi/errors.hpp"
#include "fpi/random.hpp"
#include "fpi/stokes.hpp"

namespace fpi {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key \"" + key + "\" in section \"" + section + "\"");
    }
  }
}

double get_number(const json& obj, const std::string& section, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError("config: " + section + "." + key + " must be a number");
  }
  return v.get<double>();
}

int get_int(const json& obj, const std::string& section, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError("config: " + section + "." + key + " must be an integer");
  }
  return v.get<int>();
}

std::string get_string(const json& obj, const std::string& section, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    throw ConfigError("config: " + section + "." + key + " must be a string");
  }
  return v.get<std::string>();
}

std::vector<double> get_number_array(const json& obj, const std::string& section,
                                     const char* key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) {
    throw ConfigError("config: " + section + "." + key + " must be an array of numbers");
  }
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError("config: " + section + "." + key + " must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

GridSpec parse_grid(const json& obj) {
  require_keys(obj, "grid",
               {"dim", "extent", "cells", "viscosity", "lame_lambda", "poisson_mu"});
  GridSpec spec;
  spec.dim = get_int(obj, "grid", "dim", 2);
  if (spec.dim != 2 && spec.dim != 3) {
    throw ConfigError("config: grid.dim must be 2 or 3");
  }
  const auto extent = get_number_array(obj, "grid", "extent");
  if (!extent.empty()) {
    if (static_cast<int>(extent.size()) != spec.dim) {
      throw ConfigError("config: grid.extent must have dim entries");
    }
    for (int a = 0; a < spec.dim; ++a) spec.extent[a] = extent[a];
  }
  if (obj.contains("cells")) {
    const json& c = obj.at("cells");
    if (!c.is_array() || static_cast<int>(c.size()) != spec.dim) {
      throw ConfigError("config: grid.cells must have dim integer entries");
    }
    spec.cells = {1, 1, 1};
    for (int a = 0; a < spec.dim; ++a) {
      if (!c[a].is_number_integer()) {
        throw ConfigError("config: grid.cells entries must be integers");
      }
      spec.cells[a] = c[a].get<int>();
    }
  } else if (spec.dim == 3) {
    spec.cells = {8, 8, 8};
  }
  spec.viscosity = get_number(obj, "grid", "viscosity", 1.0);
  if (obj.contains("lame_lambda")) {
    spec.lame_lambda = get_number(obj, "grid", "lame_lambda", 0.0);
  }
  if (obj.contains("poisson_mu")) {
    spec.poisson_mu = get_number(obj, "grid", "poisson_mu", 0.0);
  }
  if (!spec.lame_lambda && !spec.poisson_mu) spec.poisson_mu = 1.0 / 3.0;
  return spec;
}

PotentialSpec parse_potential(const json& obj, int dim) {
  require_keys(obj, "potential", {"kind", "kappa", "psi1", "psi2"});
  const std::string kind = get_string(obj, "potential", "kind", "zero");
  PotentialSpec spec;
  if (kind == "zero") {
    spec = PotentialSpec::zero();
  } else if (kind == "quartic") {
    const double kappa = get_number(obj, "potential", "kappa", 1.0);
    if (kappa < 0.0) throw ConfigError("config: potential.kappa must be >= 0");
    spec = PotentialSpec::quartic(kappa);
  } else if (kind == "separable") {
    spec = PotentialSpec::separable(get_number_array(obj, "potential", "psi1"),
                                    get_number_array(obj, "potential", "psi2"));
    if (spec.psi1.empty() && spec.psi2.empty()) {
      throw ConfigError("config: separable potential needs psi1 or psi2 coefficients");
    }
  } else {
    throw ConfigError("config: potential.kind must be zero, quartic, or separable");
  }
  if (spec.kind != PotentialSpec::Kind::kZero) {
    const DissipativityReport diss = check_dissipativity(spec, dim - 1, 0.25, 4.0, 41);
    if (!diss.feasible) {
      throw ConfigError("config: potential fails the dissipativity scan (no interior "
                        "minimizer with c1 in (0,4])");
    }
  }
  return spec;
}

ForcingSpec parse_forcing(const json& obj) {
  require_keys(obj, "forcing", {"kind", "amplitude"});
  ForcingSpec spec;
  const std::string kind = get_string(obj, "forcing", "kind", "zero");
  if (kind == "zero") {
    spec.kind = ForcingSpec::Kind::kZero;
  } else if (kind == "vortex") {
    spec.kind = ForcingSpec::Kind::kVortex;
  } else if (kind == "random") {
    spec.kind = ForcingSpec::Kind::kRandom;
  } else {
    throw ConfigError("config: forcing.kind must be zero, vortex, or random");
  }
  spec.amplitude = get_number(obj, "forcing", "amplitude", 0.0);
  if (spec.kind != ForcingSpec::Kind::kZero && spec.amplitude < 0.0) {
    throw ConfigError("config: forcing.amplitude must be >= 0");
  }
  return spec;
}

TimeParams parse_time(const json& obj) {
  require_keys(obj, "time",
               {"dt", "horizon", "theta", "nonlinear_iterations", "output_cadence",
                "snapshot_cadence", "solver_tol", "solver_max_iterations"});
  TimeParams tp;
  tp.dt = get_number(obj, "time", "dt", tp.dt);
  tp.horizon = get_number(obj, "time", "horizon", tp.horizon);
  tp.theta = get_number(obj, "time", "theta", tp.theta);
  tp.nonlinear_iterations = get_int(obj, "time", "nonlinear_iterations", 0);
  tp.output_cadence = get_int(obj, "time", "output_cadence", 1);
  tp.snapshot_cadence = get_int(obj, "time", "snapshot_cadence", 0);
  tp.solver_tol = get_number(obj, "time", "solver_tol", tp.solver_tol);
  tp.solver_max_iterations = get_int(obj, "time", "solver_max_iterations", 10000);
  try {
    tp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return tp;
}

InitialSpec parse_initial(const json& obj) {
  require_keys(obj, "initial", {"kind", "amplitude"});
  InitialSpec spec;
  const std::string kind = get_string(obj, "initial", "kind", "zero");
  if (kind == "zero") {
    spec.kind = InitialSpec::Kind::kZero;
  } else if (kind == "random") {
    spec.kind = InitialSpec::Kind::kRandom;
  } else if (kind == "pluck") {
    spec.kind = InitialSpec::Kind::kPluck;
  } else {
    throw ConfigError("config: initial.kind must be zero, random, or pluck");
  }
  spec.amplitude = get_number(obj, "initial", "amplitude", 1.0);
  if (spec.amplitude < 0.0) throw ConfigError("config: initial.amplitude must be >= 0");
  return spec;
}

EnsembleSpec parse_ensemble(const json& obj) {
  require_keys(obj, "ensemble", {"trajectories", "pairs", "radius", "restart_horizon"});
  EnsembleSpec spec;
  spec.trajectories = get_int(obj, "ensemble", "trajectories", spec.trajectories);
  spec.pairs = get_int(obj, "ensemble", "pairs", spec.pairs);
  spec.radius = get_number(obj, "ensemble", "radius", spec.radius);
  spec.restart_horizon = get_number(obj, "ensemble", "restart_horizon", spec.restart_horizon);
  if (spec.trajectories < 1) throw ConfigError("config: ensemble.trajectories must be >= 1");
  if (spec.pairs < 1) throw ConfigError("config: ensemble.pairs must be >= 1");
  if (!(spec.radius > 0.0)) throw ConfigError("config: ensemble.radius must be > 0");
  if (!(spec.restart_horizon > 0.0)) {
    throw ConfigError("config: ensemble.restart_horizon must be > 0");
  }
  return spec;
}

ProbeSpec parse_probe(const json& obj) {
  require_keys(obj, "probe", {"transient_fraction", "stride"});
  ProbeSpec spec;
  spec.transient_fraction = get_number(obj, "probe", "transient_fraction", 0.3);
  spec.stride = get_int(obj, "probe", "stride", 1);
  if (spec.transient_fraction < 0.0 || spec.transient_fraction >= 1.0) {
    throw ConfigError("config: probe.transient_fraction must lie in [0,1)");
  }
  if (spec.stride < 1) throw ConfigError("config: probe.stride must be >= 1");
  return spec;
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  require_keys(root, "(top level)",
               {"grid", "potential", "forcing", "time", "initial", "ensemble", "probe"});

  RunConfig cfg;
  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    if (!root.contains(name)) return empty;
    const json& s = root.at(name);
    if (!s.is_object()) {
      throw ConfigError(std::string("config: section \"") + name + "\" must be an object");
    }
    return s;
  };
  cfg.grid = parse_grid(section("grid"));
  try {
    cfg.grid.validate();
    cfg.grid.resolved_lambda();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.potential = parse_potential(section("potential"), cfg.grid.dim);
  cfg.forcing = parse_forcing(section("forcing"));
  cfg.time = parse_time(section("time"));
  cfg.initial = parse_initial(section("initial"));
  cfg.ensemble = parse_ensemble(section("ensemble"));
  cfg.probe = parse_probe(section("probe"));
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_json(const RunConfig& config) {
  json root;
  json grid;
  grid["dim"] = config.grid.dim;
  grid["extent"] = json::array();
  grid["cells"] = json::array();
  for (int a = 0; a < config.grid.dim; ++a) {
    grid["extent"].push_back(config.grid.extent[a]);
    grid["cells"].push_back(config.grid.cells[a]);
  }
  grid["viscosity"] = config.grid.viscosity;
  grid["lame_lambda"] = config.grid.resolved_lambda();
  if (config.grid.poisson_mu) grid["poisson_mu"] = *config.grid.poisson_mu;
  root["grid"] = grid;

  json pot;
  pot["kind"] = config.potential.name();
  if (config.potential.kind == PotentialSpec::Kind::kQuartic) {
    pot["kappa"] = config.potential.kappa;
  }
  if (config.potential.kind == PotentialSpec::Kind::kSeparable) {
    pot["psi1"] = config.potential.psi1;
    pot["psi2"] = config.potential.psi2;
  }
  root["potential"] = pot;

  json forcing;
  forcing["kind"] = config.forcing.kind == ForcingSpec::Kind::kZero     ? "zero"
                    : config.forcing.kind == ForcingSpec::Kind::kVortex ? "vortex"
                                                                        : "random";
  forcing["amplitude"] = config.forcing.amplitude;
  root["forcing"] = forcing;

  json time;
  time["dt"] = config.time.dt;
  time["horizon"] = config.time.horizon;
  time["theta"] = config.time.theta;
  time["nonlinear_iterations"] = config.time.nonlinear_iterations;
  time["output_cadence"] = config.time.output_cadence;
  time["snapshot_cadence"] = config.time.snapshot_cadence;
  time["solver_tol"] = config.time.solver_tol;
  time["solver_max_iterations"] = config.time.solver_max_iterations;
  root["time"] = time;

  json initial;
  initial["kind"] = config.initial.kind == InitialSpec::Kind::kZero     ? "zero"
                    : config.initial.kind == InitialSpec::Kind::kRandom ? "random"
                                                                        : "pluck";
  initial["amplitude"] = config.initial.amplitude;
  root["initial"] = initial;

  json ensemble;
  ensemble["trajectories"] = config.ensemble.trajectories;
  ensemble["pairs"] = config.ensemble.pairs;
  ensemble["radius"] = config.ensemble.radius;
  ensemble["restart_horizon"] = config.ensemble.restart_horizon;
  root["ensemble"] = ensemble;

  json probe;
  probe["transient_fraction"] = config.probe.transient_fraction;
  probe["stride"] = config.probe.stride;
  root["probe"] = probe;
  return root.dump(2);
}

VelocityField materialize_forcing(const Grid& grid, const ForcingSpec& spec,
                                  std::uint64_t seed) {
  switch (spec.kind) {
    case ForcingSpec::Kind::kZero:
      return VelocityField(grid);
    case ForcingSpec::Kind::kVortex: {
      VelocityField g = vortex_field(grid, spec.amplitude);
      if (grid.dim() == 3 && spec.amplitude != 0.0) g = leray_project(g).v;
      return g;
    }
    case ForcingSpec::Kind::kRandom: {
      RngStream rng(seed, 11);
      return random_divergence_free(grid, rng, spec.amplitude);
    }
  }
  return VelocityField(grid);
}

SystemState materialize_initial(const Grid& grid, const InitialSpec& spec,
                                std::uint64_t seed) {
  switch (spec.kind) {
    case InitialSpec::Kind::kZero:
      return SystemState(grid);
    case InitialSpec::Kind::kRandom: {
      RngStream rng(seed, 13);
      return random_state(grid, rng, spec.amplitude);
    }
    case InitialSpec::Kind::kPluck: {
      SystemState state(grid);
      state.plate.u = pluck_plate_field(grid, spec.amplitude);
      state.sync_interface();
      return state;
    }
  }
  return SystemState(grid);
}

int thread_cap() {
  const char* env = std::getenv("FPI_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<int>(v > 64 ? 64 : v);
}

}  // namespace fpi
