#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "fpi/config.hpp"
#include "fpi/errors.hpp"
#include "fpi/fields.hpp"
#include "fpi/grid.hpp"
#include "fpi/io.hpp"
#include "fpi/random.hpp"
#include "fpi/stokes.hpp"

using namespace fpi;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("fpi_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Grid default_grid(int n = 6) {
  GridSpec spec;
  spec.dim = 2;
  spec.cells = {n, n, 1};
  spec.poisson_mu = 1.0 / 3.0;
  return Grid::build(spec);
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("fpi");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

const char* kSmallConfig = R"({
  "grid": {"dim": 2, "cells": [6, 6], "extent": [1.0, 1.0], "viscosity": 1.0, "poisson_mu": 0.3333333333333333},
  "potential": {"kind": "quartic", "kappa": 1.0},
  "forcing": {"kind": "vortex", "amplitude": 0.5},
  "time": {"dt": 0.01, "horizon": 0.05, "theta": 0.5, "output_cadence": 1, "snapshot_cadence": 2},
  "initial": {"kind": "random", "amplitude": 0.5}
})";

}  // namespace

TEST_SUITE("io_config_cli") {

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  const fs::path dir = fresh_dir("sha");
  write_text_file((dir / "x.txt").string(), "abc");
  CHECK(sha256_file((dir / "x.txt").string()) == sha256_hex("abc"));
}

TEST_CASE("ledger csv: fixed header, deterministic bytes, parseable rows") {
  std::vector<LedgerRow> rows(3);
  rows[0].t = 0.0;
  rows[0].e_fluid = 0.125;
  rows[1].t = 0.1;
  rows[1].e_fluid = 0.0625;
  rows[1].residual = -3.25e-14;
  rows[2].t = 0.2;
  rows[2].norm_h = 1.0 / 3.0;
  rows[2].w_lyap = 0.7;

  const fs::path dir = fresh_dir("ledger");
  const fs::path a = dir / "a.csv";
  const fs::path b = dir / "b.csv";
  write_ledger_csv(a.string(), rows);
  write_ledger_csv(b.string(), rows);

  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  CHECK(text.rfind("t,E_fluid,E_plate_kinetic,E_plate_elastic,E_potential,"
                   "dissipation_cum,work_cum,residual,norm_H,W_lyap\n", 0) == 0);

  // round-trip one value through the shortest-decimal formatting
  CHECK(text.find("0.0625") != std::string::npos);
  CHECK(text.find("0.3333333333333333") != std::string::npos);
  const int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 4);
}

TEST_CASE("series csv and spectrum csv") {
  const fs::path dir = fresh_dir("series");
  write_series_csv((dir / "s.csv").string(), "x", "y", {1.0, 2.0}, {3.0, 4.5});
  const std::string text = slurp(dir / "s.csv");
  CHECK(text == "x,y\n1,3\n2,4.5\n");

  write_spectrum_csv((dir / "spec.csv").string(), {{-0.5, 1.25}, {-0.75, 0.0}});
  const std::string spec = slurp(dir / "spec.csv");
  CHECK(spec == "re,im\n-0.5,1.25\n-0.75,0\n");
}

TEST_CASE("snapshot round-trip preserves every array bit for bit") {
  const Grid g = default_grid();
  RngStream rng(5, 3);
  SystemState s = random_state(g, rng, 1.0);
  s.t = 0.375;

  const fs::path dir = fresh_dir("snap");
  write_snapshot(dir.string(), 3, s);
  CHECK(fs::exists(dir / "state_000003.f64"));
  CHECK(fs::exists(dir / "state_000003.json"));

  SystemState back = read_snapshot(dir.string(), 3, g);
  CHECK(back.t == s.t);
  for (int c = 0; c < g.dim(); ++c) {
    for (int n = 0; n < g.comp_size(c); ++n) {
      CHECK(back.v.comp[c][n] == s.v.comp[c][n]);
    }
  }
  for (int c = 0; c < g.plate_components(); ++c) {
    for (int n = 0; n < g.plate_size(c); ++n) {
      CHECK(back.plate.u.comp[c][n] == s.plate.u.comp[c][n]);
      CHECK(back.plate.ut.comp[c][n] == s.plate.ut.comp[c][n]);
    }
  }
  // trace restored from the plate velocity
  PlateField gap = back.v.top_trace;
  axpy(-1.0, back.plate.ut, gap);
  CHECK(norm_plate(gap) <= 1e-15);

  // a mismatched grid is rejected
  const Grid other = default_grid(5);
  CHECK_THROWS_AS(read_snapshot(dir.string(), 3, other), ConfigError);
  // missing index is rejected
  CHECK_THROWS_AS(read_snapshot(dir.string(), 4, g), ConfigError);
  // corrupt sidecar is rejected
  write_text_file((dir / "state_000003.json").string(), "{not json");
  CHECK_THROWS_AS(read_snapshot(dir.string(), 3, g), ConfigError);
}

TEST_CASE("manifest lists hashed outputs") {
  const fs::path dir = fresh_dir("manifest");
  write_text_file((dir / "data.csv").string(), "x\n1\n");
  ManifestEntry entry = manifest_entry(dir.string(), "data.csv");
  CHECK(entry.path == "data.csv");
  CHECK(entry.bytes == 4);
  CHECK(entry.sha256 == sha256_hex("x\n1\n"));

  write_manifest(dir.string(), "simulate", config_to_json(parse_config_text("{}")), 42, 1.5,
                 {entry});
  const fs::path mpath = dir / "run_manifest.json";
  REQUIRE(fs::exists(mpath));
  const nlohmann::json m = nlohmann::json::parse(slurp(mpath));
  CHECK(m.at("tool") == "fpi");
  CHECK(m.at("subcommand") == "simulate");
  CHECK(m.at("seed") == 42);
  CHECK(m.at("files").size() == 1);
  CHECK(m.at("files")[0].at("sha256") == entry.sha256);
  CHECK(m.at("config").is_object());
}

TEST_CASE("config parsing: defaults, round-trip, strictness") {
  const RunConfig defaults = parse_config_text("{}");
  CHECK(defaults.grid.dim == 2);
  CHECK(defaults.grid.cells[0] == 16);
  CHECK(defaults.grid.resolved_lambda() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(defaults.potential.kind == PotentialSpec::Kind::kZero);
  CHECK(defaults.time.theta == 0.5);

  const RunConfig cfg = parse_config_text(kSmallConfig);
  CHECK(cfg.grid.cells[0] == 6);
  CHECK(cfg.potential.kind == PotentialSpec::Kind::kQuartic);
  CHECK(cfg.forcing.kind == ForcingSpec::Kind::kVortex);
  CHECK(cfg.initial.amplitude == 0.5);
  CHECK(cfg.time.snapshot_cadence == 2);

  // serialization round-trips to a fixed point
  const std::string once = config_to_json(cfg);
  const std::string twice = config_to_json(parse_config_text(once));
  CHECK(once == twice);

  CHECK_THROWS_AS(parse_config_text("{\"grid\": {\"cells\": [4, 4], \"typo\": 1}}"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{\"unknown_section\": {}}"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{\"time\": {\"dt\": -1.0}}"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{\"grid\": {\"dim\": 4}}"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("{\"grid\": {\"lame_lambda\": 1.0, \"poisson_mu\": 0.4}}"),
      ConfigError);
  // runaway potential is rejected by the dissipativity scan
  CHECK_THROWS_AS(
      parse_config_text("{\"potential\": {\"kind\": \"separable\", \"psi1\": [1.0, -1.0]}}"),
      ConfigError);
}

TEST_CASE("materialized fields are deterministic and admissible") {
  const Grid g = default_grid();

  ForcingSpec vortex;
  vortex.kind = ForcingSpec::Kind::kVortex;
  vortex.amplitude = 0.75;
  VelocityField f1 = materialize_forcing(g, vortex, 1);
  PressureField div = divergence(f1);
  double dmax = 0.0;
  for (double q : div.val) dmax = std::max(dmax, std::abs(q));
  CHECK(dmax <= 1e-9);

  ForcingSpec rnd;
  rnd.kind = ForcingSpec::Kind::kRandom;
  rnd.amplitude = 1.0;
  VelocityField r1 = materialize_forcing(g, rnd, 7);
  VelocityField r2 = materialize_forcing(g, rnd, 7);
  VelocityField r3 = materialize_forcing(g, rnd, 8);
  VelocityField d12 = r1;
  axpy(-1.0, r2, d12);
  CHECK(norm_velocity(d12) == 0.0);
  VelocityField d13 = r1;
  axpy(-1.0, r3, d13);
  CHECK(norm_velocity(d13) > 0.0);

  InitialSpec pluck;
  pluck.kind = InitialSpec::Kind::kPluck;
  pluck.amplitude = 0.5;
  SystemState s = materialize_initial(g, pluck, 7);
  CHECK(norm_plate(s.plate.u) > 0.0);
  CHECK(norm_velocity(s.v) == 0.0);

  InitialSpec zero;
  zero.kind = InitialSpec::Kind::kZero;
  CHECK(phase_norm(materialize_initial(g, zero, 7)) == 0.0);
}

TEST_CASE("thread cap env handling") {
  unsetenv("FPI_THREADS");
  CHECK(thread_cap() == 1);
  setenv("FPI_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  setenv("FPI_THREADS", "bananas", 1);
  CHECK(thread_cap() == 1);
  setenv("FPI_THREADS", "1000", 1);
  CHECK(thread_cap() == 64);
  unsetenv("FPI_THREADS");
}

TEST_CASE("cli: argument errors map to exit code 1") {
  CHECK(run_cli({"no_such_subcommand"}) == 1);
  CHECK(run_cli({"simulate"}) == 1);
  CHECK(run_cli({"simulate", "--config", "/nonexistent/x.json"}) == 1);
}

TEST_CASE("cli simulate writes the advertised outputs and manifest") {
  const fs::path dir = fresh_dir("cli_sim");
  const fs::path cfg = dir / "run.json";
  write_text_file(cfg.string(), kSmallConfig);
  const fs::path out = dir / "out";

  const int code =
      run_cli({"simulate", "--config", cfg.string(), "--out", out.string(), "--seed", "11"});
  REQUIRE(code == 0);
  CHECK(fs::exists(out / "ledger.csv"));
  CHECK(fs::exists(out / "simulate_summary.json"));
  CHECK(fs::exists(out / "run_manifest.json"));
  CHECK(fs::exists(out / "snapshots" / "state_000000.f64"));

  const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "run_manifest.json"));
  CHECK(manifest.at("subcommand") == "simulate");
  CHECK(manifest.at("seed") == 11);
  bool found_ledger = false;
  for (const auto& f : manifest.at("files")) {
    if (f.at("path") == "ledger.csv") {
      found_ledger = true;
      CHECK(f.at("sha256") == sha256_file((out / "ledger.csv").string()));
    }
  }
  CHECK(found_ledger);

  const nlohmann::json summary = nlohmann::json::parse(slurp(out / "simulate_summary.json"));
  CHECK(summary.contains("norm_final"));
  CHECK(summary.contains("residual_final"));
  CHECK(summary.at("instability_warning") == false);

  // identical invocation reproduces the ledger bytes
  const fs::path out2 = dir / "out2";
  REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out", out2.string(), "--seed",
                   "11"}) == 0);
  CHECK(slurp(out / "ledger.csv") == slurp(out2 / "ledger.csv"));
}

TEST_CASE("cli spectrum reports a stable abscissa") {
  const fs::path dir = fresh_dir("cli_spec");
  const fs::path cfg = dir / "run.json";
  write_text_file(cfg.string(), R"({
    "grid": {"dim": 2, "cells": [6, 6], "extent": [1.0, 1.0]}
  })");
  const fs::path out = dir / "out";
  REQUIRE(run_cli({"spectrum", "--config", cfg.string(), "--out", out.string()}) == 0);
  CHECK(fs::exists(out / "spectrum.csv"));

  const nlohmann::json summary = nlohmann::json::parse(slurp(out / "spectrum_summary.json"));
  CHECK(summary.at("abscissa").get<double>() < 0.0);
  CHECK(summary.at("exp_norm_t1").get<double>() <= 1.0 + 1e-8);
  CHECK(summary.at("accretivity_max_defect").get<double>() <= 1e-9);
}

}  // TEST_SUITE
