#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpi/attractor.hpp"
#include "fpi/certify.hpp"
#include "fpi/config.hpp"
#include "fpi/errors.hpp"
#include "fpi/generator.hpp"
#include "fpi/io.hpp"
#include "fpi/random.hpp"
#include "fpi/stepper.hpp"

namespace fpi {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct Outputs {
  std::string dir;
  std::vector<ManifestEntry> entries;

  explicit Outputs(const std::string& d) : dir(d) { fs::create_directories(dir); }
  std::string path(const std::string& rel) const { return (fs::path(dir) / rel).string(); }
  void track(const std::string& rel) { entries.push_back(manifest_entry(dir, rel)); }
};

int run_simulate(const RunConfig& cfg, const std::string& cfg_json, const std::string& out_dir,
                 std::uint64_t seed) {
  Timer timer;
  const Grid grid = Grid::build(cfg.grid);
  const VelocityField forcing = materialize_forcing(grid, cfg.forcing, seed);
  const SystemState initial = materialize_initial(grid, cfg.initial, seed);
  const RunResult run = run_simulation(grid, cfg.potential, cfg.time, forcing, initial);

  Outputs out(out_dir);
  write_ledger_csv(out.path("ledger.csv"), run.ledger);
  out.track("ledger.csv");
  if (!run.snapshots.empty()) {
    for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
      write_snapshot(out.path("snapshots"), static_cast<int>(s), run.snapshots[s]);
      const std::string stem = "snapshots/state_";
      char idx[16];
      std::snprintf(idx, sizeof(idx), "%06zu", s);
      out.track(stem + idx + ".f64");
      out.track(stem + idx + ".json");
    }
  }
  const LedgerRow& last = run.ledger.back();
  json summary;
  summary["t_final"] = last.t;
  summary["energy_final"] =
      last.e_fluid + last.e_plate_kinetic + last.e_plate_elastic + last.e_potential;
  summary["norm_final"] = last.norm_h;
  summary["residual_final"] = last.residual;
  summary["lyapunov_eta"] = run.eta;
  summary["instability_warning"] = run.instability_warning;
  write_text_file(out.path("simulate_summary.json"), summary.dump(2) + "\n");
  out.track("simulate_summary.json");
  write_manifest(out.dir, "simulate", cfg_json, seed, timer.seconds(), out.entries);

  if (run.instability_warning) {
    std::cerr << "fpi: warning: energy balance residual exceeded its stability band; "
                 "output flagged in simulate_summary.json\n";
  }
  std::cout << "simulate: t = " << last.t << ", ||U||_H = " << last.norm_h
            << ", residual = " << last.residual << ", outputs in " << out.dir << "\n";
  return 0;
}

int run_spectrum(const RunConfig& cfg, const std::string& cfg_json, const std::string& out_dir,
                 std::uint64_t seed) {
  Timer timer;
  const Grid grid = Grid::build(cfg.grid);
  const GeneratorMatrix gen = assemble_generator(grid);
  const SpectrumReport spec = spectral_abscissa(gen);
  const AccretivityReport acc = check_accretivity(gen, 20, seed);
  const double norm1 = weighted_exp_norm(gen, 1.0);

  Outputs out(out_dir);
  std::vector<std::pair<double, double>> eigen_pairs;
  eigen_pairs.reserve(spec.eigenvalues.size());
  for (const auto& z : spec.eigenvalues) eigen_pairs.emplace_back(z.real(), z.imag());
  write_spectrum_csv(out.path("spectrum.csv"), eigen_pairs);
  out.track("spectrum.csv");

  json summary;
  summary["state_dimension"] = gen.size();
  summary["fluid_modes"] = gen.n_fluid;
  summary["abscissa"] = spec.abscissa;
  summary["exp_norm_t1"] = norm1;
  summary["accretivity_max_defect"] = acc.max_identity_defect;
  summary["accretivity_min_symmetric_eigenvalue"] = acc.min_symmetric_eigenvalue;
  write_text_file(out.path("spectrum_summary.json"), summary.dump(2) + "\n");
  out.track("spectrum_summary.json");
  write_manifest(out.dir, "spectrum", cfg_json, seed, timer.seconds(), out.entries);

  std::cout << "spectrum: abscissa = " << spec.abscissa << ", ||exp(-A)||_H(1) = " << norm1
            << ", outputs in " << out.dir << "\n";
  return 0;
}

int run_absorb(const RunConfig& cfg, const std::string& cfg_json, const std::string& out_dir,
               std::uint64_t seed) {
  Timer timer;
  const Grid grid = Grid::build(cfg.grid);
  const VelocityField forcing = materialize_forcing(grid, cfg.forcing, seed);
  const AbsorbingSetReport rep =
      absorbing_set_check(grid, cfg.potential, cfg.time, forcing, cfg.ensemble.radius,
                          cfg.ensemble.trajectories, seed, cfg.ensemble.restart_horizon);

  Outputs out(out_dir);
  json report;
  report["c0"] = rep.c0;
  report["c1"] = rep.c1;
  report["envelope_margin"] = rep.envelope_margin;
  report["ball_radius"] = rep.ball_radius;
  report["entry_times"] = rep.entry_times;
  report["restart_invariant"] = rep.restart_invariant;
  report["restart_max_norm"] = rep.restart_max_norm;
  report["trajectories"] = rep.trajectories;
  write_text_file(out.path("absorb_report.json"), report.dump(2) + "\n");
  out.track("absorb_report.json");
  write_manifest(out.dir, "absorb", cfg_json, seed, timer.seconds(), out.entries);

  bool entered = true;
  for (double t : rep.entry_times) entered = entered && t >= 0.0;
  const bool pass = rep.envelope_margin >= 0.0 && rep.restart_invariant && entered;
  std::cout << "absorb: envelope margin = " << rep.envelope_margin
            << ", ball radius = " << rep.ball_radius
            << ", restart invariant = " << (rep.restart_invariant ? "yes" : "no")
            << ", outputs in " << out.dir << "\n";
  if (!pass) {
    std::cerr << "fpi: absorb check failed (see absorb_report.json)\n";
    return 3;
  }
  return 0;
}

int run_stabilize(const RunConfig& cfg, const std::string& cfg_json, const std::string& out_dir,
                  std::uint64_t seed) {
  Timer timer;
  const Grid grid = Grid::build(cfg.grid);
  const VelocityField forcing = materialize_forcing(grid, cfg.forcing, seed);
  const double abscissa = spectral_abscissa(assemble_generator(grid)).abscissa;
  Outputs out(out_dir);
  if (abscissa >= 0.0) {
    json report;
    report["abscissa"] = abscissa;
    report["error"] = "linear part is not exponentially stable at this resolution";
    write_text_file(out.path("stabilize_report.json"), report.dump(2) + "\n");
    out.track("stabilize_report.json");
    write_manifest(out.dir, "stabilize", cfg_json, seed, timer.seconds(), out.entries);
    std::cerr << "fpi: stabilize check failed: nonnegative spectral abscissa " << abscissa
              << "\n";
    return 3;
  }
  const double omega = 0.9 * (-abscissa);
  const StabilizabilityReport rep =
      stabilizability_check(grid, cfg.potential, cfg.time, forcing, omega,
                            cfg.ensemble.radius, cfg.ensemble.pairs, seed);

  json report;
  report["omega"] = rep.omega;
  report["abscissa"] = abscissa;
  report["min_margin"] = rep.min_margin;
  report["pairs"] = json::array();
  std::vector<double> margins, c0s;
  for (const auto& p : rep.pairs) {
    report["pairs"].push_back({{"c0", p.c0},
                               {"c_r", p.c_r},
                               {"margin", p.margin},
                               {"initial_distance", p.initial_distance}});
    margins.push_back(p.margin);
    c0s.push_back(p.c0);
  }
  write_text_file(out.path("stabilize_report.json"), report.dump(2) + "\n");
  out.track("stabilize_report.json");
  write_series_csv(out.path("stabilize_margins.csv"), "c0", "margin", c0s, margins);
  out.track("stabilize_margins.csv");
  write_manifest(out.dir, "stabilize", cfg_json, seed, timer.seconds(), out.entries);

  std::cout << "stabilize: omega = " << omega << ", min margin = " << rep.min_margin
            << " over " << rep.pairs.size() << " pairs, outputs in " << out.dir << "\n";
  if (rep.min_margin < 0.0) {
    std::cerr << "fpi: stabilize check failed (see stabilize_report.json)\n";
    return 3;
  }
  return 0;
}

int run_dimension(const RunConfig& cfg, const std::string& cfg_json, const std::string& out_dir,
                  std::uint64_t seed) {
  Timer timer;
  const Grid grid = Grid::build(cfg.grid);
  const VelocityField forcing = materialize_forcing(grid, cfg.forcing, seed);
  const SystemState initial = materialize_initial(grid, cfg.initial, seed);
  TimeParams params = cfg.time;
  if (params.snapshot_cadence == 0) params.snapshot_cadence = cfg.probe.stride;
  const RunResult run = run_simulation(grid, cfg.potential, params, forcing, initial);

  const DimensionReport dim = dimension_probe(run.snapshots, cfg.probe.transient_fraction);
  const RegularityReport reg =
      attractor_regularity_check(run.snapshots, params.dt * params.snapshot_cadence);

  Outputs out(out_dir);
  json report;
  report["dimension"] = dim.dimension;
  report["band_low"] = dim.band_low;
  report["band_high"] = dim.band_high;
  report["samples"] = dim.samples;
  report["degenerate"] = dim.degenerate;
  report["regularity"] = {{"sup_v_t", reg.sup_v_t},
                          {"sup_laplacian", reg.sup_laplacian},
                          {"sup_ut_half", reg.sup_ut_half},
                          {"sup_u_tt", reg.sup_u_tt},
                          {"sup_plate_balance", reg.sup_plate_balance},
                          {"bounded", reg.bounded}};
  write_text_file(out.path("dimension_report.json"), report.dump(2) + "\n");
  out.track("dimension_report.json");
  write_series_csv(out.path("correlation.csv"), "log_eps", "log_c", dim.log_eps, dim.log_c);
  out.track("correlation.csv");
  write_manifest(out.dir, "dimension", cfg_json, seed, timer.seconds(), out.entries);

  std::cout << "dimension: estimate = " << dim.dimension << " [" << dim.band_low << ", "
            << dim.band_high << "]" << (dim.degenerate ? " (degenerate)" : "")
            << ", outputs in " << out.dir << "\n";
  return 0;
}

int run_certify(const std::string& cfg_json, const std::string& out_dir, std::uint64_t seed) {
  Timer timer;
  const std::vector<int> ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<CriterionResult> results = run_certification(ids, seed);

  Outputs out(out_dir);
  json report = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << criterion_line(r) << "\n";
    report.push_back({{"id", r.id},
                      {"name", r.name},
                      {"pass", r.pass},
                      {"value", r.value},
                      {"threshold", r.threshold},
                      {"seconds", r.seconds},
                      {"detail", r.detail}});
    all_pass = all_pass && r.pass;
  }
  write_text_file(out.path("certify_report.json"), report.dump(2) + "\n");
  out.track("certify_report.json");
  write_manifest(out.dir, "certify", cfg_json, seed, timer.seconds(), out.entries);

  if (!all_pass) {
    std::cerr << "fpi: certification failed (see certify_report.json)\n";
    return 3;
  }
  std::cout << "certify: all checks passed, outputs in " << out.dir << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"structured-grid simulator for a viscous fluid coupled to an in-plane "
               "elastic plate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "fpi_out";
  std::uint64_t seed = 42;

  const std::vector<std::string> names = {"simulate",  "spectrum", "absorb",
                                          "stabilize", "dimension", "certify"};
  const std::vector<std::string> blurbs = {
      "advance the coupled system and write the energy ledger",
      "eigenvalues and weighted propagator norm of the linear part",
      "ensemble dissipativity and absorbing-ball check",
      "pairwise exponential-plus-feedback contraction check",
      "correlation-dimension and regularity diagnostics",
      "run the numbered certification suite at pinned settings"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (names[i] != "certify") opt->required();
    sub->add_option("--out", out_dir, "output directory (default fpi_out)");
    sub->add_option("--seed", seed, "RNG seed (default 42)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    std::string cfg_json = "{}";
    if (!config_path.empty()) {
      cfg = parse_config_file(config_path);
      cfg_json = config_to_json(cfg);
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "simulate") return run_simulate(cfg, cfg_json, out_dir, seed);
    if (sub == "spectrum") return run_spectrum(cfg, cfg_json, out_dir, seed);
    if (sub == "absorb") return run_absorb(cfg, cfg_json, out_dir, seed);
    if (sub == "stabilize") return run_stabilize(cfg, cfg_json, out_dir, seed);
    if (sub == "dimension") return run_dimension(cfg, cfg_json, out_dir, seed);
    if (sub == "certify") return run_certify(cfg_json, out_dir, seed);
    std::cerr << "fpi: unknown subcommand " << sub << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "fpi: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fpi: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "fpi: solver failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fpi: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fpi
