#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpi/fields.hpp"
#include "fpi/stepper.hpp"

namespace fpi {

/// Writes the cumulative energy ledger with the fixed column set
/// t,E_fluid,E_plate_kinetic,E_plate_elastic,E_potential,dissipation_cum,
/// work_cum,residual,norm_H,W_lyap.  Shortest round-trip decimal formatting,
/// fixed row order, so identical runs produce identical bytes.
void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows);

/// Two-column (re,im) eigenvalue table sorted by real part descending.
void write_spectrum_csv(const std::string& path,
                        const std::vector<std::pair<double, double>>& eigenvalues);

/// Flat float64 binary dump of a state plus a JSON sidecar describing the
/// array layout (component names, shapes, byte offsets, time stamp).
void write_snapshot(const std::string& directory, int index, const SystemState& state);
/// Reads a snapshot pair back; throws ConfigError on malformed sidecars.
SystemState read_snapshot(const std::string& directory, int index, const Grid& grid);

/// Generic small helpers shared by the writers.
void write_text_file(const std::string& path, const std::string& content);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct ManifestEntry {
  std::string path;   // relative to the output directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

/// RunManifest: tool version, subcommand, resolved config echo, seed, wall
/// time, and a content-hash inventory of every output file.
void write_manifest(const std::string& directory, const std::string& subcommand,
                    const std::string& config_json, std::uint64_t seed,
                    double duration_seconds, const std::vector<ManifestEntry>& entries);

/// Inventory helper: hashes an already-written output file.
ManifestEntry manifest_entry(const std::string& directory, const std::string& relative_path);

/// Plot-ready series: two-column CSV (x,y) plus an optional JSON sidecar with
/// fit parameters or axis metadata.
void write_series_csv(const std::string& path, const std::string& x_name,
                      const std::string& y_name, const std::vector<double>& x,
                      const std::vector<double>& y);

}  // namespace fpi
