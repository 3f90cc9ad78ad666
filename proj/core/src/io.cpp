#include "fpi/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpi/errors.hpp"

namespace fpi {

namespace {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string snapshot_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "state_%06d", index);
  return buf;
}

struct ArrayRef {
  std::string name;
  const std::vector<double>* data;
};

std::vector<ArrayRef> state_arrays(const SystemState& state) {
  const Grid& g = *state.grid();
  std::vector<ArrayRef> arrays;
  for (int c = 0; c < g.dim(); ++c) {
    arrays.push_back({"v" + std::to_string(c), &state.v.comp[c]});
  }
  for (int c = 0; c < g.plate_components(); ++c) {
    arrays.push_back({"u" + std::to_string(c), &state.plate.u.comp[c]});
  }
  for (int c = 0; c < g.plate_components(); ++c) {
    arrays.push_back({"ut" + std::to_string(c), &state.plate.ut.comp[c]});
  }
  return arrays;
}

}  // namespace

void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows) {
  std::ostringstream out;
  out << "t,E_fluid,E_plate_kinetic,E_plate_elastic,E_potential,dissipation_cum,"
         "work_cum,residual,norm_H,W_lyap\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.e_fluid) << ','
        << format_double(r.e_plate_kinetic) << ',' << format_double(r.e_plate_elastic) << ','
        << format_double(r.e_potential) << ',' << format_double(r.dissipation_cum) << ','
        << format_double(r.work_cum) << ',' << format_double(r.residual) << ','
        << format_double(r.norm_h) << ',' << format_double(r.w_lyap) << '\n';
  }
  write_text_file(path, out.str());
}

void write_spectrum_csv(const std::string& path,
                        const std::vector<std::pair<double, double>>& eigenvalues) {
  std::ostringstream out;
  out << "re,im\n";
  for (const auto& [re, im] : eigenvalues) {
    out << format_double(re) << ',' << format_double(im) << '\n';
  }
  write_text_file(path, out.str());
}

void write_snapshot(const std::string& directory, int index, const SystemState& state) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const std::string stem = snapshot_stem(index);
  const auto arrays = state_arrays(state);

  const fs::path bin_path = fs::path(directory) / (stem + ".f64");
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("snapshot: cannot open " + bin_path.string());
  std::uint64_t offset = 0;
  nlohmann::json meta;
  meta["format"] = "float64";
  meta["little_endian"] = true;
  meta["time"] = state.t;
  meta["dim"] = state.grid()->dim();
  meta["cells"] = {state.grid()->cells(0), state.grid()->cells(1), state.grid()->cells(2)};
  meta["arrays"] = nlohmann::json::array();
  for (const auto& a : arrays) {
    bin.write(reinterpret_cast<const char*>(a.data->data()),
              static_cast<std::streamsize>(a.data->size() * sizeof(double)));
    meta["arrays"].push_back({{"name", a.name},
                              {"count", a.data->size()},
                              {"offset_bytes", offset}});
    offset += a.data->size() * sizeof(double);
  }
  bin.close();
  if (!bin) throw std::runtime_error("snapshot: short write to " + bin_path.string());

  const fs::path json_path = fs::path(directory) / (stem + ".json");
  write_text_file(json_path.string(), meta.dump(2) + "\n");
}

SystemState read_snapshot(const std::string& directory, int index, const Grid& grid) {
  namespace fs = std::filesystem;
  const std::string stem = snapshot_stem(index);
  const fs::path json_path = fs::path(directory) / (stem + ".json");
  std::ifstream meta_in(json_path);
  if (!meta_in) throw ConfigError("snapshot: missing sidecar " + json_path.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("snapshot: malformed sidecar " + json_path.string() + ": " + e.what());
  }
  if (meta.value("format", "") != "float64") {
    throw ConfigError("snapshot: unsupported format in " + json_path.string());
  }
  if (meta.value("dim", 0) != grid.dim()) {
    throw ConfigError("snapshot: dimension mismatch in " + json_path.string());
  }

  SystemState state(grid);
  state.t = meta.value("time", 0.0);
  auto arrays = state_arrays(state);

  const fs::path bin_path = fs::path(directory) / (stem + ".f64");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError("snapshot: missing data file " + bin_path.string());
  for (const auto& entry : meta["arrays"]) {
    const std::string name = entry.value("name", "");
    const std::uint64_t count = entry.value("count", std::uint64_t{0});
    const std::uint64_t offset = entry.value("offset_bytes", std::uint64_t{0});
    bool matched = false;
    for (auto& a : arrays) {
      if (a.name != name) continue;
      matched = true;
      if (a.data->size() != count) {
        throw ConfigError("snapshot: array " + name + " has count " + std::to_string(count) +
                          ", grid expects " + std::to_string(a.data->size()));
      }
      bin.seekg(static_cast<std::streamoff>(offset));
      bin.read(reinterpret_cast<char*>(const_cast<double*>(a.data->data())),
               static_cast<std::streamsize>(count * sizeof(double)));
      if (!bin) throw ConfigError("snapshot: truncated data for array " + name);
    }
    if (!matched) throw ConfigError("snapshot: unexpected array " + name);
  }
  state.sync_interface();
  return state;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("io: short write to " + path);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("io: sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path + " for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void write_manifest(const std::string& directory, const std::string& subcommand,
                    const std::string& config_json, std::uint64_t seed,
                    double duration_seconds, const std::vector<ManifestEntry>& entries) {
  namespace fs = std::filesystem;
  nlohmann::json m;
  m["tool"] = "fpi";
  m["version"] = "0.1.0";
  m["subcommand"] = subcommand;
  try {
    m["config"] = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception&) {
    m["config"] = config_json;
  }
  m["seed"] = seed;
  m["duration_seconds"] = duration_seconds;
  m["files"] = nlohmann::json::array();
  for (const auto& e : entries) {
    m["files"].push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  }
  write_text_file((fs::path(directory) / "run_manifest.json").string(), m.dump(2) + "\n");
}

ManifestEntry manifest_entry(const std::string& directory, const std::string& relative_path) {
  namespace fs = std::filesystem;
  const fs::path full = fs::path(directory) / relative_path;
  ManifestEntry e;
  e.path = relative_path;
  e.bytes = static_cast<std::uint64_t>(fs::file_size(full));
  e.sha256 = sha256_file(full.string());
  return e;
}

void write_series_csv(const std::string& path, const std::string& x_name,
                      const std::string& y_name, const std::vector<double>& x,
                      const std::vector<double>& y) {
  std::ostringstream out;
  out << x_name << ',' << y_name << '\n';
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace fpi
