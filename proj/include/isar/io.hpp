#pragma once

// File formats: P2 PGM images, CSV matrices, JSON experiment configs and
// run manifests. Every writer goes through a temporary file and a rename,
// so a partially written file never appears under the target name.

#include "isar/harness.hpp"
#include "isar/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace isar::io {

namespace fs = std::filesystem;

inline constexpr int kPgmMaxValue = 65535;

/// P2 with maxval 65535. Pixels are scaled by 65535 / max(image) and the
/// scale is stored as "# scale <max>" so read_pgm can restore amplitudes.
void write_pgm(const Image& image, const fs::path& path);
Image read_pgm(const fs::path& path);

/// One row per line, comma separated, shortest round-trip decimals.
void write_csv_matrix(const Matrix& m, const fs::path& path);
Matrix read_csv_matrix(const fs::path& path);

void write_text_atomic(const fs::path& path, std::string_view contents);
std::string read_text(const fs::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

ExperimentConfig load_config(const fs::path& path);
ExperimentConfig parse_config(std::string_view json_text);
/// Canonical JSON with every default spelled out.
std::string dump_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const fs::path& path);

struct RunManifest {
    std::string command;
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::string tool_version;
    std::map<std::string, std::string> file_checksums; // file name -> sha256
};

/// Hashes each file's contents and writes the manifest JSON.
void write_manifest(const RunManifest& manifest, const fs::path& path);

inline constexpr std::string_view kToolVersion = "1.0.0";

} // namespace isar::io
