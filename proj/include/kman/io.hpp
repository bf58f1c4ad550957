#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "kman/manifold.hpp"

namespace kman::io {

namespace fs = std::filesystem;

/// Binary matrix layout, all little-endian:
///   bytes 0-3   magic "KMSN"
///   bytes 4-7   uint32 format version (1)
///   bytes 8-15  uint64 rows
///   bytes 16-23 uint64 cols
///   then rows * cols float64 values, column-major.
inline constexpr char kMagic[4] = {'K', 'M', 'S', 'N'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;

void write_matrix(const fs::path& path, const Matrix& a);
Matrix read_matrix(const fs::path& path);

/// Writes `<path>` in the binary layout and `<path>.json` with labels and scaling.
void write_snapshots(const fs::path& path, const SnapshotSet& snapshots);
SnapshotSet read_snapshots(const fs::path& path);

fs::path sidecar_path(const fs::path& path);

/// Lowercase hex SHA-256 of a file's bytes, or of several files concatenated in order.
std::string sha256_file(const fs::path& path);
std::string sha256_files(const std::vector<fs::path>& paths);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

nlohmann::json to_json(const OffsetChoice& offset);
OffsetChoice offset_from_json(const nlohmann::json& j);

/// Directory with manifest.json plus offset.bin, v.bin, v_bar.bin, singular_values.bin and
/// omega.bin + train_inputs.bin (kernel) or xi.bin (feature map). `extra` is merged into
/// the manifest (e.g. the training config). The manifest carries no timestamps.
void save_manifold(const fs::path& dir, const TrainedManifold& manifold,
                   const nlohmann::json& extra = nlohmann::json::object());
TrainedManifold load_manifold(const fs::path& dir);

}  // namespace kman::io
