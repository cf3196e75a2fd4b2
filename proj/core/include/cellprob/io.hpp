#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cellprob/bayescore.hpp"
#include "cellprob/coords.hpp"
#include "cellprob/matrix.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

namespace fs = std::filesystem;

/// Volumes are raw little-endian float32 in C order, described by a JSON
/// sidecar at `<path>.json`: {"shape":[nz,ny,nx], "voxel_size_um":[sz,sy,sx]}.
void write_volume(const fs::path& raw, const Volume3D& v);
Volume3D read_volume(const fs::path& raw);

/// Regressor outputs: `<prefix>_dm.raw`, `<prefix>_ua.raw`, `<prefix>_ue.raw`
/// and one shared sidecar `<prefix>.json`; each map also has its own volume
/// sidecar.
void write_regressor_output(const fs::path& prefix, const RegressorOutput& out);
RegressorOutput read_regressor_output(const fs::path& prefix);

/// CSV with header `z_um,y_um,x_um[,p][,dm_value]`. Optional columns are
/// written when present; on read, unknown columns are ignored.
void write_coords(const fs::path& csv, const CoordSet& c);
CoordSet read_coords(const fs::path& csv);
std::string coords_to_csv(const CoordSet& c);
CoordSet coords_from_csv(std::string_view text);

/// One row per sample, header from `names`.
void write_feature_csv(const fs::path& csv, const FeatureMatrix& X, const std::vector<std::string>& names);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string read_text(const fs::path& p);
void write_text(const fs::path& p, std::string_view text);

/// Lowercase hex SHA-256 of a byte string or a file.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const fs::path& p);

}  // namespace cellprob
