#pragma once
// Persistence: SHA-256 checksums, the binary perturbation-grid format,
// little-endian float64 arrays with JSON sidecars, CSV tables and manifests.

#include <string>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Grid file: "CONICGRD", u32 version (1), u32 nx, u32 ntheta, f64 x_max, then
/// nx * ntheta f64 values of f, row-major in x. All little-endian.
TabulatedFactor read_factor_grid(const std::string& path);
void write_factor_grid(const std::string& path, const TabulatedFactor& f);

struct RawArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<std::string> axes;  ///< one label per dimension, e.g. "x in [0, 4]"
    std::string units;
    std::vector<double> data;
};

/// Writes `<name>.f64` and `<name>.json`; returns both file names.
std::vector<std::string> write_raw_array(const std::string& dir, const RawArray& a);
RawArray read_raw_array(const std::string& dir, const std::string& name);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Deterministic CSV (17 significant digits, "inf"/"nan" spelled out).
void write_csv(const std::string& path, const Table& t);
std::string format_double(double v);

struct FileEntry {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

/// Adds a checksum entry for `dir/name`.
FileEntry file_entry(const std::string& dir, const std::string& name);
/// Throws IntegrityError naming the first missing file or checksum mismatch.
void verify_files(const std::string& dir, const std::vector<FileEntry>& files);

}  // namespace conic
