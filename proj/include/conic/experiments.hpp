#pragma once
// Experiment runner: executes a configured experiment, writes its data files
// and a checksummed manifest, and emits gnuplot-ready plot files.

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "conic/config.hpp"
#include "conic/io.hpp"

namespace conic {

/// Pass/fail record: passes when lo <= value <= hi (NaN fails).
struct Criterion {
    std::string id;
    std::string description;
    double value = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool pass = false;
};

Criterion make_criterion(const std::string& id, const std::string& description, double value, double lo, double hi);

struct ExperimentResult {
    std::string kind;
    std::vector<Table> tables;
    std::vector<RawArray> arrays;
    std::vector<Criterion> criteria;
    nlohmann::json info = nlohmann::json::object();  ///< certificates, drifts, derived scalars

    bool passed() const;
    const Table* table(const std::string& name) const;
    const Criterion* criterion(const std::string& id) const;
};

/// Runs the experiment named by `experiment.kind`; no files are written.
ExperimentResult run_experiment(const Config& c);

struct RunManifest {
    std::string kind, name, config_hash, format, version;
    std::vector<FileEntry> files;
    std::vector<Criterion> criteria;
    nlohmann::json info = nlohmann::json::object();
    double wall_seconds = 0;
    bool passed() const;
};

/// Validates the config, runs it, writes data files plus manifest.json into `out_dir`.
/// An existing run directory is cleared first; any other non-empty directory is refused.
RunManifest run(const Config& c, const std::string& out_dir, const std::string& format = "csv");

nlohmann::json manifest_json(const RunManifest& m);
RunManifest read_manifest(const std::string& dir);

/// Verifies checksums, then writes `.dat` columns and `.gp` scripts for every
/// table (snapshots get front overlays) and adds them to the manifest.
RunManifest emit_plots(const std::string& dir);

/// Kind run by a CLI subcommand ("flow" -> "flow-validation", ...); empty if none.
std::string kind_for_subcommand(const std::string& sub);

std::string library_version();

}  // namespace conic
