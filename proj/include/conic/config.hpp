#pragma once
// Experiment configuration: a flat `key = value` file with dotted keys,
// canonical serialization and per-kind schema validation.

#include <map>
#include <string>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

class Config {
public:
    /// Parses `key = value` lines; `#` starts a comment; duplicate keys are rejected.
    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config load(const std::string& path);

    /// Sorted `key = value` lines; parse(serialize()) reproduces the config.
    std::string serialize() const;
    /// SHA-256 of the canonical serialization, hex encoded.
    std::string hash() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);
    void erase(const std::string& key) { values_.erase(key); }
    const std::map<std::string, std::string>& values() const { return values_; }
    /// Directory of the file the config was loaded from (for relative paths).
    const std::string& base_dir() const { return base_dir_; }

    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& def) const;
    double num(const std::string& key) const;
    double num(const std::string& key, double def) const;
    long integer(const std::string& key, long def) const;
    bool flag(const std::string& key, bool def) const;
    /// Comma-separated numbers; the literal "none" is the empty list.
    std::vector<double> list(const std::string& key) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& def) const;
    /// Path value resolved against base_dir().
    std::string path(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
    std::string base_dir_;
};

/// Number with optional `pi` factor: "2", "1e-3", "pi", "4pi", "3*pi/2", "-pi/4".
double parse_number(const std::string& s);

/// Experiment kinds accepted by `experiment.kind`.
const std::vector<std::string>& experiment_kinds();

/// Checks `experiment.kind` and rejects keys outside the kind's schema.
void validate_schema(const Config& c);

/// Metric from the `metric.*` keys.
ConicMetric metric_from_config(const Config& c);

}  // namespace conic
