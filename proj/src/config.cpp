#include "conic/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "conic/error.hpp"
#include "conic/io.hpp"

namespace conic {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos) return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    });
}

double parse_plain(const std::string& s, const std::string& whole) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + whole + "'");
    }
    if (used != s.size()) throw ConfigError("not a number: '" + whole + "'");
    return v;
}

const std::vector<std::string> kMetricKeys = {
    "metric.n", "metric.circumference", "metric.h0_samples", "metric.period", "metric.x_max", "metric.fd_order",
    "metric.perturbation", "metric.perturbation.a", "metric.perturbation.m", "metric.perturbation.file"};
const std::vector<std::string> kSourceKeys = {"source.x_bar", "source.theta_bar", "source.sigma",
                                              "grids.X_max", "grids.tol", "grids.margin_sigmas"};

std::map<std::string, std::vector<std::string>> schema() {
    std::map<std::string, std::vector<std::string>> s;
    s["flow-validation"] = {"flow.rays", "flow.s_span", "flow.rtol", "tolerance.closed_form"};
    s["geodesics"] = {"geodesics.circumferences", "geodesics.y", "geodesics.eps", "geodesics.rtol",
                      "tolerance.straightness"};
    s["geodesic-relation"] = {"relation.y", "relation.rays", "relation.t_bar", "tolerance.relation"};
    s["normal-form"] = {"normal_form.example", "normal_form.amplitude", "normal_form.points",
                        "normal_form.rho_max", "tolerance.recovery", "tolerance.cross_term"};
    s["solve"] = {"solve.nu", "solve.X", "solve.T", "solve.K", "solve.nx", "solve.outputs",
                  "tolerance.energy_drift", "tolerance.fd_agreement"};
    s["fundamental"] = {"fundamental.T", "fundamental.times", "fundamental.nx", "fundamental.ntheta",
                        "fundamental.oracle", "fundamental.refine_tols", "fundamental.wall_X",
                        "tolerance.oracle", "tolerance.energy_drift", "tolerance.wall"};
    s["regularity"] = {"regularity.layout", "regularity.T", "regularity.x", "regularity.theta", "regularity.t",
                       "regularity.half_width", "regularity.dt", "regularity.threshold", "regularity.noise_floor",
                       "regularity.smoothing_N", "regularity.shift", "regularity.jump_theta",
                       "tolerance.s_diff_lo", "tolerance.s_diff_hi", "tolerance.gap_lo", "tolerance.gap_hi",
                       "tolerance.smoothing_gain", "tolerance.jump_variation"};
    s["commutators"] = {"commutators.n0", "commutators.levels", "tolerance.order", "tolerance.roundoff",
                        "tolerance.floor"};
    for (const char* k : {"fundamental", "regularity"})
        for (const auto& key : kSourceKeys) s[k].push_back(key);
    return s;
}

}  // namespace

double parse_number(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty number");
    const auto p = s.find("pi");
    if (p == std::string::npos) return parse_plain(s, s);
    // [coef][*]pi[/den]
    std::string coef = trim(s.substr(0, p)), rest = trim(s.substr(p + 2));
    if (!coef.empty() && coef.back() == '*') coef = trim(coef.substr(0, coef.size() - 1));
    double c = 1.0;
    if (coef == "-") c = -1.0;
    else if (coef == "+" || coef.empty()) c = 1.0;
    else c = parse_plain(coef, s);
    double den = 1.0;
    if (!rest.empty()) {
        if (rest.front() != '/') throw ConfigError("not a number: '" + s + "'");
        den = parse_plain(trim(rest.substr(1)), s);
        if (den == 0.0) throw ConfigError("division by zero in '" + s + "'");
    }
    return c * kPi / den;
}

Config Config::parse(const std::string& text, const std::string& origin) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        if (c.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        c.values_[key] = value;
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    Config c = parse(ss.str(), path);
    c.base_dir_ = std::filesystem::absolute(path).parent_path().string();
    return c;
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::string Config::hash() const { return sha256_hex(serialize()); }

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
    values_[key] = trim(value);
}

std::string Config::str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

std::string Config::str(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
}

double Config::num(const std::string& key) const {
    try {
        return parse_number(str(key));
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

double Config::num(const std::string& key, double def) const { return has(key) ? num(key) : def; }

long Config::integer(const std::string& key, long def) const {
    if (!has(key)) return def;
    const double v = num(key);
    if (v != std::floor(v)) throw ConfigError("key '" + key + "' must be an integer");
    return static_cast<long>(v);
}

bool Config::flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = str(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("key '" + key + "' must be true or false");
}

std::vector<double> Config::list(const std::string& key) const {
    std::vector<double> out;
    if (str(key) == "none") return out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_number(item));
        } catch (const ConfigError& e) {
            throw ConfigError("key '" + key + "': " + e.what());
        }
    }
    return out;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& def) const {
    return has(key) ? list(key) : def;
}

std::string Config::path(const std::string& key) const {
    std::filesystem::path p(str(key));
    if (p.is_relative() && !base_dir_.empty()) p = std::filesystem::path(base_dir_) / p;
    return p.string();
}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {"flow-validation", "geodesics",  "geodesic-relation",
                                                   "normal-form",     "solve",      "fundamental",
                                                   "regularity",      "commutators"};
    return kinds;
}

void validate_schema(const Config& c) {
    const std::string kind = c.str("experiment.kind");
    const auto sch = schema();
    const auto it = sch.find(kind);
    if (it == sch.end()) {
        std::string all;
        for (const auto& k : experiment_kinds()) all += (all.empty() ? "" : ", ") + k;
        throw ConfigError("unknown experiment.kind '" + kind + "' (expected one of: " + all + ")");
    }
    std::set<std::string> allowed(it->second.begin(), it->second.end());
    allowed.insert(kMetricKeys.begin(), kMetricKeys.end());
    allowed.insert({"experiment.kind", "experiment.name", "output.dir", "output.format"});
    for (const auto& [k, v] : c.values())
        if (!allowed.count(k)) throw ConfigError("key '" + k + "' is not valid for experiment kind '" + kind + "'");
    for (const auto& [k, v] : c.values())
        if (k.rfind("tolerance.", 0) == 0 && !(c.num(k) > 0))
            throw ConfigError("tolerance '" + k + "' must be positive");
    if (c.has("output.format")) {
        const std::string f = c.str("output.format");
        if (f != "csv" && f != "json") throw ConfigError("output.format must be csv or json");
    }
    metric_from_config(c).validate();
}

ConicMetric metric_from_config(const Config& c) {
    const double x_max = c.num("metric.x_max", 10.0);
    ConicMetric m;
    if (c.has("metric.h0_samples")) {
        if (c.has("metric.circumference"))
            throw ConfigError("metric.circumference and metric.h0_samples are mutually exclusive");
        m = ConicMetric::tabulated(c.list("metric.h0_samples"), x_max, c.num("metric.period", kTwoPi));
    } else {
        if (c.has("metric.period")) throw ConfigError("metric.period requires metric.h0_samples");
        m = ConicMetric::circle(c.num("metric.circumference", kTwoPi), x_max);
    }
    m.n = static_cast<int>(c.integer("metric.n", 2));
    m.fd_order = static_cast<int>(c.integer("metric.fd_order", 2));
    const std::string kind = c.str("metric.perturbation", "none");
    const double a = c.num("metric.perturbation.a", 0.0);
    if (kind == "none") {
        for (const char* k : {"metric.perturbation.a", "metric.perturbation.m", "metric.perturbation.file"})
            if (c.has(k)) throw ConfigError(std::string("key '") + k + "' needs metric.perturbation");
    } else if (kind == "radial") {
        m.perturbation = RadialPower{a};
    } else if (kind == "angular") {
        m.perturbation = AngularPower{a, static_cast<int>(c.integer("metric.perturbation.m", 1))};
    } else if (kind == "grid") {
        m.perturbation = read_factor_grid(c.path("metric.perturbation.file"));
    } else {
        throw ConfigError("metric.perturbation must be none, radial, angular or grid");
    }
    return m;
}

}  // namespace conic
