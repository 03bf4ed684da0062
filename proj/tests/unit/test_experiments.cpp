#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "conic/error.hpp"
#include "conic/experiments.hpp"

using namespace conic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("conic_test_exp_" + name);
    fs::remove_all(d);
    return d;
}

std::set<std::string> dir_files(const fs::path& d) {
    std::set<std::string> out;
    for (const auto& e : fs::directory_iterator(d)) out.insert(e.path().filename().string());
    return out;
}

std::set<std::string> manifest_names(const RunManifest& m) {
    std::set<std::string> out{"manifest.json"};
    for (const auto& f : m.files) out.insert(f.name);
    return out;
}

std::vector<std::vector<std::string>> dat_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> r;
        std::istringstream ls(line);
        for (std::string w; ls >> w;) r.push_back(w);
        rows.push_back(r);
    }
    return rows;
}

const char* kSmallFundamental =
    "experiment.kind = fundamental\nmetric.circumference = pi\nsource.sigma = 0.1\nfundamental.T = 1\n"
    "fundamental.times = 0.5, 1\nfundamental.nx = 48\nfundamental.ntheta = 32\ngrids.X_max = 3\n";

}  // namespace

TEST_CASE("Criteria pass exactly inside their bounds") {
    CHECK(make_criterion("a", "", 1.0, 0.0, 1.0).pass);
    CHECK_FALSE(make_criterion("a", "", 1.0000001, 0.0, 1.0).pass);
    CHECK_FALSE(make_criterion("a", "", std::nan(""), 0.0, 1.0).pass);
    CHECK(make_criterion("a", "", 5.0, 1.0, std::numeric_limits<double>::infinity()).pass);
}

TEST_CASE("Subcommands map to experiment kinds") {
    CHECK(kind_for_subcommand("flow") == "flow-validation");
    CHECK(kind_for_subcommand("relation") == "geodesic-relation");
    CHECK(kind_for_subcommand("normal-form") == "normal-form");
    CHECK(kind_for_subcommand("validate").empty());
}

TEST_CASE("Flow run: manifest is complete and the run is byte-reproducible") {
    const auto a = scratch("flow_a"), b = scratch("flow_b");
    const Config c = Config::parse("experiment.kind = flow-validation\nflow.rays = 8\n");
    run(c, a.string());
    const auto ma = emit_plots(a.string());
    CHECK(ma.passed());
    CHECK(ma.config_hash == c.hash());
    CHECK(dir_files(a) == manifest_names(ma));
    run(c, b.string());
    const auto mb = emit_plots(b.string());
    REQUIRE(ma.files.size() == mb.files.size());
    for (std::size_t i = 0; i < ma.files.size(); ++i) {
        CHECK(ma.files[i].name == mb.files[i].name);
        CHECK(ma.files[i].sha256 == mb.files[i].sha256);
    }
    // Saved config reproduces the input.
    CHECK(Config::load((a / "config.cfg").string()).hash() == c.hash());
    // Manifest read back.
    const auto back = read_manifest(a.string());
    CHECK(back.files.size() == ma.files.size());
    CHECK(back.criteria.size() == ma.criteria.size());
    CHECK(back.criteria[0].value == ma.criteria[0].value);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("Output directory handling") {
    const auto d = scratch("dirs");
    const Config c = Config::parse("experiment.kind = geodesic-relation\nrelation.rays = 4\n");
    run(c, d.string());
    std::ofstream(d / "stale.csv") << "x";
    run(c, d.string());
    CHECK_FALSE(fs::exists(d / "stale.csv"));
    const auto other = scratch("foreign");
    fs::create_directories(other);
    std::ofstream(other / "notes.txt") << "keep me";
    CHECK_THROWS_AS(run(c, other.string()), ConfigError);
    CHECK(fs::exists(other / "notes.txt"));
    CHECK_THROWS_AS(run(c, d.string(), "xml"), ConfigError);
    fs::remove_all(d);
    fs::remove_all(other);
}

TEST_CASE("Causal margin violations are refused with their own exit code") {
    const Config c = Config::parse(
        "experiment.kind = fundamental\nsource.x_bar = 1\nsource.sigma = 0.05\ngrids.X_max = 3\nfundamental.T = 2\n");
    const auto d = scratch("causal");
    try {
        run(c, d.string());
        FAIL("expected causal refusal");
    } catch (const CausalityError& e) {
        CHECK(e.exit_code() == 7);
        CHECK(std::string(e.what()).find("suggested X_max") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(d / "manifest.json"));
    CHECK_THROWS_AS(run_experiment(Config::parse("experiment.kind = solve\nsolve.X = 2\nsolve.T = 1\n")),
                    CausalityError);
}

TEST_CASE("Fundamental run: snapshots at requested times with both overlay loci") {
    const auto d = scratch("fund");
    const Config c = Config::parse(kSmallFundamental);
    run(c, d.string(), "json");
    const auto m = emit_plots(d.string());
    CHECK(m.passed());
    CHECK(dir_files(d) == manifest_names(m));
    for (const char* n : {"snapshot_0", "snapshot_1"}) {
        const auto a = read_raw_array(d.string(), n);
        CHECK(a.shape == std::vector<std::size_t>{48, 32});
        CHECK(fs::exists(d / (std::string(n) + ".gp")));
        const auto fronts = dat_rows(d / (std::string(n) + "_fronts.dat"));
        CHECK_FALSE(fronts.empty());
        for (const auto& r : fronts) CHECK(r.size() == 4);
    }
    // Diffracted locus radius t - x_bar is nan before the front leaves the tip.
    const auto f1 = dat_rows(d / "snapshot_1_fronts.dat");
    CHECK(f1.front()[2] == "nan");
    const auto cert = m.info["certificate"];
    CHECK(cert["terms"].get<int>() > 0);
    bool has_oracle = false;
    for (const auto& cr : m.criteria) has_oracle = has_oracle || cr.id == "image_oracle";
    CHECK(has_oracle);
    fs::remove_all(d);
}

TEST_CASE("Plot emission detects tampered data") {
    const auto d = scratch("tamper");
    run(Config::parse("experiment.kind = flow-validation\nflow.rays = 4\n"), d.string());
    std::ofstream(d / "rays.csv", std::ios::app) << "9,9,9,9,9,9,9\n";
    try {
        emit_plots(d.string());
        FAIL("expected integrity error");
    } catch (const IntegrityError& e) {
        CHECK(std::string(e.what()).find("rays.csv") != std::string::npos);
    }
    fs::remove(d / "rays.csv");
    CHECK_THROWS_AS(emit_plots(d.string()), IntegrityError);
    fs::remove_all(d);
}

TEST_CASE("Regularity plot columns match the report row for row") {
    const auto d = scratch("reg");
    const Config c = Config::parse(
        "experiment.kind = regularity\nregularity.layout = probes\nsource.sigma = 0.05\ngrids.X_max = 4\n"
        "regularity.T = 2\nregularity.x = 0.5, 1.5\nregularity.theta = 0, pi\nregularity.t = 0.5, 1.5\n");
    run(c, d.string(), "json");
    emit_plots(d.string());
    std::ifstream in(d / "regularity.json");
    const auto j = nlohmann::json::parse(in);
    const auto rows = dat_rows(d / "regularity.dat");
    REQUIRE(rows.size() == j["rows"].size());
    REQUIRE(rows.size() == 8);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k : {1u, 3u, 4u, 5u}) {
            const auto& v = j["rows"][i][k];
            if (v.is_number()) CHECK(std::stod(rows[i][k]) == v.get<double>());
            else CHECK(rows[i][k] == v.get<std::string>());
        }
    fs::remove_all(d);
}

TEST_CASE("Empty probe set gives empty but well-formed outputs") {
    const auto d = scratch("empty");
    const Config c = Config::parse("experiment.kind = regularity\nregularity.layout = probes\nregularity.x = none\n");
    const auto m = run(c, d.string(), "csv");
    CHECK(m.passed());
    std::ifstream in(d / "regularity.csv");
    std::string header, extra;
    std::getline(in, header);
    CHECK(header.rfind("t,x,theta,s,ci_low,ci_high", 0) == 0);
    CHECK_FALSE(std::getline(in, extra));
    const auto p = emit_plots(d.string());
    CHECK(dir_files(d) == manifest_names(p));
    CHECK(dat_rows(d / "regularity.dat").empty());
    fs::remove_all(d);
}

TEST_CASE("Experiments report failing criteria honestly") {
    const auto r = run_experiment(
        Config::parse("experiment.kind = flow-validation\nflow.rays = 2\ntolerance.closed_form = 1e-300\n"));
    CHECK_FALSE(r.passed());
    CHECK_FALSE(r.criterion("flow_closed_form")->pass);
}

TEST_CASE("Closed-form flow needs a round product cone") {
    CHECK_THROWS_AS(run_experiment(Config::parse("experiment.kind = flow-validation\nmetric.perturbation = radial\n"
                                                 "metric.perturbation.a = 0.1\n")),
                    DomainError);
}
