#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "conic/config.hpp"
#include "conic/error.hpp"
#include "conic/io.hpp"

using namespace conic;

namespace {

const char* kSample = R"(# model cone run
experiment.kind = fundamental
metric.circumference = 4*pi   # trailing comment
source.sigma = 0.05
fundamental.times = 0.5, 1, 1.5
grids.X_max=4
)";

}  // namespace

TEST_CASE("Numbers accept pi forms") {
    CHECK(parse_number("2") == 2.0);
    CHECK(parse_number(" 1e-3 ") == 1e-3);
    CHECK(parse_number("pi") == kPi);
    CHECK(parse_number("4pi") == 4 * kPi);
    CHECK(parse_number("4*pi") == 4 * kPi);
    CHECK(parse_number("3*pi/2") == 3 * kPi / 2);
    CHECK(parse_number("-pi/4") == -kPi / 4);
    CHECK(parse_number("2*pi/3") == 2 * kPi / 3);
    CHECK_THROWS_AS(parse_number("pi/0"), ConfigError);
    CHECK_THROWS_AS(parse_number("2x"), ConfigError);
    CHECK_THROWS_AS(parse_number("pie"), ConfigError);
    CHECK_THROWS_AS(parse_number(""), ConfigError);
}

TEST_CASE("Parse, typed access and comments") {
    const Config c = Config::parse(kSample);
    CHECK(c.str("experiment.kind") == "fundamental");
    CHECK(c.num("metric.circumference") == 4 * kPi);
    CHECK(c.num("grids.X_max") == 4.0);
    CHECK(c.list("fundamental.times") == std::vector<double>{0.5, 1.0, 1.5});
    CHECK(c.num("missing.key", 7.0) == 7.0);
    CHECK_THROWS_AS(c.str("missing.key"), ConfigError);
    CHECK(c.integer("grids.X_max", 0) == 4);
    CHECK_THROWS_AS(c.integer("source.sigma", 0), ConfigError);
}

TEST_CASE("Round trip is idempotent and the hash is canonical") {
    const Config c = Config::parse(kSample);
    const std::string once = c.serialize();
    const Config back = Config::parse(once);
    CHECK(back.serialize() == once);
    CHECK(back.values() == c.values());
    CHECK(back.hash() == c.hash());
    CHECK(c.hash().size() == 64);
    // Key order and spacing do not change the canonical form.
    const Config shuffled = Config::parse("grids.X_max = 4\nsource.sigma=0.05\nfundamental.times = 0.5, 1, 1.5\n"
                                          "metric.circumference = 4*pi\nexperiment.kind = fundamental\n");
    CHECK(shuffled.hash() == c.hash());
    Config d = c;
    d.set("source.sigma", "0.06");
    CHECK(d.hash() != c.hash());
}

TEST_CASE("Malformed lines are rejected with their location") {
    try {
        Config::parse("a.b = 1\na.b = 2\n", "dup.cfg");
        FAIL("expected duplicate-key error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("dup.cfg:2") != std::string::npos);
        CHECK(e.exit_code() == 2);
    }
    CHECK_THROWS_AS(Config::parse("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("bad key! = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = \n"), ConfigError);
    CHECK_THROWS_AS(Config::parse(".a = 1\n"), ConfigError);
}

TEST_CASE("Schema rejects unknown kinds, foreign keys and bad tolerances") {
    CHECK_NOTHROW(validate_schema(Config::parse(kSample)));
    try {
        validate_schema(Config::parse("experiment.kind = teleport\n"));
        FAIL("expected unknown kind");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("flow-validation") != std::string::npos);
    }
    CHECK_THROWS_AS(validate_schema(Config::parse("experiment.kind = flow-validation\nsource.sigma = 0.1\n")),
                    ConfigError);
    CHECK_THROWS_AS(validate_schema(Config::parse("experiment.kind = solve\nsolve.typo = 1\n")), ConfigError);
    CHECK_THROWS_AS(validate_schema(Config::parse("experiment.kind = solve\ntolerance.energy_drift = 0\n")),
                    ConfigError);
    CHECK_THROWS_AS(validate_schema(Config::parse("experiment.kind = solve\noutput.format = xml\n")), ConfigError);
    CHECK_THROWS_AS(validate_schema(Config::parse("experiment.kind = solve\nmetric.circumference = -1\n")),
                    std::exception);
    CHECK_THROWS_AS(validate_schema(Config::parse("flow.rays = 3\n")), ConfigError);
    for (const auto& k : experiment_kinds())
        CHECK_NOTHROW(validate_schema(Config::parse("experiment.kind = " + k + "\n")));
}

TEST_CASE("Metric keys build the expected metric") {
    const auto m = metric_from_config(Config::parse("experiment.kind = solve\nmetric.circumference = 4*pi\n"));
    CHECK(m.period() == doctest::Approx(4 * kPi));
    CHECK(m.is_round());
    CHECK(m.is_product());
    const auto t = metric_from_config(Config::parse("metric.h0_samples = 1, 1.2, 1, 0.8\nmetric.x_max = 2\n"));
    CHECK_FALSE(t.is_round());
    CHECK(t.x_max == 2.0);
    const auto p = metric_from_config(
        Config::parse("metric.perturbation = angular\nmetric.perturbation.a = 0.5\nmetric.perturbation.m = 2\n"));
    CHECK_FALSE(p.is_product());
    CHECK_THROWS_AS(metric_from_config(Config::parse("metric.circumference = 1\nmetric.h0_samples = 1, 1, 1, 1\n")),
                    ConfigError);
    CHECK_THROWS_AS(metric_from_config(Config::parse("metric.perturbation.a = 0.5\n")), ConfigError);
    CHECK_THROWS_AS(metric_from_config(Config::parse("metric.perturbation = wobbly\n")), ConfigError);
}

TEST_CASE("Grid perturbation files resolve relative to the config") {
    const auto dir = std::filesystem::temp_directory_path() / "conic_test_config_grid";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    TabulatedFactor f;
    f.nx = 3;
    f.ntheta = 4;
    f.x_max = 1.0;
    f.f.assign(12, 1.0);
    write_factor_grid((dir / "pert.grd").string(), f);
    std::ofstream(dir / "run.cfg") << "experiment.kind = commutators\nmetric.perturbation = grid\n"
                                      "metric.perturbation.file = pert.grd\n";
    const Config c = Config::load((dir / "run.cfg").string());
    CHECK_NOTHROW(validate_schema(c));
    std::ofstream(dir / "missing.cfg") << "metric.perturbation = grid\nmetric.perturbation.file = nope.grd\n";
    CHECK_THROWS_AS(metric_from_config(Config::load((dir / "missing.cfg").string())), ConfigError);
    CHECK_THROWS_AS(Config::load((dir / "absent.cfg").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("Empty list literal") {
    const Config c = Config::parse("regularity.x = none\n");
    CHECK(c.list("regularity.x").empty());
}
