#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "conic/error.hpp"
#include "conic/io.hpp"

using namespace conic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("conic_test_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("SHA-256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("Grid file round trip and header checks") {
    const auto d = scratch("grid");
    TabulatedFactor f;
    f.nx = 5;
    f.ntheta = 8;
    f.x_max = 1.25;
    for (std::size_t i = 0; i < 40; ++i) f.f.push_back(std::sin(0.37 * static_cast<double>(i)));
    const auto p = (d / "a.grd").string();
    write_factor_grid(p, f);
    CHECK(fs::file_size(p) == 8 + 4 + 4 + 4 + 8 + 40 * 8);
    const auto g = read_factor_grid(p);
    CHECK(g.nx == 5);
    CHECK(g.ntheta == 8);
    CHECK(g.x_max == 1.25);
    CHECK(g.f == f.f);
    // Bad magic.
    std::string bytes;
    {
        std::ifstream in(p, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(d / "bad.grd", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_factor_grid((d / "bad.grd").string()), ConfigError);
    // Truncated and padded files.
    std::ofstream(d / "short.grd", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_AS(read_factor_grid((d / "short.grd").string()), ConfigError);
    std::ofstream(d / "long.grd", std::ios::binary) << bytes << "xx";
    CHECK_THROWS_AS(read_factor_grid((d / "long.grd").string()), ConfigError);
    // Unsupported version.
    std::string v2 = bytes;
    v2[8] = 2;
    std::ofstream(d / "v2.grd", std::ios::binary) << v2;
    CHECK_THROWS_AS(read_factor_grid((d / "v2.grd").string()), ConfigError);
    f.f.pop_back();
    CHECK_THROWS_AS(write_factor_grid((d / "c.grd").string(), f), ConfigError);
    fs::remove_all(d);
}

TEST_CASE("Raw arrays are bit-exact little-endian float64 with a sidecar") {
    const auto d = scratch("raw");
    RawArray a;
    a.name = "field";
    a.shape = {3, 2};
    a.axes = {"x in [0, 1]", "theta in [0, 2 pi)"};
    a.units = "dimensionless";
    a.data = {0.1, -2.5e-300, std::numeric_limits<double>::infinity(), 1.0 / 3.0, -0.0, 6.02e23};
    const auto files = write_raw_array(d.string(), a);
    CHECK(files == std::vector<std::string>{"field.f64", "field.json"});
    CHECK(fs::file_size(d / "field.f64") == 48);
    {
        // First value, byte by byte, least significant first.
        std::ifstream in(d / "field.f64", std::ios::binary);
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
        double v;
        std::memcpy(&v, &bits, 8);
        CHECK(v == 0.1);
    }
    const auto back = read_raw_array(d.string(), "field");
    CHECK(back.shape == a.shape);
    CHECK(back.axes == a.axes);
    CHECK(back.units == a.units);
    CHECK(std::memcmp(back.data.data(), a.data.data(), 48) == 0);
    fs::resize_file(d / "field.f64", 40);
    CHECK_THROWS_AS(read_raw_array(d.string(), "field"), IntegrityError);
    a.shape = {4, 2};
    CHECK_THROWS_AS(write_raw_array(d.string(), a), ConfigError);
    fs::remove_all(d);
}

TEST_CASE("CSV uses 17 digits and spells out non-finite values") {
    const auto d = scratch("csv");
    Table t{"t", {"a", "b"}, {{0.1, std::numeric_limits<double>::quiet_NaN()},
                              {-std::numeric_limits<double>::infinity(), 1e-300}}};
    write_csv((d / "t.csv").string(), t);
    std::ifstream in(d / "t.csv");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text == "a,b\n0.10000000000000001,nan\n-inf,1e-300\n");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    fs::remove_all(d);
}

TEST_CASE("Checksum verification names the offending file") {
    const auto d = scratch("verify");
    std::ofstream(d / "a.txt") << "alpha";
    std::ofstream(d / "b.txt") << "beta";
    const std::vector<FileEntry> files = {file_entry(d.string(), "a.txt"), file_entry(d.string(), "b.txt")};
    CHECK(files[0].bytes == 5);
    CHECK_NOTHROW(verify_files(d.string(), files));
    std::ofstream(d / "b.txt") << "BETA";
    try {
        verify_files(d.string(), files);
        FAIL("expected checksum mismatch");
    } catch (const IntegrityError& e) {
        CHECK(std::string(e.what()).find("b.txt") != std::string::npos);
        CHECK(std::string(e.what()).find("checksum mismatch") != std::string::npos);
        CHECK(e.exit_code() == 8);
    }
    fs::remove(d / "a.txt");
    CHECK_THROWS_AS(verify_files(d.string(), files), IntegrityError);
    fs::remove_all(d);
}
