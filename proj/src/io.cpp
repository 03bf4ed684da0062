#include "conic/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "conic/error.hpp"

namespace conic {

namespace {

std::string to_hex(const unsigned char* d, unsigned n) {
    std::ostringstream os;
    for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(d[i]);
    return os.str();
}

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    auto b = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(b.begin(), b.end());
    return std::bit_cast<T>(b);
}

template <class T>
void put(std::ostream& o, T v) {
    v = to_le(v);
    o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated grid file '" + path + "'");
    return to_le(v);
}

std::string read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IntegrityError("missing file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr) != 1)
        throw IntegrityError("SHA-256 computation failed");
    return to_hex(md, n);
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_all(path)); }

TabulatedFactor read_factor_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read grid file '" + path + "'");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "CONICGRD", 8) != 0)
        throw ConfigError("grid file '" + path + "' lacks the CONICGRD header");
    const auto version = get<std::uint32_t>(in, path);
    if (version != 1) throw ConfigError("grid file '" + path + "' has unsupported version " + std::to_string(version));
    TabulatedFactor f;
    f.nx = get<std::uint32_t>(in, path);
    f.ntheta = get<std::uint32_t>(in, path);
    f.x_max = get<double>(in, path);
    if (f.nx < 2 || f.ntheta < 4 || !(f.x_max > 0)) throw ConfigError("grid file '" + path + "' has invalid dimensions");
    f.f.resize(f.nx * f.ntheta);
    for (double& v : f.f) v = get<double>(in, path);
    if (in.peek() != std::char_traits<char>::eof()) throw ConfigError("grid file '" + path + "' has trailing bytes");
    return f;
}

void write_factor_grid(const std::string& path, const TabulatedFactor& f) {
    if (f.f.size() != f.nx * f.ntheta) throw ConfigError("grid values do not match nx * ntheta");
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ConfigError("cannot write grid file '" + path + "'");
    o.write("CONICGRD", 8);
    put<std::uint32_t>(o, 1);
    put<std::uint32_t>(o, static_cast<std::uint32_t>(f.nx));
    put<std::uint32_t>(o, static_cast<std::uint32_t>(f.ntheta));
    put<double>(o, f.x_max);
    for (double v : f.f) put<double>(o, v);
}

std::vector<std::string> write_raw_array(const std::string& dir, const RawArray& a) {
    std::size_t n = 1;
    for (auto s : a.shape) n *= s;
    if (n != a.data.size()) throw ConfigError("array '" + a.name + "' shape does not match its data");
    const std::string bin = a.name + ".f64", meta = a.name + ".json";
    {
        std::ofstream o(std::filesystem::path(dir) / bin, std::ios::binary);
        for (double v : a.data) put<double>(o, v);
    }
    nlohmann::json j;
    j["name"] = a.name;
    j["dtype"] = "float64";
    j["byte_order"] = "little";
    j["shape"] = a.shape;
    j["axes"] = a.axes;
    j["units"] = a.units;
    j["order"] = "row-major";
    std::ofstream(std::filesystem::path(dir) / meta) << j.dump(2) << "\n";
    return {bin, meta};
}

RawArray read_raw_array(const std::string& dir, const std::string& name) {
    const auto meta = nlohmann::json::parse(read_all((std::filesystem::path(dir) / (name + ".json")).string()));
    RawArray a;
    a.name = name;
    a.shape = meta.at("shape").get<std::vector<std::size_t>>();
    a.axes = meta.at("axes").get<std::vector<std::string>>();
    a.units = meta.at("units").get<std::string>();
    const std::string bytes = read_all((std::filesystem::path(dir) / (name + ".f64")).string());
    std::size_t n = 1;
    for (auto s : a.shape) n *= s;
    if (bytes.size() != 8 * n) throw IntegrityError("array '" + name + "' has " + std::to_string(bytes.size()) +
                                                    " bytes, expected " + std::to_string(8 * n));
    a.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v;
        std::memcpy(&v, bytes.data() + 8 * i, 8);
        a.data[i] = to_le(v);
    }
    return a;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_csv(const std::string& path, const Table& t) {
    std::ofstream o(path);
    if (!o) throw ConfigError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < t.columns.size(); ++i) o << (i ? "," : "") << t.columns[i];
    o << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << format_double(r[i]);
        o << "\n";
    }
}

FileEntry file_entry(const std::string& dir, const std::string& name) {
    const std::string bytes = read_all((std::filesystem::path(dir) / name).string());
    return {name, sha256_hex(bytes), bytes.size()};
}

void verify_files(const std::string& dir, const std::vector<FileEntry>& files) {
    for (const auto& f : files) {
        const auto p = std::filesystem::path(dir) / f.name;
        if (!std::filesystem::exists(p)) throw IntegrityError("file '" + f.name + "' listed in the manifest is missing");
        const std::string got = sha256_file(p.string());
        if (got != f.sha256)
            throw IntegrityError("checksum mismatch for '" + f.name + "': manifest " + f.sha256 + ", found " + got);
    }
}

}  // namespace conic
