// conelab: experiment runner for waves on cones.
//
//   conelab <subcommand> --config run.cfg [--out DIR] [--format csv|json] [--no-plots]
//   conelab validate [--only 1,4,9] [--out DIR]
//
// Exit status: 0 all criteria pass, 1 some criterion failed, 2-9 library
// error classes (see error.hpp), 10 unexpected failure. Errors are also
// reported as a one-line JSON record on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "conic/acceptance.hpp"
#include "conic/error.hpp"
#include "conic/experiments.hpp"

namespace {

constexpr int kCriteriaFailed = 1;
constexpr int kUnexpected = 10;

int report_error(const std::string& kind, int code, const std::string& msg) {
    nlohmann::json j{{"error", kind}, {"exit_code", code}, {"message", msg}};
    std::cerr << j.dump() << "\n";
    return code;
}

struct RunArgs {
    std::string config, out, format;
    bool no_plots = false;
};

int run_kind(const std::string& sub, const RunArgs& a) {
    conic::Config c = conic::Config::load(a.config);
    const std::string kind = conic::kind_for_subcommand(sub);
    if (!c.has("experiment.kind")) c.set("experiment.kind", kind);
    if (c.str("experiment.kind") != kind)
        throw conic::ConfigError("config declares experiment.kind = " + c.str("experiment.kind") +
                                 " but the subcommand runs " + kind);
    // Output directory: --out, then CONELAB_OUT, then output.dir, then runs/<name>.
    std::string out = a.out;
    if (out.empty())
        if (const char* env = std::getenv("CONELAB_OUT")) out = env;
    if (out.empty() && c.has("output.dir")) out = c.path("output.dir");
    if (out.empty()) out = "runs/" + c.str("experiment.name", kind);
    const std::string format = !a.format.empty() ? a.format : c.str("output.format", "csv");
    conic::RunManifest m = conic::run(c, out, format);
    if (!a.no_plots) m = conic::emit_plots(out);
    for (const auto& cr : m.criteria)
        std::cout << (cr.pass ? "PASS  " : "FAIL  ") << cr.id << "  " << conic::format_double(cr.value) << "  in ["
                  << conic::format_double(cr.lo) << ", " << conic::format_double(cr.hi) << "]  " << cr.description
                  << "\n";
    std::cout << "manifest: " << (std::filesystem::path(out) / "manifest.json").string() << "\n";
    return m.passed() ? 0 : kCriteriaFailed;
}

int validate(const std::vector<int>& only, const std::string& out) {
    conic::AcceptanceOptions o;
    o.only = only;
    const auto lines = conic::run_acceptance(o, [](const conic::AcceptanceLine& l) {
        std::cout << conic::format_line(l) << std::endl;
    });
    bool ok = true;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& l : lines) {
        ok = ok && l.pass;
        j.push_back({{"id", l.id}, {"title", l.title}, {"pass", l.pass}, {"detail", l.detail},
                     {"seconds", l.seconds}, {"budget_seconds", l.budget}});
    }
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream(std::filesystem::path(out) / "acceptance.json") << j.dump(2) << "\n";
    }
    return ok ? 0 : kCriteriaFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conelab: waves, geodesics and diffraction on cones"};
    app.require_subcommand(1);
    app.set_version_flag("--version", conic::library_version());
    RunArgs args;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"flow", "bicharacteristic flow vs the model-cone closed form"},
        {"geodesics", "developing-map straightness and near-miss deflection"},
        {"relation", "geometric continuations and the diffraction relation"},
        {"normal-form", "collar normal-form recovery"},
        {"solve", "single-mode spectral and finite-difference evolution"},
        {"fundamental", "mollified fundamental solution with exact oracles"},
        {"regularity", "local Sobolev regularity along fronts"},
        {"commutators", "commutator residual convergence study"}};
    for (const auto& [name, help] : subs) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", args.config, "experiment config file")->required()->check(CLI::ExistingFile);
        s->add_option("--out", args.out, "output directory (overrides CONELAB_OUT and output.dir)");
        s->add_option("--format", args.format, "table format")->check(CLI::IsMember({"csv", "json"}));
        s->add_flag("--no-plots", args.no_plots, "skip gnuplot column files and scripts");
    }
    std::vector<int> only;
    std::string vout;
    auto* v = app.add_subcommand("validate", "run the acceptance suite");
    v->add_option("--only", only, "criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 13));
    v->add_option("--out", vout, "directory for acceptance.json");
    // Accepted for uniformity with the other subcommands.
    v->add_option("--config", args.config, "unused")->check(CLI::ExistingFile);
    v->add_option("--format", args.format, "unused")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return report_error("usage", 2, e.what());
    }
    try {
        if (v->parsed()) return validate(only, vout);
        for (const auto& [name, help] : subs)
            if (app.got_subcommand(name)) return run_kind(name, args);
    } catch (const conic::Error& e) {
        return report_error(e.kind(), e.exit_code(), e.what());
    } catch (const std::exception& e) {
        return report_error("internal", kUnexpected, e.what());
    }
    return kUnexpected;
}
