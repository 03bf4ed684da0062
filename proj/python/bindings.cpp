// Python bindings: configs and runs, flow, geodesic relation, special
// functions, the fundamental solution and the regularity estimator.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conic/acceptance.hpp"
#include "conic/error.hpp"
#include "conic/experiments.hpp"
#include "conic/flow.hpp"
#include "conic/geometry.hpp"
#include "conic/microlocal.hpp"
#include "conic/spectral.hpp"

namespace py = pybind11;
using namespace conic;

namespace {

py::dict criterion_dict(const Criterion& c) {
    py::dict d;
    d["id"] = c.id;
    d["description"] = c.description;
    d["value"] = c.value;
    d["lo"] = c.lo;
    d["hi"] = c.hi;
    d["pass"] = c.pass;
    return d;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

/// Result as {kind, passed, criteria, tables: {name: {columns, rows}}, info}.
py::dict result_dict(const ExperimentResult& r) {
    py::dict d;
    d["kind"] = r.kind;
    d["passed"] = r.passed();
    py::list crit;
    for (const auto& c : r.criteria) crit.append(criterion_dict(c));
    d["criteria"] = crit;
    py::dict tables;
    for (const auto& t : r.tables) {
        py::array_t<double> rows({t.rows.size(), t.columns.size()});
        auto v = rows.mutable_unchecked<2>();
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            for (std::size_t k = 0; k < t.columns.size(); ++k) v(i, k) = t.rows[i][k];
        py::dict td;
        td["columns"] = t.columns;
        td["rows"] = rows;
        tables[py::str(t.name)] = td;
    }
    d["tables"] = tables;
    d["info"] = json_to_py(r.info);
    return d;
}

py::array_t<double> snapshot_array(const WaveState& w, double t, std::size_t nx, std::size_t ntheta, double X) {
    PolarGrid g;
    g.nx = nx;
    g.ntheta = ntheta;
    g.dx = (X > 0 ? X : w.X) / static_cast<double>(nx - 1);
    g.period = w.L;
    const Field2D f = w.snapshot(t, g);
    py::array_t<double> out({nx, ntheta});
    std::copy(f.v.begin(), f.v.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_conelab, m) {
    m.doc() = "Waves, geodesics and diffraction on cones";
    m.attr("__version__") = library_version();

    // Error classes keep their CLI exit codes as `exit_code`.
    py::exception<Error>(m, "ConicError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object type = py::module_::import("conelab._conelab").attr("ConicError");
            py::object err = type(e.what());
            err.attr("exit_code") = e.exit_code();
            err.attr("kind") = e.kind();
            PyErr_SetObject(type.ptr(), err.ptr());
        }
    });

    // ------------------------------------------------------------ config and runs
    py::class_<Config>(m, "Config")
        .def_static("parse", &Config::parse, py::arg("text"), py::arg("origin") = "<config>")
        .def_static("load", &Config::load, py::arg("path"))
        .def("serialize", &Config::serialize)
        .def("hash", &Config::hash)
        .def("has", &Config::has)
        .def("set", &Config::set)
        .def("get", [](const Config& c, const std::string& k) { return c.str(k); })
        .def("values", &Config::values)
        .def("validate", [](const Config& c) { validate_schema(c); });

    m.def("experiment_kinds", &experiment_kinds);
    m.def("run_experiment", [](const Config& c) { return result_dict(run_experiment(c)); }, py::arg("config"),
          "Run an experiment in memory; returns criteria, tables (numpy) and info.");
    m.def(
        "run",
        [](const Config& c, const std::string& out, const std::string& format, bool plots) {
            RunManifest man = run(c, out, format);
            if (plots) man = emit_plots(out);
            return json_to_py(manifest_json(man));
        },
        py::arg("config"), py::arg("out_dir"), py::arg("format") = "csv", py::arg("plots") = true,
        "Run and persist; returns the manifest as a dict.");
    m.def("emit_plots", [](const std::string& dir) { return json_to_py(manifest_json(emit_plots(dir))); });
    m.def(
        "validate",
        [](std::vector<int> only) {
            AcceptanceOptions o;
            o.only = std::move(only);
            py::list out;
            for (const auto& l : run_acceptance(o)) {
                py::dict d;
                d["id"] = l.id;
                d["title"] = l.title;
                d["pass"] = l.pass;
                d["detail"] = l.detail;
                d["seconds"] = l.seconds;
                d["line"] = format_line(l);
                out.append(d);
            }
            return out;
        },
        py::arg("only") = std::vector<int>{}, "Run acceptance criteria (all when `only` is empty).");

    // ------------------------------------------------------------ geometry and flow
    py::class_<ConicMetric>(m, "ConicMetric")
        .def_static("circle", &ConicMetric::circle, py::arg("L"), py::arg("x_max") = 10.0)
        .def_static("tabulated", &ConicMetric::tabulated, py::arg("h0"), py::arg("x_max") = 10.0,
                    py::arg("period") = kTwoPi)
        .def("period", &ConicMetric::period)
        .def("h0", &ConicMetric::h0)
        .def("is_round", &ConicMetric::is_round)
        .def("is_product", &ConicMetric::is_product)
        .def_readwrite("x_max", &ConicMetric::x_max);

    m.def(
        "integrate_flow",
        [](const ConicMetric& g, std::array<double, 6> q0, double s_span, double rtol, bool stop_at_exit) {
            FlowOptions o;
            o.rtol = o.atol = rtol;
            o.stop_at_exit = stop_at_exit;
            const auto seg = integrate_flow(g, EdgeCovector::from_array(q0), s_span, o);
            py::array_t<double> s(seg.s.size()), q({seg.q.size(), std::size_t{6}});
            auto qv = q.mutable_unchecked<2>();
            for (std::size_t i = 0; i < seg.s.size(); ++i) {
                s.mutable_at(i) = seg.s[i];
                const auto a = seg.q[i].array();
                for (int k = 0; k < 6; ++k) qv(i, k) = a[k];
            }
            py::dict d;
            d["s"] = s;
            d["q"] = q;
            d["end"] = endpoint_name(seg.end);
            d["p_drift"] = seg.p_drift;
            return d;
        },
        py::arg("metric"), py::arg("q0"), py::arg("s_span"), py::arg("rtol") = 1e-10, py::arg("stop_at_exit") = true,
        "Bicharacteristic from q0 = (t, x, y, lambda, xi, eta); q columns in the same order.");
    m.def(
        "characteristic_covector",
        [](const ConicMetric& g, double t, double x, double y, double xi, double eta, int sign) {
            return characteristic_covector(g, t, x, y, xi, eta, sign).array();
        },
        py::arg("metric"), py::arg("t"), py::arg("x"), py::arg("y"), py::arg("xi"), py::arg("eta"),
        py::arg("lambda_sign") = 1);
    m.def("geometric_continuations", &geometric_continuations, py::arg("metric"), py::arg("y"));
    m.def(
        "near_miss_deflection",
        [](const ConicMetric& g, double y, double eps) {
            const auto r = near_miss_deflection(g, y, eps);
            py::dict d;
            d["exit_theta"] = r.exit_theta;
            d["closest_x"] = r.closest_x;
            d["inconclusive"] = r.inconclusive;
            return d;
        },
        py::arg("metric"), py::arg("y"), py::arg("eps"));
    m.def(
        "indicial_nu",
        [](const ConicMetric& g, int J) {
            std::vector<double> out;
            for (const auto& d : indicial_data(g, J)) out.push_back(d.nu);
            return out;
        },
        py::arg("metric"), py::arg("J_max"));

    // ------------------------------------------------------------ special functions and waves
    m.def("bessel_j", &bessel_j, py::arg("nu"), py::arg("z"), py::arg("tol") = 1e-14);
    m.def("bessel_zeros", &bessel_zeros, py::arg("nu"), py::arg("k"));

    py::class_<WaveState>(m, "WaveState")
        .def_readonly("L", &WaveState::L)
        .def_readonly("X", &WaveState::X)
        .def("terms", &WaveState::terms)
        .def("value", &WaveState::value, py::arg("t"), py::arg("x"), py::arg("theta"))
        .def("time_series", &WaveState::time_series, py::arg("x"), py::arg("theta"), py::arg("ts"))
        .def("snapshot", &snapshot_array, py::arg("t"), py::arg("nx"), py::arg("ntheta"), py::arg("X") = 0.0,
             "Field on x in [0, X] (default the wall) by theta in [0, L).")
        .def("mode_energies", &WaveState::mode_energies)
        .def("time_shifted", &WaveState::time_shifted)
        .def_property_readonly("certificate", [](const WaveState& w) {
            py::dict d;
            d["j_max"] = w.cert.j_max;
            d["mu_max"] = w.cert.mu_max;
            d["terms"] = w.cert.terms;
            d["grid_limited"] = w.cert.grid_limited;
            return d;
        });
    m.def(
        "fundamental_solution",
        [](double L, double x_bar, double theta_bar, double sigma, double X_max, double T, double tol) {
            SolverGrids g;
            g.X_max = X_max;
            g.tol = tol;
            return fundamental_solution(L, {x_bar, theta_bar, sigma}, g, T);
        },
        py::arg("L"), py::arg("x_bar") = 1.0, py::arg("theta_bar") = 0.0, py::arg("sigma") = 0.05,
        py::arg("X_max") = 4.0, py::arg("T") = 1.5, py::arg("tol") = 1e-8);
    m.def("mollified_image_kernel", &mollified_image_kernel, py::arg("k"), py::arg("t"), py::arg("x"),
          py::arg("theta"), py::arg("x_bar"), py::arg("theta_bar"), py::arg("sigma"));

    // ------------------------------------------------------------ regularity
    m.def(
        "sobolev_estimate",
        [](const std::vector<double>& v, double t0, double dt, double t_center, double half_width, double sigma) {
            const auto e = sobolev_estimate(TimeSeries{t0, dt, v}, t_center, half_width, sigma);
            py::dict d;
            d["s"] = e.s;
            d["ci"] = py::make_tuple(e.ci_low, e.ci_high);
            d["smooth"] = e.smooth;
            d["residual"] = e.residual;
            return d;
        },
        py::arg("samples"), py::arg("t0"), py::arg("dt"), py::arg("t_center"), py::arg("half_width") = 0.8,
        py::arg("sigma") = 0.0, "Local Sobolev order of a uniformly sampled signal near t_center.");
    m.def(
        "theta_smooth",
        [](const std::vector<double>& v, double t0, double dt, double s) {
            return theta_smooth(TimeSeries{t0, dt, v}, s).v;
        },
        py::arg("samples"), py::arg("t0"), py::arg("dt"), py::arg("s"));
}
