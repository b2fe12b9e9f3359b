#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "plab/envelope.hpp"
#include "plab/errors.hpp"
#include "plab/filtration.hpp"
#include "plab/report.hpp"
#include "plab/spectral.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

plab::Equation parse_equation(const std::string& spec) {
    return plab::equation_from_json(json::parse(spec));
}

std::string profile_json(const std::string& equation_spec, double tol) {
    plab::Equation eq = parse_equation(equation_spec);
    plab::CharacteristicProfile p = plab::analyze_profile(eq, tol);
    json out;
    out["roots"] = json::array();
    for (const auto& r : p.roots)
        out["roots"].push_back({{"value", {r.value.real(), r.value.imag()}},
                                {"multiplicity", r.multiplicity},
                                {"residual", r.residual}});
    out["clusters"] = json::array();
    for (const auto& c : p.clusters)
        out["clusters"].push_back(
            {{"rho", c.rho}, {"mult_sum", c.mult_sum}, {"mult_max", c.mult_max}});
    out["zero_cluster"] = {{"mult_sum", p.zero_mult_sum}, {"mult_max", p.zero_mult_max}};
    out["k_global"] = p.k_global;
    return out.dump();
}

double growth_exponent_py(const std::string& equation_spec, long length,
                          const std::vector<double>& initial) {
    plab::Equation eq = parse_equation(equation_spec);
    plab::StateVector sv;
    sv.base_index = eq.start_offset();
    sv.window = plab::Vec(eq.order());
    for (long i = 0; i < eq.order(); ++i)
        sv.window[i] = i < static_cast<long>(initial.size()) ? initial[static_cast<size_t>(i)] : 1.0;
    plab::Trajectory traj = plab::iterate(eq, sv, length);
    return plab::growth_exponent(traj).value;
}

double transfer_rate(const std::string& equation_spec, long a, long b, const std::string& dir) {
    plab::Equation eq = parse_equation(equation_spec);
    plab::TransferDirection d = dir == "inverse" ? plab::TransferDirection::Inverse
                                                 : plab::TransferDirection::Forward;
    plab::LogTransferProduct t = plab::transfer_log_norm(eq, a, b, d);
    return t.log_norm / static_cast<double>(t.to - t.from);
}

std::string analyze(const std::string& config_spec) {
    plab::RunConfig config = plab::parse_config(json::parse(config_spec));
    // Python callers receive the document; file outputs stay opt-in.
    plab::AnalysisReport report = plab::run(config);
    return report.document.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Growth analysis for Poincare-type linear difference equations";
    m.attr("__version__") = plab::kVersion;

    // Translators run newest-first, so the subclass goes second.
    py::register_exception<plab::Error>(m, "AnalysisError");
    py::register_exception<plab::ConfigError>(m, "ConfigError");

    m.def("analyze", &analyze, py::arg("config_json"),
          "Run the analysis pipeline; returns the JSON report as a string.");
    m.def("profile", &profile_json, py::arg("equation_json"), py::arg("cluster_tol") = 1e-6,
          "Characteristic profile (roots and modulus clusters) as JSON.");
    m.def("growth_exponent", &growth_exponent_py, py::arg("equation_json"),
          py::arg("length") = 2048, py::arg("initial") = std::vector<double>{},
          "Estimated limsup |y(nu)|^(1/nu) for the solution from the given window.");
    m.def("transfer_log_norm_rate", &transfer_rate, py::arg("equation_json"), py::arg("a"),
          py::arg("b"), py::arg("direction") = "forward",
          "Averaged log operator norm of the companion transfer product.");
    m.def("log_sum_bound", &plab::log_sum_bound, py::arg("a"), py::arg("b"), py::arg("c"),
          "Closed-form upper bound for sum ln(1 + C/kappa).");
    m.def("dyadic_points", [](long start, long end) { return plab::dyadic_schedule(start, end).points; },
          py::arg("start"), py::arg("end"), "Doubling schedule points.");
}
