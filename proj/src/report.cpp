#include "plab/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>

#include "plab/envelope.hpp"
#include "plab/errors.hpp"
#include "plab/factorization.hpp"
#include "plab/filtration.hpp"
#include "plab/linalg.hpp"
#include "plab/spectral.hpp"

namespace plab {
namespace {

using nlohmann::json;

cplx cplx_from_json(const json& j) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return cplx(j[0].get<double>(), j[1].get<double>());
    throw ConfigError("complex scalar must be a number or [re, im] pair");
}

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::vector<cplx> cplx_vector(const json& j) {
    if (!j.is_array()) throw ConfigError("expected an array of complex scalars");
    std::vector<cplx> out;
    for (const auto& e : j) out.push_back(cplx_from_json(e));
    return out;
}

Coefficient coefficient_from_json(const json& doc) {
    if (!doc.is_object()) {
        // Bare scalars are constant coefficients.
        return Coefficient::constant(cplx_from_json(doc));
    }
    Coefficient base;
    if (doc.contains("constant")) {
        base = Coefficient::constant(cplx_from_json(doc["constant"]));
    } else if (doc.contains("rational")) {
        const json& r = doc["rational"];
        if (!r.contains("num") || !r.contains("den"))
            throw ConfigError("rational coefficient needs num and den arrays");
        base = Coefficient::rational(cplx_vector(r["num"]), cplx_vector(r["den"]));
    } else if (doc.contains("table")) {
        const json& t = doc["table"];
        if (!t.contains("values") || !t.contains("tail"))
            throw ConfigError("tabulated coefficient needs values and a tail rule");
        base = Coefficient::table(cplx_vector(t["values"]), coefficient_from_json(t["tail"]));
    } else {
        throw ConfigError("coefficient needs one of constant | rational | table");
    }

    bool has_meta = doc.contains("limit") || doc.contains("decay") || doc.contains("decay_constant");
    if (!has_meta) return base;

    std::optional<cplx> limit =
        doc.contains("limit") ? std::optional<cplx>(cplx_from_json(doc["limit"]))
                              : (base.has_limit() ? std::optional<cplx>(base.limit()) : std::nullopt);
    Coefficient::Decay decay = base.decay();
    if (doc.contains("decay")) {
        std::string d = doc["decay"].get<std::string>();
        if (d == "exact")
            decay = Coefficient::Decay::Exact;
        else if (d == "inverse_nu")
            decay = Coefficient::Decay::InverseNu;
        else if (d == "vanishing")
            decay = Coefficient::Decay::Vanishing;
        else
            throw ConfigError("decay must be exact | inverse_nu | vanishing");
    }
    std::optional<double> dc;
    if (doc.contains("decay_constant")) dc = doc["decay_constant"].get<double>();
    return Coefficient::closure([base](long nu) { return base(nu); }, limit, decay, dc);
}

const std::vector<std::string> kStageOrder = {"profile",   "envelope",  "filtration", "factorize",
                                              "verify7",   "verify8_10", "verify5"};

const std::map<std::string, std::vector<std::string>> kStageDeps = {
    {"profile", {}},
    {"envelope", {"profile"}},
    {"filtration", {"profile"}},
    {"factorize", {"profile"}},
    {"verify7", {"profile", "filtration"}},
    {"verify8_10", {"profile", "filtration"}},
    {"verify5", {"profile", "filtration"}},
};

json check_to_json(const EnvelopeCheck& c) {
    json j;
    j["name"] = c.name;
    j["fitted"] = c.fitted;
    j["fitted_half"] = c.fitted_half;
    j["binding_nu"] = c.binding_nu;
    j["ok"] = c.ok;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

void write_margin_csv(const std::string& dir, const EnvelopeCheck& c) {
    if (dir.empty() || c.margin.empty()) return;
    std::ofstream out(dir + "/margin_" + c.name + ".csv");
    out << std::setprecision(17);
    out << "nu,value\n";
    for (const auto& [nu, v] : c.margin) out << nu << "," << v << "\n";
}

json verify_to_json(const VerifyResults& results, const std::string& csv_dir) {
    json j;
    j["checks"] = json::array();
    for (const auto& c : results.checks) {
        j["checks"].push_back(check_to_json(c));
        write_margin_csv(csv_dir, c);
    }
    j["violations"] = results.violations;
    return j;
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cplx_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

Equation equation_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("equation spec must be an object");
    if (!doc.contains("order") || !doc.contains("coefficients"))
        throw ConfigError("equation spec needs order and coefficients");
    long order = doc["order"].get<long>();
    long offset = doc.value("start_offset", 0L);
    const json& coeffs = doc["coefficients"];
    if (!coeffs.is_array() || coeffs.size() != static_cast<size_t>(order + 1))
        throw ConfigError("expected order+1 coefficient entries");
    std::vector<Coefficient> parsed;
    for (const auto& c : coeffs) parsed.push_back(coefficient_from_json(c));
    try {
        return Equation(order, std::move(parsed), offset);
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid equation: ") + e.what());
    }
}

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig config;
    if (!doc.contains("equation")) throw ConfigError("config needs an equation");
    config.equation_spec = doc["equation"];
    equation_from_json(config.equation_spec);  // validate early

    config.horizon = doc.value("horizon", 1000L);
    if (config.horizon < 64) throw ConfigError("horizon must be at least 64");
    config.seed = doc.value("seed", static_cast<std::uint64_t>(0x5eed));
    if (doc.contains("epsilon")) {
        config.epsilon = doc["epsilon"].get<double>();
        if (!(*config.epsilon > 0)) throw ConfigError("epsilon must be positive");
    }
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        config.tolerances.cluster_tol = t.value("cluster_tol", config.tolerances.cluster_tol);
        config.tolerances.residual_tol = t.value("residual_tol", config.tolerances.residual_tol);
        config.tolerances.angle_tol = t.value("angle_tol", config.tolerances.angle_tol);
        if (config.tolerances.cluster_tol <= 0 || config.tolerances.angle_tol <= 0)
            throw ConfigError("tolerances must be positive");
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        config.report_path = o.value("report", std::string());
        config.csv_dir = o.value("csv_dir", std::string());
    }
    config.dump_bases = doc.value("dump_bases", false);

    std::set<std::string> wanted;
    if (doc.contains("stages")) {
        for (const auto& s : doc["stages"]) {
            std::string name = s.get<std::string>();
            if (kStageDeps.find(name) == kStageDeps.end())
                throw ConfigError("unknown stage: " + name);
            wanted.insert(name);
        }
    } else {
        wanted = {"profile", "envelope", "filtration"};
    }
    // Close under dependencies.
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& s : std::set<std::string>(wanted))
            for (const auto& dep : kStageDeps.at(s))
                if (wanted.insert(dep).second) grew = true;
    }
    for (const auto& s : kStageOrder)
        if (wanted.count(s)) config.stages.push_back(s);
    return config;
}

AnalysisReport run(const RunConfig& config) {
    AnalysisReport report;
    json& doc = report.document;
    doc["provenance"]["version"] = kVersion;
    doc["provenance"]["seed"] = config.seed;
    doc["provenance"]["stages"] = config.stages;
    doc["provenance"]["config"]["horizon"] = config.horizon;
    doc["provenance"]["config"]["equation"] = config.equation_spec;
    doc["provenance"]["config"]["tolerances"] = {
        {"cluster_tol", config.tolerances.cluster_tol},
        {"residual_tol", config.tolerances.residual_tol},
        {"angle_tol", config.tolerances.angle_tol}};
    if (config.epsilon) doc["provenance"]["config"]["epsilon"] = *config.epsilon;

    if (!config.csv_dir.empty()) std::filesystem::create_directories(config.csv_dir);

    Equation eq = equation_from_json(config.equation_spec);
    long horizon = config.horizon;
    FiltrationOptions fopts;
    fopts.seed = config.seed;
    fopts.angle_tol = config.tolerances.angle_tol;

    std::optional<CharacteristicProfile> profile;
    std::optional<FiltrationReport> filtration;

    auto run_stage = [&](const std::string& name, const std::function<void()>& body) {
        if (std::find(config.stages.begin(), config.stages.end(), name) == config.stages.end())
            return;
        StageOutcome outcome;
        outcome.name = name;
        for (const auto& dep : kStageDeps.at(name)) {
            bool dep_ok = false;
            for (const auto& o : report.outcomes)
                if (o.name == dep && o.ran && o.error.empty()) dep_ok = true;
            if (!dep_ok) {
                outcome.error = "dependency " + dep + " did not complete";
                report.outcomes.push_back(outcome);
                return;
            }
        }
        auto start = std::chrono::steady_clock::now();
        try {
            body();
            outcome.ran = true;
        } catch (const std::exception& e) {
            outcome.ran = true;
            outcome.error = e.what();
        }
        outcome.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        report.outcomes.push_back(outcome);
    };

    run_stage("profile", [&] {
        profile = analyze_profile(eq, config.tolerances.cluster_tol);
        json p;
        p["poly_coeffs"] = json::array();
        for (cplx c : profile->poly_coeffs) p["poly_coeffs"].push_back(cplx_to_json(c));
        p["roots"] = json::array();
        for (const Root& r : profile->roots)
            p["roots"].push_back({{"value", cplx_to_json(r.value)},
                                  {"multiplicity", r.multiplicity},
                                  {"residual", r.residual}});
        p["clusters"] = json::array();
        for (const auto& c : profile->clusters)
            p["clusters"].push_back(
                {{"rho", c.rho}, {"mult_sum", c.mult_sum}, {"mult_max", c.mult_max}});
        p["zero_cluster"] = {{"mult_sum", profile->zero_mult_sum},
                             {"mult_max", profile->zero_mult_max}};
        p["k_global"] = profile->k_global;
        p["cluster_tolerance"] = profile->cluster_tolerance;
        p["warnings"] = profile->warnings;
        doc["profile"] = p;
    });

    run_stage("envelope", [&] {
        json env;
        long m = eq.start_offset();
        long a = std::max<long>(m, 1);
        long b = m + horizon;
        LogTransferProduct fwd =
            transfer_log_norm(eq, *profile, a, b, TransferDirection::Forward);
        auto transfer_json = [](const LogTransferProduct& t) {
            json j;
            j["from"] = t.from;
            j["to"] = t.to;
            j["requested_from"] = t.requested_from;
            j["log_norm"] = t.log_norm;
            j["rate"] = t.log_norm / static_cast<double>(t.to - t.from);
            j["scaling_events"] = t.scaling_events;
            j["segments"] = json::array();
            for (const auto& s : t.segments)
                j["segments"].push_back({{"lo", s.lo},
                                         {"hi", s.hi},
                                         {"epsilon", s.epsilon},
                                         {"log_hnorm", s.log_hnorm},
                                         {"log_pnorm", s.log_pnorm}});
            return j;
        };
        env["forward"] = transfer_json(fwd);
        env["ln_rho1"] = std::log(profile->rho(1));
        bool lower_ok = profile->zero_mult_sum == 0 && profile->s() >= 1;
        if (lower_ok) {
            try {
                LogTransferProduct inv =
                    transfer_log_norm(eq, *profile, a, b, TransferDirection::Inverse);
                env["inverse"] = transfer_json(inv);
                env["ln_inv_rho_s"] = -std::log(profile->rho(profile->s()));
            } catch (const Error& e) {
                env["inverse_skipped"] = e.what();
            }
        } else {
            env["inverse_skipped"] = "zero cluster present (k* > 0)";
        }

        // Reference solution sample with Lemma-3 shaped fits.
        long n = eq.order();
        Vec window = random_frame(n, 1, config.seed ^ 0xe17e).col(0);
        StateVector sv;
        sv.base_index = m;
        sv.window = window;
        Trajectory traj = iterate(eq, sv, horizon + n + 1);
        double base = log_window_norm(traj, m, n);
        std::vector<double> series;
        for (long nu = a; nu <= b; ++nu) series.push_back(log_window_norm(traj, nu, n) - base);

        int k = std::max(1, profile->k_global);
        EnvelopeShape upper{profile->rho(1), k, EnvelopeMode::PolyLog, 0.0};
        FitResult up = fit_envelope_constant(series, a, upper, FitSide::Upper);
        env["upper_fit"] = {{"rho", upper.rho}, {"k", k}, {"a_const", up.a_const},
                            {"binding_nu", up.binding_nu}};
        std::optional<GrowthEnvelope> lower_env;
        if (lower_ok) {
            EnvelopeShape lower{profile->rho(profile->s()), k, EnvelopeMode::PolyLog, 0.0};
            FitResult down = fit_envelope_constant(series, a, lower, FitSide::Lower);
            env["lower_fit"] = {{"rho", lower.rho}, {"k", k}, {"a_const", down.a_const},
                                {"binding_nu", down.binding_nu}};
            lower_env = make_envelope(lower, FitSide::Lower, down.a_const);
        }
        doc["envelope"] = env;

        if (!config.csv_dir.empty()) {
            // Natural logs; omega itself overflows doubles at these horizons.
            std::ofstream out(config.csv_dir + "/envelope.csv");
            out << std::setprecision(17);
            out << "nu,log_omega,log_envelope_upper,log_envelope_lower,log_transfer\n";
            GrowthEnvelope upper_env = make_envelope(upper, FitSide::Upper, up.a_const);
            size_t seg = 0;
            double running = 0;
            for (long nu = a; nu <= b; ++nu) {
                while (seg < fwd.segments.size() && fwd.segments[seg].hi <= nu)
                    running += fwd.segments[seg++].log_hnorm;
                out << nu << "," << series[static_cast<size_t>(nu - a)] << ","
                    << log_envelope_value(upper_env, nu) << ",";
                if (lower_env)
                    out << log_envelope_value(*lower_env, nu);
                out << "," << running << "\n";
            }
        }
    });

    run_stage("filtration", [&] {
        filtration = compute_filtration(eq, *profile, horizon, fopts);
        json f;
        f["offset"] = filtration->offset;
        f["horizon"] = filtration->horizon;
        f["level_dims"] = json::array();
        for (const auto& l : filtration->levels) f["level_dims"].push_back(l.cols());
        f["level_angles"] = filtration->level_angles;
        f["exponents"] = filtration->exponents;
        f["violations"] = filtration->violations;
        if (config.dump_bases) {
            f["levels"] = json::array();
            for (const auto& l : filtration->levels) f["levels"].push_back(matrix_to_json(l));
            f["complements"] = json::array();
            for (const auto& c : filtration->complements)
                f["complements"].push_back(matrix_to_json(c));
        }
        for (const auto& v : filtration->violations) report.violations.push_back("filtration: " + v);
        doc["filtration"] = f;
    });

    run_stage("factorize", [&] {
        Factorization fact = factorize(eq, *profile, horizon, config.seed);
        json f;
        f["working_offset"] = fact.working_offset;
        f["residual"] = fact.residual;
        f["decay_fits_valid"] = fact.decay_fits_valid;
        f["factors"] = json::array();
        for (size_t i = 0; i < fact.factors.size(); ++i) {
            const auto& beta = fact.factors[i];
            const auto& rep = fact.reports[i];
            json fj;
            fj["degree"] = beta.degree();
            fj["start_offset"] = beta.start_offset();
            fj["target_poly"] = json::array();
            for (cplx c : rep.target_poly) fj["target_poly"].push_back(cplx_to_json(c));
            fj["recovered_limits"] = json::array();
            for (cplx c : rep.recovered_limits) fj["recovered_limits"].push_back(cplx_to_json(c));
            fj["limit_error"] = rep.limit_error;
            fj["decay_fits"] = rep.decay_fits;
            json samples = json::array();
            for (long off : {0L, 1L, 7L, 63L}) {
                long nu = beta.start_offset() + off;
                json row = json::array();
                for (long kk = 0; kk <= beta.degree(); ++kk)
                    row.push_back(cplx_to_json(beta.coeff(kk)(nu)));
                samples.push_back({{"nu", nu}, {"coeffs", row}});
            }
            fj["coefficient_samples"] = samples;
            f["factors"].push_back(fj);
        }
        doc["factorization"] = f;
    });

    run_stage("verify7", [&] {
        VerifyResults r = verify_theorem7(eq, *profile, *filtration, horizon, fopts);
        doc["verify7"] = verify_to_json(r, config.csv_dir);
        for (const auto& v : r.violations) report.violations.push_back("verify7: " + v);
    });

    run_stage("verify8_10", [&] {
        json section;
        section["checks"] = json::array();
        section["violations"] = json::array();
        for (long theta = 1; theta <= profile->s(); ++theta) {
            for (auto kind : {SubspaceSpec::Kind::Star, SubspaceSpec::Kind::Graph,
                              SubspaceSpec::Kind::Random}) {
                SubspaceSpec spec;
                spec.kind = kind;
                spec.theta = theta;
                VerifyResults r =
                    verify_theorem8_10(eq, *profile, *filtration, spec, horizon, fopts);
                for (const auto& c : r.checks) {
                    section["checks"].push_back(check_to_json(c));
                    write_margin_csv(config.csv_dir, c);
                }
                for (const auto& v : r.violations) {
                    section["violations"].push_back(v);
                    report.violations.push_back("verify8_10: " + v);
                }
            }
        }
        doc["verify8_10"] = section;
    });

    run_stage("verify5", [&] {
        double eps = config.epsilon.value_or(0.1);
        VerifyResults r = verify_section5(eq, *profile, *filtration, eps, horizon, fopts);
        doc["verify5"] = verify_to_json(r, config.csv_dir);
        doc["verify5"]["epsilon"] = eps;
        for (const auto& v : r.violations) report.violations.push_back("verify5: " + v);
    });

    doc["violations"] = report.violations;
    json outs = json::array();
    for (const auto& o : report.outcomes)
        outs.push_back({{"stage", o.name}, {"ran", o.ran}, {"error", o.error}});
    doc["outcomes"] = outs;

    if (!config.report_path.empty()) {
        std::filesystem::path p(config.report_path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(config.report_path);
        out << doc.dump(2) << "\n";
        // Wall-clock lives beside the report so report bytes stay
        // reproducible for fixed config and seed.
        json timings = json::array();
        for (const auto& o : report.outcomes)
            timings.push_back({{"stage", o.name}, {"wall_ms", o.wall_ms}});
        std::ofstream tout(config.report_path + ".timings.json");
        tout << timings.dump(2) << "\n";
    }
    return report;
}

}  // namespace plab
