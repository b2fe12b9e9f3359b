#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plab/equation.hpp"

namespace plab {

inline constexpr const char* kVersion = "0.1.0";

/// Equation from its JSON description:
/// {"order": n, "coefficients": [...], "start_offset": m} with coefficient
/// entries {"constant": c} | {"rational": {"num": [...], "den": [...]}} |
/// {"table": {"values": [...], "tail": {...}}} and optional "limit",
/// "decay" ("exact" | "inverse_nu" | "vanishing"), "decay_constant".
/// Complex scalars are [re, im] pairs (plain numbers accepted).
Equation equation_from_json(const nlohmann::json& doc);

struct ToleranceConfig {
    double cluster_tol = 1e-6;
    double residual_tol = 1e-9;
    double angle_tol = 1e-6;
};

struct RunConfig {
    nlohmann::json equation_spec;
    std::vector<std::string> stages;  // dependency-closed, execution order
    long horizon = 1000;
    ToleranceConfig tolerances;
    std::uint64_t seed = 0x5eed;
    std::optional<double> epsilon;  // section-5 mode
    std::string report_path;        // empty: caller prints
    std::string csv_dir;            // empty: no CSV emission
    bool dump_bases = false;
};

/// Parse and validate a config document; unknown stages, horizon < 64 and
/// malformed equations raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);

struct StageOutcome {
    std::string name;
    bool ran = false;
    std::string error;  // empty on success
    double wall_ms = 0;
};

struct AnalysisReport {
    nlohmann::json document;  // deterministic given config + seed
    std::vector<StageOutcome> outcomes;
    std::vector<std::string> violations;

    bool any_stage_error() const {
        for (const auto& o : outcomes)
            if (!o.error.empty()) return true;
        return false;
    }
};

/// Execute the configured stages in dependency order; stage failures are
/// captured per stage and independent stages still run. Writes the JSON
/// report and CSV series when paths are configured.
AnalysisReport run(const RunConfig& config);

}  // namespace plab
