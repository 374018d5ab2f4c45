#pragma once

#include <optional>
#include <string>

#include "nonholo/config.hpp"
#include "nonholo/jacobi.hpp"

namespace nonholo {

struct AnalysisOptions {
    int samples = 20;        // identity-check sample count
    double tol = 1e-10;      // identity-check tolerance
    int classify_points = 25;
    double threshold = 1e-6; // NotJacobi residual threshold
    unsigned seed = 12345;
};

/// Full structural analysis of a system: constrained and compressed
/// brackets, their Jacobi defects and verdicts, the witness field, the
/// restriction expression and the conformal factor when they exist.
struct AnalysisReport {
    SystemBundle bundle;
    Trivector constrained_defect;
    StructureVerdict constrained_verdict;
    Trivector compressed_defect;
    StructureVerdict compressed_verdict;
    std::optional<VectorField> e_field;
    std::optional<Expr> lie_derivative_coefficient;
    std::optional<Expr> restriction;
    std::optional<ConformalFactor> conformal_factor;
};

AnalysisReport analyze(const SystemBundle& bundle, const AnalysisOptions& opts = {});

std::string report_text(const AnalysisReport& report);
std::string report_json(const AnalysisReport& report);

/// Simulation driver shared by the CLI and the C API.
struct RunOptions {
    std::optional<double> t_end;
    std::optional<double> dt;
    Point x0_overrides;
    bool reconstruct = false;
    bool rescaled = false;
    bool oracle_check = false;
};

struct RunResult {
    Trajectory trajectory;                 // possibly with fiber columns
    InvariantReport invariants;
    std::string csv;
    std::optional<Singularity> fault;
    std::optional<double> oracle_max_dev;   // --oracle-check
    std::optional<double> rescaled_max_dev; // --rescaled, t-matched
};

RunResult run_simulation(const SystemBundle& bundle, const RunOptions& opts);

std::string summary_text(const RunResult& result);
std::string summary_json(const RunResult& result);

} // namespace nonholo
