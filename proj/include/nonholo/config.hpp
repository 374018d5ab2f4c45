#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nonholo/dynamics.hpp"
#include "nonholo/framecraft.hpp"

namespace nonholo {

/// Parsed system description. The textual format is a flat key = value
/// document with [section] headers; all mathematical content uses the
/// expression grammar. See the README for the full reference.
struct SystemConfig {
    std::string name;
    std::vector<std::string> chart;        // configuration variables
    std::vector<std::string> u_names;      // quasi-momentum labels (defaults u1..un)
    int admissible = 0;
    std::vector<std::string> fiber;
    std::vector<std::vector<std::string>> frame_components; // row per frame vector
    std::optional<std::vector<std::vector<std::string>>> metric_rows;
    std::optional<std::string> potential;
    std::optional<std::string> hamiltonian; // alternative to the metric

    // run parameters
    Point x0;
    double dt = 1e-3;
    double t_end = 10.0;
    std::vector<std::string> invariants; // names: "H", chart variables, or name=expr
};

/// Parses the config text. Throws ConfigError with a line reference.
SystemConfig parse_config(const std::string& text);

/// Renders a config back to its canonical text form (the preset dump).
std::string config_text(const SystemConfig& config);

/// Everything the analysis and simulation stages need, assembled once.
struct SystemBundle {
    SystemConfig config;
    MovingFrame frame;
    std::optional<MetricSpec> metric;
    Expr hamiltonian; // full H(q, u)
    ConstrainedSystem constrained;
    CompressedSystem compressed;
};

/// Validates and assembles the pipeline objects from a config. Throws
/// ConfigError for inconsistent input and StructureError for mathematical
/// failures (singular frame, non-quadratic Hamiltonian, ...).
SystemBundle build_system(const SystemConfig& config);

/// Resolves the configured invariant list against a bundle: "H" binds the
/// reduced Hamiltonian, a chart variable binds itself, "name=expr" parses
/// the right-hand side over the compressed chart.
std::vector<std::pair<std::string, Expr>> resolve_invariants(const SystemBundle& bundle);

} // namespace nonholo
