// nonholo command line: analyze almost-Poisson structures of nonholonomic
// systems, run their reduced dynamics, emit CSV and reports. Talks to the
// shared library exclusively through the C interface.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "nonholo.h"

namespace {

struct StringGuard {
    char* value = nullptr;
    ~StringGuard() { nonholo_string_free(value); }
};

struct SystemGuard {
    nonholo_system_t* sys = nullptr;
    ~SystemGuard() { nonholo_system_free(sys); }
};

int fail(int code) {
    std::fprintf(stderr, "error: %s\n", nonholo_last_error());
    return code;
}

int load_system(const std::string& preset, const std::string& config, SystemGuard& out) {
    if (!preset.empty() && !config.empty()) {
        std::fprintf(stderr, "error: give either --preset or --config, not both\n");
        return NONHOLO_ERROR_CONFIG;
    }
    if (preset.empty() && config.empty()) {
        std::fprintf(stderr, "error: a system is required (--preset NAME or --config PATH)\n");
        return NONHOLO_ERROR_CONFIG;
    }
    int rc = preset.empty() ? nonholo_system_from_config_file(config.c_str(), &out.sys)
                            : nonholo_system_from_preset(preset.c_str(), &out.sys);
    if (rc != NONHOLO_OK) return fail(rc);
    return NONHOLO_OK;
}

bool write_or_print(const std::string& path, const char* text) {
    if (path.empty()) {
        std::fputs(text, stdout);
        return true;
    }
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
        return false;
    }
    std::fputs(text, f);
    std::fclose(f);
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"almost-Poisson brackets for nonholonomic systems: build, classify, integrate"};
    app.require_subcommand(1);

    std::string preset, config, out_path, x0, format = "text";
    double t_end = -1.0, dt = -1.0, tol = -1.0, threshold = -1.0;
    int samples = -1;
    unsigned seed = 0;
    bool reconstruct = false, rescaled = false, oracle_check = false;

    auto add_system_flags = [&](CLI::App* cmd) {
        cmd->add_option("--preset", preset, "built-in system name");
        cmd->add_option("--config", config, "config file path");
    };
    auto add_sampling_flags = [&](CLI::App* cmd) {
        cmd->add_option("--samples", samples, "identity-check sample count");
        cmd->add_option("--tol", tol, "identity-check tolerance");
        cmd->add_option("--threshold", threshold, "NotJacobi residual threshold");
        cmd->add_option("--seed", seed, "sampling seed (reproducibility)");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "structure report for a system");
    add_system_flags(analyze);
    add_sampling_flags(analyze);
    analyze->add_option("--out", out_path, "write the report to a file");

    CLI::App* report = app.add_subcommand("report", "machine-readable analysis");
    add_system_flags(report);
    add_sampling_flags(report);
    report->add_option("--format", format, "json or text");
    report->add_option("--out", out_path, "write the report to a file");

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the reduced dynamics");
    add_system_flags(simulate);
    simulate->add_option("--t-end", t_end, "integration horizon");
    simulate->add_option("--dt", dt, "step size");
    simulate->add_option("--x0", x0, "initial-state overrides, e.g. x=0,u1=1");
    simulate->add_flag("--reconstruct", reconstruct, "append fiber coordinates by quadrature");
    simulate->add_flag("--rescaled", rescaled, "integrate in the conformal time scale");
    simulate->add_flag("--oracle-check", oracle_check, "compare against the closed-form reference");
    simulate->add_option("--out", out_path, "trajectory CSV path");
    simulate->add_option("--format", format, "summary format: json or text");

    CLI::App* presets = app.add_subcommand("presets", "list built-in systems");
    std::string dump;
    presets->add_option("--dump", dump, "print the config text of one preset");

    CLI11_PARSE(app, argc, argv);

    if (format != "text" && format != "json") {
        std::fprintf(stderr, "error: unsupported format '%s' (use json or text)\n", format.c_str());
        return NONHOLO_ERROR_CONFIG;
    }

    if (presets->parsed()) {
        StringGuard text;
        int rc = dump.empty() ? nonholo_preset_list(&text.value)
                              : nonholo_preset_config(dump.c_str(), &text.value);
        if (rc != NONHOLO_OK) return fail(rc);
        std::fputs(text.value, stdout);
        return NONHOLO_OK;
    }

    SystemGuard sys;
    if (int rc = load_system(preset, config, sys); rc != NONHOLO_OK) return rc;

    nonholo_analysis_options_t aopts{samples, tol, -1, threshold, seed};

    if (analyze->parsed() || report->parsed()) {
        bool as_json = report->parsed() && format == "json";
        StringGuard text;
        int rc = nonholo_analyze(sys.sys, &aopts, as_json ? 1 : 0, &text.value);
        if (rc != NONHOLO_OK) return fail(rc);
        return write_or_print(out_path, text.value) ? NONHOLO_OK : NONHOLO_ERROR_CONFIG;
    }

    // simulate
    nonholo_run_options_t ropts{t_end, dt, x0.empty() ? nullptr : x0.c_str(), reconstruct ? 1 : 0,
                                rescaled ? 1 : 0, oracle_check ? 1 : 0};
    std::string csv = out_path.empty() ? (preset.empty() ? std::string("trajectory.csv")
                                                         : preset + "_trajectory.csv")
                                       : out_path;
    StringGuard summary;
    int rc = nonholo_simulate(sys.sys, &ropts, csv.c_str(), format == "json" ? 1 : 0, &summary.value);
    if (rc != NONHOLO_OK && rc != NONHOLO_ERROR_RUNTIME) return fail(rc);
    if (summary.value) std::fputs(summary.value, stdout);
    std::fprintf(stdout, "trajectory written to %s\n", csv.c_str());
    if (rc == NONHOLO_ERROR_RUNTIME) {
        std::fprintf(stderr, "error: %s\n", nonholo_last_error());
        return NONHOLO_ERROR_RUNTIME;
    }
    return NONHOLO_OK;
}
