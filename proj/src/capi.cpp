#include "nonholo.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nonholo/presets.hpp"
#include "nonholo/report.hpp"

using namespace nonholo;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Maps library exceptions onto status codes; the CLI reuses them as exit
// codes directly.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const ConfigError& e) {
        g_last_error = e.what();
        return NONHOLO_ERROR_CONFIG;
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return NONHOLO_ERROR_CONFIG;
    } catch (const EvalError& e) {
        g_last_error = e.what();
        return NONHOLO_ERROR_RUNTIME;
    } catch (const Error& e) {
        g_last_error = e.what();
        return NONHOLO_ERROR_CONFIG;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NONHOLO_ERROR;
    }
}

} // namespace

struct nonholo_system_t {
    SystemBundle bundle;
};

struct nonholo_expr_t {
    Expr expr;
};

extern "C" {

const char* nonholo_version(void) { return "0.1.0"; }

const char* nonholo_last_error(void) { return g_last_error.c_str(); }

void nonholo_string_free(char* s) { std::free(s); }

int nonholo_preset_list(char** out) {
    return guarded([&] {
        std::string text;
        for (const auto& info : preset_catalog()) text += info.name + ": " + info.summary + "\n";
        *out = dup_string(text);
        return NONHOLO_OK;
    });
}

int nonholo_preset_config(const char* name, char** out) {
    return guarded([&] {
        *out = dup_string(preset_config_text(name ? name : ""));
        return NONHOLO_OK;
    });
}

int nonholo_system_from_preset(const char* name, nonholo_system_t** out) {
    return guarded([&] {
        auto sys = new nonholo_system_t{build_system(preset_config(name ? name : ""))};
        *out = sys;
        return NONHOLO_OK;
    });
}

int nonholo_system_from_config_text(const char* text, nonholo_system_t** out) {
    return guarded([&] {
        auto sys = new nonholo_system_t{build_system(parse_config(text ? text : ""))};
        *out = sys;
        return NONHOLO_OK;
    });
}

int nonholo_system_from_config_file(const char* path, nonholo_system_t** out) {
    return guarded([&] {
        std::ifstream in(path ? path : "");
        if (!in) throw ConfigError("cannot open config file '" + std::string(path ? path : "") + "'");
        std::ostringstream text;
        text << in.rdbuf();
        auto sys = new nonholo_system_t{build_system(parse_config(text.str()))};
        *out = sys;
        return NONHOLO_OK;
    });
}

void nonholo_system_free(nonholo_system_t* sys) { delete sys; }

int nonholo_system_config(const nonholo_system_t* sys, char** out) {
    return guarded([&] {
        if (!sys) throw ConfigError("null system handle");
        *out = dup_string(config_text(sys->bundle.config));
        return NONHOLO_OK;
    });
}

int nonholo_analyze(nonholo_system_t* sys, const nonholo_analysis_options_t* options, int as_json,
                    char** report_out) {
    return guarded([&] {
        if (!sys) throw ConfigError("null system handle");
        AnalysisOptions opts;
        if (options) {
            if (options->samples > 0) opts.samples = options->samples;
            if (options->tol > 0) opts.tol = options->tol;
            if (options->classify_points > 0) opts.classify_points = options->classify_points;
            if (options->threshold > 0) opts.threshold = options->threshold;
            if (options->seed != 0) opts.seed = options->seed;
        }
        AnalysisReport report = analyze(sys->bundle, opts);
        *report_out = dup_string(as_json ? report_json(report) : report_text(report));
        return NONHOLO_OK;
    });
}

int nonholo_simulate(nonholo_system_t* sys, const nonholo_run_options_t* options,
                     const char* csv_path, int as_json, char** summary_out) {
    return guarded([&] {
        if (!sys) throw ConfigError("null system handle");
        RunOptions opts;
        if (options) {
            if (options->t_end > 0) opts.t_end = options->t_end;
            if (options->dt > 0) opts.dt = options->dt;
            opts.reconstruct = options->reconstruct != 0;
            opts.rescaled = options->rescaled != 0;
            opts.oracle_check = options->oracle_check != 0;
            if (options->x0) {
                std::string text = options->x0;
                std::istringstream in(text);
                std::string item;
                while (std::getline(in, item, ',')) {
                    if (item.find_first_not_of(" \t") == std::string::npos) continue;
                    std::size_t eq = item.find('=');
                    if (eq == std::string::npos)
                        throw ConfigError("x0 overrides are name=value pairs: '" + item + "'");
                    std::string key = item.substr(0, eq);
                    key.erase(0, key.find_first_not_of(" \t"));
                    key.erase(key.find_last_not_of(" \t") + 1);
                    try {
                        opts.x0_overrides[key] = std::stod(item.substr(eq + 1));
                    } catch (const std::exception&) {
                        throw ConfigError("x0 override '" + item + "': bad number");
                    }
                }
            }
        }
        RunResult result = run_simulation(sys->bundle, opts);
        if (csv_path && *csv_path) {
            std::ofstream out(csv_path, std::ios::trunc);
            if (!out) throw ConfigError("cannot write CSV to '" + std::string(csv_path) + "'");
            out << result.csv;
        }
        if (summary_out) *summary_out = dup_string(as_json ? summary_json(result) : summary_text(result));
        if (result.fault) {
            g_last_error = "run stopped at t = " + std::to_string(result.fault->t) + ": " +
                           result.fault->what;
            return static_cast<int>(NONHOLO_ERROR_RUNTIME);
        }
        return static_cast<int>(NONHOLO_OK);
    });
}

int nonholo_expr_parse(const char* text, nonholo_expr_t** out) {
    return guarded([&] {
        *out = new nonholo_expr_t{parse(text ? text : "")};
        return NONHOLO_OK;
    });
}

void nonholo_expr_free(nonholo_expr_t* e) { delete e; }

int nonholo_expr_print(const nonholo_expr_t* e, char** out) {
    return guarded([&] {
        if (!e) throw ConfigError("null expression handle");
        *out = dup_string(to_string(e->expr));
        return NONHOLO_OK;
    });
}

int nonholo_expr_diff(const nonholo_expr_t* e, const char* var, nonholo_expr_t** out) {
    return guarded([&] {
        if (!e) throw ConfigError("null expression handle");
        *out = new nonholo_expr_t{simplify(diff(e->expr, var ? var : ""))};
        return NONHOLO_OK;
    });
}

int nonholo_expr_eval(const nonholo_expr_t* e, const char* const* names, const double* values,
                      size_t count, double* out) {
    return guarded([&] {
        if (!e) throw ConfigError("null expression handle");
        Point p;
        for (size_t i = 0; i < count; ++i) p[names[i]] = values[i];
        *out = eval(e->expr, p);
        return NONHOLO_OK;
    });
}

} // extern "C"
