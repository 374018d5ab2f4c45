/* nonholo.h - C interface to the nonholo shared library.
 *
 * Handles are opaque; every function returns a status code from the
 * NONHOLO_* enum below (0 on success). On failure nonholo_last_error()
 * returns a thread-local message. Strings returned through char** are
 * heap-allocated; release them with nonholo_string_free().
 */

#ifndef NONHOLO_H
#define NONHOLO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    NONHOLO_OK = 0,
    NONHOLO_ERROR = 1,         /* unexpected internal failure */
    NONHOLO_ERROR_CONFIG = 2,  /* bad preset, config, or argument */
    NONHOLO_ERROR_RUNTIME = 3  /* evaluation singularity during a run */
};

typedef struct nonholo_system_t nonholo_system_t;
typedef struct nonholo_expr_t nonholo_expr_t;

const char* nonholo_version(void);
const char* nonholo_last_error(void);
void nonholo_string_free(char* s);

/* ---- preset catalog ---- */

/* Newline-separated "name: summary" lines. */
int nonholo_preset_list(char** out);
/* Canonical config text of a preset. */
int nonholo_preset_config(const char* name, char** out);

/* ---- system lifecycle ---- */

int nonholo_system_from_preset(const char* name, nonholo_system_t** out);
int nonholo_system_from_config_text(const char* text, nonholo_system_t** out);
int nonholo_system_from_config_file(const char* path, nonholo_system_t** out);
void nonholo_system_free(nonholo_system_t* sys);

/* Canonical config text of a loaded system. */
int nonholo_system_config(const nonholo_system_t* sys, char** out);

/* ---- analysis ---- */

typedef struct {
    int samples;         /* <= 0: default 20 */
    double tol;          /* <= 0: default 1e-10 */
    int classify_points; /* <= 0: default 25 */
    double threshold;    /* <= 0: default 1e-6 */
    unsigned seed;       /* 0: default */
} nonholo_analysis_options_t;

/* Structure report; as_json selects the machine-readable form. */
int nonholo_analyze(nonholo_system_t* sys, const nonholo_analysis_options_t* options,
                    int as_json, char** report_out);

/* ---- simulation ---- */

typedef struct {
    double t_end;    /* <= 0: config default */
    double dt;       /* <= 0: config default */
    const char* x0;  /* "x=0,y=0,u1=1" overrides, NULL for none */
    int reconstruct; /* append fiber columns by quadrature */
    int rescaled;    /* run in the conformal time scale */
    int oracle_check;/* append deviation against the closed-form reference */
} nonholo_run_options_t;

/* Integrates the compressed system. When csv_path is non-NULL the
 * trajectory is written there (also on a mid-run singularity, partially).
 * Returns NONHOLO_ERROR_RUNTIME when the run stopped early. */
int nonholo_simulate(nonholo_system_t* sys, const nonholo_run_options_t* options,
                     const char* csv_path, int as_json, char** summary_out);

/* ---- expressions ---- */

int nonholo_expr_parse(const char* text, nonholo_expr_t** out);
void nonholo_expr_free(nonholo_expr_t* e);
int nonholo_expr_print(const nonholo_expr_t* e, char** out);
int nonholo_expr_diff(const nonholo_expr_t* e, const char* var, nonholo_expr_t** out);
int nonholo_expr_eval(const nonholo_expr_t* e, const char* const* names, const double* values,
                      size_t count, double* out);

#ifdef __cplusplus
}
#endif

#endif /* NONHOLO_H */
