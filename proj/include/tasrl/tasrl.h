/* C interface to the volt-var control toolkit.
 *
 * Objects are opaque handles released with the matching *_free call. Every
 * fallible function returns a tasrl_status; on failure tasrl_last_error()
 * holds a message for the calling thread. Strings returned through char**
 * are heap allocated and released with tasrl_string_free. */
#ifndef TASRL_TASRL_H
#define TASRL_TASRL_H

#include <stddef.h>
#include <stdint.h>

#if defined(TASRL_BUILDING_LIBRARY)
#define TASRL_API __attribute__((visibility("default")))
#else
#define TASRL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tasrl_status {
    TASRL_OK = 0,
    TASRL_E_INVALID_INPUT = 1,
    TASRL_E_DIMENSION_MISMATCH = 2,
    TASRL_E_CYCLE_DETECTED = 3,
    TASRL_E_DISCONNECTED_BUS = 4,
    TASRL_E_DUPLICATE_LINE = 5,
    TASRL_E_PROBLEM_TOO_LARGE = 6,
    TASRL_E_INFEASIBLE_STATE = 7,
    TASRL_E_SAFETY_VIOLATION = 8,
    TASRL_E_DEGENERATE_REFERENCE = 9,
    TASRL_E_SINGULAR_X = 10,
    TASRL_E_NON_FINITE_LOSS = 11,
    TASRL_E_CORRUPT_CHECKPOINT = 12,
    TASRL_E_INVARIANT_VIOLATION = 13,
    TASRL_E_INVALID_ALPHA = 14,
    TASRL_E_IO = 15,
    TASRL_E_NOT_CONVERGED = 16,      /* solver hit its iteration limit */
    TASRL_E_CHECK_FAILED = 17,       /* a certificate reported violations */
    TASRL_E_INTERNAL = 99
} tasrl_status;

typedef enum tasrl_variant { TASRL_VARIANT_TASRL = 0, TASRL_VARIANT_SGF = 1, TASRL_VARIANT_TRANSIENT = 2 } tasrl_variant;
typedef enum tasrl_kind { TASRL_KIND_HIGH = 0, TASRL_KIND_LOW = 1 } tasrl_kind;
typedef enum tasrl_method { TASRL_METHOD_ZO = 0, TASRL_METHOD_AC = 1 } tasrl_method;

typedef struct tasrl_network tasrl_network;
typedef struct tasrl_policy tasrl_policy;

TASRL_API const char* tasrl_last_error(void);
TASRL_API const char* tasrl_status_name(int status);
/* Process exit code for a status: 0 ok, 1 usage, 2 invariant or safety
 * violation, 3 numerical failure. */
TASRL_API int tasrl_exit_code(int status);
TASRL_API void tasrl_string_free(char* s);
/* Worker threads used for parallel episodes (TASRL_THREADS overrides). */
TASRL_API int tasrl_thread_count(void);

/* Networks */
TASRL_API int tasrl_network_load(const char* path, tasrl_network** out);
/* name: "feeder13", "feeder123", "chain" or "tree"; size and seed are used by
 * the generated kinds (seed also by feeder123; 0 keeps the shipped one). */
TASRL_API int tasrl_network_make(const char* name, int size, uint64_t seed, tasrl_network** out);
TASRL_API int tasrl_network_save(const tasrl_network* net, const char* path);
TASRL_API int tasrl_network_size(const tasrl_network* net, int* buses, int* controlled);
TASRL_API void tasrl_network_free(tasrl_network* net);

/* Policies (stored with checkpoint metadata) */
TASRL_API int tasrl_policy_initial(const tasrl_network* net, int units, double c, double epsilon, tasrl_policy** out);
/* Validates structure and that the bus set matches `net` (may be NULL). */
TASRL_API int tasrl_policy_load(const char* path, const tasrl_network* net, tasrl_policy** out);
TASRL_API int tasrl_policy_save(const tasrl_policy* policy, const char* path);
TASRL_API int tasrl_policy_training_ineffective(const tasrl_policy* policy, int* flag);
TASRL_API int tasrl_policy_attach_certificate(tasrl_policy* policy, const char* certificate_json);
TASRL_API void tasrl_policy_free(tasrl_policy* policy);

typedef struct tasrl_run_options {
    tasrl_variant variant;
    tasrl_kind kind;
    int count;          /* scenarios */
    uint64_t seed;
    double magnitude_lo; /* disturbance fraction of v_nom */
    double magnitude_hi;
    double alpha;
    double h;
    double gamma;       /* discount */
    int horizon;        /* t_f in steps */
    const char* scenario_path; /* optional scenario file; overrides kind/count */
} tasrl_run_options;

TASRL_API void tasrl_run_options_default(tasrl_run_options* opts);

/* Writes trajectory_<k>.csv and metrics.csv into out_dir (NULL: no files);
 * *summary receives the aggregate metrics table. */
TASRL_API int tasrl_simulate(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                             const char* out_dir, char** summary);

/* Three-variant comparison. Writes benchmark.csv and episodes.csv. */
TASRL_API int tasrl_benchmark(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                              const char* out_dir, char** report);

/* One episode per alpha on the first scenario of opts; writes
 * alpha_<value>.csv and returns a summary that includes the
 * saturation comparison at the most constrained bus. */
TASRL_API int tasrl_alpha_sweep(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                                const double* alphas, size_t n_alphas, const char* out_dir, char** summary);

/* Steady-state optimum for the first scenario of opts. method: "pgd",
 * "oracle" or "auto". Returns TASRL_E_NOT_CONVERGED (report still set) when
 * the iteration limit is hit. */
TASRL_API int tasrl_solve_steady_state(const tasrl_network* net, const tasrl_run_options* opts, const char* method,
                                       double tol, int max_iter, char** report);

typedef struct tasrl_train_options {
    tasrl_method method;
    int episodes;
    int steps;
    int batch;
    double actor_lr;   /* 0: method default */
    double critic_lr;
    int critic_width;
    double perturbation;
    int heldout;
    uint64_t seed;
} tasrl_train_options;

TASRL_API void tasrl_train_options_default(tasrl_train_options* opts);

/* Trains from `start` (NULL: initial policy with d=8, c=0.5, eps=0.1) and
 * returns the result in *out even on TASRL_E_NON_FINITE_LOSS (last finite
 * parameters). *log receives the training log CSV. */
TASRL_API int tasrl_train(const tasrl_network* net, const tasrl_policy* start, const tasrl_train_options* train,
                          const tasrl_run_options* run, tasrl_policy** out, char** log);

typedef struct tasrl_certify_options {
    int trajectories;
    int steps;
    int uniform_samples;
    uint64_t seed;
} tasrl_certify_options;

TASRL_API void tasrl_certify_options_default(tasrl_certify_options* opts);

/* *report receives the certificate JSON; returns TASRL_E_CHECK_FAILED when
 * any violation was counted. */
TASRL_API int tasrl_verify_stability(const tasrl_network* net, const tasrl_policy* policy,
                                     const tasrl_run_options* run, const tasrl_certify_options* opts, char** report);

#ifdef __cplusplus
}
#endif

#endif
