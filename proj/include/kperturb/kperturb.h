/*
 * kperturb: nonlocal perturbations of space-time transition kernels on
 * discretized grids, with certified series truncation and an alpha-stable
 * application suite.
 *
 * C interface: opaque handles and status codes. Distinct handles may be used
 * from distinct threads; a single handle must not be shared without external
 * synchronization.
 */

#ifndef KPERTURB_H
#define KPERTURB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kp_status {
    KP_OK = 0,
    KP_ERR_INVALID_ARGUMENT = 1,
    KP_ERR_PRECONDITION = 2,
    KP_ERR_NO_CONVERGENCE = 3,
    KP_ERR_UNSUPPORTED_PERTURBATION = 4,
    KP_ERR_ALIASING = 5,
    KP_ERR_CONFIG = 6,
    KP_ERR_IO = 7,
    KP_ERR_INTERNAL = 8
} kp_status;

/* Opaque experiment handle: one configuration, one subcommand run. */
typedef struct kp_experiment kp_experiment;

const char* kp_version(void);
const char* kp_status_name(kp_status status);

/* Create from a JSON configuration document (strict schema; unknown keys are
 * rejected with KP_ERR_CONFIG). On success *out owns the handle. */
kp_status kp_experiment_create(const char* config_json, kp_experiment** out);
kp_status kp_experiment_create_from_file(const char* path, kp_experiment** out);
void kp_experiment_destroy(kp_experiment* exp);

/* Optional overrides applied before running. */
kp_status kp_experiment_set_seed(kp_experiment* exp, uint64_t seed);
kp_status kp_experiment_set_threads(kp_experiment* exp, int threads);

/* subcommand: "stable" | "perturb" | "meyer" | "fundsol".
 * Returns KP_OK when the experiment executed; mathematical check failures are
 * reported through kp_experiment_checks_passed and the report document. */
kp_status kp_experiment_run(kp_experiment* exp, const char* subcommand);

/* JSON report of the last run; owned by the handle, valid until the next run
 * or destroy. NULL if the experiment has not run. */
const char* kp_experiment_report(const kp_experiment* exp);

/* 1 if every check of the last run passed, 0 if any failed, -1 if not run. */
int kp_experiment_checks_passed(const kp_experiment* exp);

/* Writes report.json and the CSV artifacts of the last run. Pass NULL to use
 * the configuration's output_dir. Outputs are byte-deterministic for a fixed
 * configuration and seed. */
kp_status kp_experiment_write_outputs(kp_experiment* exp, const char* output_dir);

/* Process-wide worker-thread count (0 restores the hardware default). */
kp_status kp_set_threads(int threads);

/* Message for the most recent failure on this handle (empty if none). */
const char* kp_experiment_last_error(const kp_experiment* exp);

/* Stateless helper: alpha-stable density p_t on the lattice
 * {-L + i (2L/n)}^dim, written to values (n^dim doubles, row major). The
 * optional truncation_mass receives the density mass outside the box. */
kp_status kp_stable_density(double alpha, int dim, double t, double half_width, int n_per_dim,
                            double* values, double* truncation_mass);

/* Runs the full acceptance suite (criteria 1-15). With verbose != 0, one
 * pass/fail line per criterion is printed to stdout. *all_passed receives
 * 1/0; *report_json (optional) receives a malloc'd JSON document to be
 * released with kp_string_free. */
kp_status kp_selftest(int verbose, int* all_passed, char** report_json);

void kp_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* KPERTURB_H */
