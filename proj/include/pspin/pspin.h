/* C interface to the spherical mixed p-spin toolkit. */
#ifndef PSPIN_PSPIN_H
#define PSPIN_PSPIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(PSPIN_BUILDING)
#define PSPIN_API __attribute__((visibility("default")))
#else
#define PSPIN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pspin_status {
  PSPIN_OK = 0,
  PSPIN_E_INVALID_ARGUMENT = 1,
  PSPIN_E_PRECONDITION = 2,
  PSPIN_E_DOMAIN = 3,
  PSPIN_E_NOT_CONVERGED = 4,
  PSPIN_E_RESOURCE = 5,
  PSPIN_E_INCONSISTENT = 6,
  PSPIN_E_CONFIG = 7,
  PSPIN_E_IO = 8,
  PSPIN_E_INTERNAL = 9
} pspin_status;

typedef enum pspin_phase { PSPIN_PHASE_RS = 0, PSPIN_PHASE_ONE_RSB = 1, PSPIN_PHASE_FULL_RSB = 2, PSPIN_PHASE_OTHER = 3 } pspin_phase;

typedef enum pspin_phase_class {
  PSPIN_CLASS_RS = 0,
  PSPIN_CLASS_FULL_RSB = 1,
  PSPIN_CLASS_ONE_RSB_PURE = 2,
  PSPIN_CLASS_OTHER = 3
} pspin_phase_class;

typedef struct pspin_mixture pspin_mixture;
typedef struct pspin_solution pspin_solution;
typedef struct pspin_chaos pspin_chaos;
typedef struct pspin_disorder pspin_disorder;

/* Message of the last failing call on this thread; never NULL. */
PSPIN_API const char* pspin_last_error(void);
PSPIN_API const char* pspin_version(void);

/* Mixture: degrees[i] >= 2 with coefficient gamma[i] >= 0 (unsquared). */
PSPIN_API pspin_status pspin_mixture_create(const int* degrees, const double* gamma, size_t n, double h,
                                            pspin_mixture** out);
PSPIN_API void pspin_mixture_destroy(pspin_mixture* m);
PSPIN_API pspin_status pspin_mixture_xi(const pspin_mixture* m, double s, int order, double* out);
PSPIN_API int pspin_mixture_is_even(const pspin_mixture* m);
PSPIN_API pspin_status pspin_classify_phase(const pspin_mixture* m, pspin_phase_class* out);

/* Zero-temperature solver. On PSPIN_E_NOT_CONVERGED *out still holds the best iterate. */
PSPIN_API pspin_status pspin_minimize_q(const pspin_mixture* m, size_t grid_size, double tol, int max_iters,
                                        double margin, pspin_solution** out);
PSPIN_API void pspin_solution_destroy(pspin_solution* s);
PSPIN_API double pspin_solution_gs(const pspin_solution* s);
PSPIN_API double pspin_solution_q0(const pspin_solution* s);
PSPIN_API double pspin_solution_L(const pspin_solution* s);
PSPIN_API pspin_phase pspin_solution_phase(const pspin_solution* s);
/* certificate fields; passes is set to 1 when the certificate holds at tol */
PSPIN_API pspin_status pspin_solution_certificate(const pspin_solution* s, double tol, double* min_g,
                                                  double* eq_residual, int* passes);
/* copies up to cap alpha values and left grid nodes; returns the number of cells */
PSPIN_API size_t pspin_solution_alpha(const pspin_solution* s, double* alpha, double* grid_left, size_t cap);

/* Disorder chaos, even mixtures only. */
PSPIN_API pspin_status pspin_chaos_create(const pspin_solution* s, pspin_chaos** out);
PSPIN_API void pspin_chaos_destroy(pspin_chaos* c);
PSPIN_API pspin_status pspin_chaos_u_t(const pspin_chaos* c, double t, double* out);
PSPIN_API pspin_status pspin_chaos_chi(const pspin_chaos* c, int quad_points, double* out);
PSPIN_API pspin_status pspin_chaos_E(const pspin_chaos* c, double t, double u, double lambda, double* out);
PSPIN_API pspin_status pspin_chaos_error_term(const pspin_chaos* c, double t, double u, double* out);

/* Finite temperature: F(beta) = min over k-step order parameters; L_beta = int beta x. */
PSPIN_API pspin_status pspin_free_energy(const pspin_mixture* m, double beta, int k, uint64_t seed, double* F,
                                         double* L_beta);

/* Monte Carlo. */
PSPIN_API pspin_status pspin_disorder_sample(const pspin_mixture* m, int N, uint64_t seed, pspin_disorder** out);
PSPIN_API void pspin_disorder_destroy(pspin_disorder* d);
PSPIN_API pspin_status pspin_energy(const pspin_disorder* d, const double* sigma, size_t n, double* out);
/* best of `restarts` Riemannian ascents; sigma (length N) may be NULL */
PSPIN_API pspin_status pspin_ground_state(const pspin_disorder* d, int restarts, int max_iters, double grad_tol,
                                          double* energy, double* sigma, int* converged);
PSPIN_API pspin_status pspin_sk_eigen_oracle(const pspin_disorder* d, double* out);

/* Runs a CLI subcommand (solve | phase | chaos | simulate | verify); *exit_code gets the process exit code.
   out_dir may be NULL. */
PSPIN_API pspin_status pspin_run(const char* command, const char* config_path, const char* out_dir, int threads,
                                 uint64_t seed_offset, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
