/* C interface to the photonic sensor-network toolkit: closed-form sensitivity
 * bounds, optimal resource allocations, exact outcome distributions, and
 * maximum-likelihood Monte Carlo experiments.
 *
 * Conventions: every function returning int gives QNET_OK (0) on success or a
 * QNET_ERR_* code; qnet_last_error() describes the most recent failure on the
 * calling thread. Vectors are plain arrays of length d (row-major d*d for
 * matrices). Strings returned through char** are heap-allocated; release them
 * with qnet_string_free. Handles are released with their matching *_free.
 */
#ifndef QNET_H
#define QNET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    QNET_OK = 0,
    QNET_ERR_INVALID = 1,     /* bad argument or schema violation */
    QNET_ERR_CUTOFF = 2,      /* truncation captured too little mass */
    QNET_ERR_SINGULAR = 3,    /* information matrix not invertible */
    QNET_ERR_INFEASIBLE = 4,  /* allocation has no nonnegative solution */
    QNET_ERR_TOO_LARGE = 5,   /* state or table exceeds hard size limits */
    QNET_ERR_CONVERGENCE = 6, /* iteration failed to converge */
    QNET_ERR_NOMEM = 7,
    QNET_ERR_UNKNOWN = 8
};

enum {
    QNET_PROBE_VACUUM = 0,
    QNET_PROBE_FOCK = 1,     /* param: photon number (integral) */
    QNET_PROBE_COHERENT = 2, /* param: amplitude */
    QNET_PROBE_SQUEEZED = 3, /* param: squeezing parameter r */
    QNET_PROBE_CAT = 4       /* param: amplitude of the superposed pair */
};

enum { QNET_SCHEME_MS = 0, QNET_SCHEME_ME = 1 };

typedef struct qnet_config qnet_config; /* sensor network: scheme, references, probes */
typedef struct qnet_qfim qnet_qfim;     /* information matrix in rank-one form */

const char* qnet_version(void);
const char* qnet_last_error(void); /* thread-local; empty before any failure */
void qnet_string_free(char* s);

/* ---- probes and configurations ---- */

/* Mean photon number and p-quadrature variance of a probe. */
int qnet_probe_moments(int kind, double param, double* mean_n, double* var_p);

/* Entangled scheme: one probe split over d sensors with weights `splitting`. */
int qnet_config_me(const double* alphas, const double* splitting, int d, int probe_kind,
                   double probe_param, qnet_config** out);

/* Separable scheme: an independent probe per sensor. */
int qnet_config_ms(const double* alphas, int d, const int* probe_kinds,
                   const double* probe_params, qnet_config** out);

/* Budget-optimal builders for estimating v.theta with per-shot total nT and a
 * balanced Fock probe: entangled takes n = round(nT/2) with the remainder in
 * optimally split references; separable rounds each sensor's half-total. */
int qnet_optimal_me_config(const double* v, int d, double nT, qnet_config** out);
int qnet_optimal_ms_config(const double* v, int d, double nT, qnet_config** out);

void qnet_config_free(qnet_config* cfg);
int qnet_config_dim(const qnet_config* cfg);
/* Reference, probe, and combined mean photon numbers. */
int qnet_config_photons(const qnet_config* cfg, double* nc, double* n, double* n_total);
/* Per-probe moments: fills one entry for the entangled scheme, d for the
 * separable one; count receives the number written. Arrays may be NULL. */
int qnet_config_probe_moments(const qnet_config* cfg, double* mean_n, double* var_p, int* count);

/* ---- information matrices and bounds ---- */

int qnet_qfim_compute(const qnet_config* cfg, qnet_qfim** out);
int qnet_qfim_moments(const double* alphas, const double* splitting, int d, double nbar,
                      double var_p, qnet_qfim** out);
void qnet_qfim_free(qnet_qfim* F);
int qnet_qfim_dim(const qnet_qfim* F);
int qnet_qfim_matrix(const qnet_qfim* F, double* out);  /* d*d row-major */
int qnet_qfim_inverse(const qnet_qfim* F, double* out); /* closed form */
int qnet_qfim_kappa(const qnet_qfim* F, double* out);

/* v^T F^{-1} v / m on the support of v. */
int qnet_qcrb(const qnet_qfim* F, const double* v, int m, double* out);
/* Tr[F^{-1}] / m. */
int qnet_sum_of_variances_bound(const qnet_qfim* F, int m, double* out);
/* ||v||_1^2 / (m [nc var_p + n]). */
int qnet_bound_general(double nc, double n, double var_p, int m, const double* v, int d,
                       double* out);
/* ||v||_{2/3}^2 / (m nT^2). */
int qnet_ms_optimal_bound(const double* v, int d, double nT, int m, double* out);
/* ||v||_{2/3}^2 for unit-1-norm v; ranges from 1 to d. */
int qnet_gain(const double* v, int d, double* out);

/* ---- closed-form allocations ---- */

/* Entangled: P_j = |v_j|/||v||_1, alpha_j = sign(v_j) sqrt(nc P_j). Optional
 * probe moments (n, var_p) feed the reported achieved bound. */
int qnet_me_allocation(const double* v, int d, double nc, double n, double var_p, double* alphas,
                       double* splitting, double* achieved);
/* Separable totals proportional to |v_j|^{2/3}, split evenly per sensor. */
int qnet_ms_allocation_norm(const double* v, int d, double nT, double* alphas, double* totals,
                            double* probe_photons, double* achieved);
/* Separable with a fixed shared probe; fails when some alpha_j^2 < 0. */
int qnet_ms_coherent_allocation(const double* v, int d, double nc, double n, double var_p,
                                double* alphas, double* totals, double* achieved);
/* sum_j alpha_j^2 P_j / (alpha_j^2 + P_j n). */
int qnet_kappa(const double* alphas, const double* splitting, int d, double n, double* out);

/* ---- outcome distributions ---- */

/* CSV of the exact outcome table at theta (metadata line, header, rows);
 * config_hash is echoed into the metadata. */
int qnet_table_csv(const qnet_config* cfg, const double* theta, const char* config_hash,
                   char** out_csv);

/* ---- maximum-likelihood experiments ---- */

/* trials repetitions of (draw m outcomes at theta_true -> maximum-likelihood
 * estimate). The same estimates are projected along each of the k rows of
 * vs (k by d, row-major): msf[i] and bias[i] are the fluctuation statistics
 * of vs_i . (Theta - theta_true). flagged counts trials whose search did not
 * converge cleanly. When out_csv is non-NULL it receives the per-trial
 * estimates table. Reproducible for any worker count; workers = 0 uses all
 * cores. */
int qnet_run_experiment(const qnet_config* cfg, const double* theta_true, const double* vs, int k,
                        int m, int trials, uint64_t seed, int workers, double* msf, double* bias,
                        int* flagged, char** out_csv);

/* Sum over axes of the per-phase fluctuation about the truth. */
int qnet_sum_of_variances_experiment(const qnet_config* cfg, const double* theta_true, int m,
                                     int trials, uint64_t seed, int workers, double* out);

/* Fluctuation of v.Theta at each of the k true-phase rows, also normalized by
 * the matching variance bound; boundary[i] flags truths near the domain edge. */
int qnet_theta_sweep(const qnet_config* cfg, const double* v, int m, const double* thetas, int k,
                     int trials, uint64_t seed, int workers, double* msf, double* normalized,
                     int* boundary);

/* Shot-number search at fixed total budget total_N over the candidate list,
 * using the budget-optimal builder for the given scheme. curve_msf (length
 * ncand) receives the per-candidate fluctuations. */
int qnet_find_m_opt(int scheme, const double* v, int d, double total_N, const int* candidates,
                    int ncand, const double* theta_true, int trials, uint64_t seed, int workers,
                    int* m_opt, double* curve_msf);

/* One-parameter least squares of msf(N_T) against the scheme's decay model.
 * Writes gamma and the residual; out_json (optional) receives the result as a
 * JSON object. */
int qnet_fit_gamma(const double* nT, const double* msf, int npoints, int m_opt, int d, int scheme,
                   double* gamma, double* residual, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QNET_H */
