/*
 * C interface to the gwi toolkit.
 *
 * Every function returns a gwi_status. On failure the message is available
 * from gwi_last_error() on the calling thread until the next failing call.
 * Strings returned through char** are owned by the caller and released with
 * gwi_string_free. Matrices are row-major. Type and coordinate indices are
 * 0-based.
 */
#ifndef GWI_H
#define GWI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(GWI_BUILDING_LIBRARY)
#define GWI_API __declspec(dllexport)
#else
#define GWI_API __declspec(dllimport)
#endif
#else
#define GWI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gwi_status {
    GWI_OK = 0,
    GWI_ERR_INVALID_ARGUMENT = 1,
    GWI_ERR_DIMENSION = 2,
    GWI_ERR_OVERFLOW = 3,
    GWI_ERR_CONSISTENCY = 4,
    GWI_ERR_IO = 5,
    GWI_ERR_INTERNAL = 6
} gwi_status;

typedef struct gwi_model gwi_model;
/* A batch of trajectories of equal length. */
typedef struct gwi_trajectory gwi_trajectory;

GWI_API const char* gwi_version(void);
GWI_API const char* gwi_last_error(void);
GWI_API const char* gwi_status_name(gwi_status status);
GWI_API void gwi_string_free(char* text);

/* Models */
GWI_API gwi_status gwi_model_from_json(const char* json, gwi_model** out);
GWI_API gwi_status gwi_model_from_file(const char* path, gwi_model** out);
GWI_API void gwi_model_free(gwi_model* model);
GWI_API gwi_status gwi_model_to_json(const gwi_model* model, char** out);
GWI_API gwi_status gwi_model_types(const gwi_model* model, size_t* out);
/* p*p entries; column j is the mean offspring vector of type j. */
GWI_API gwi_status gwi_model_mean_matrix(const gwi_model* model, double* out);
GWI_API gwi_status gwi_model_immigration_mean(const gwi_model* model, double* out);
/* index 0: immigration covariance; index i >= 1: offspring covariance of type i - 1. */
GWI_API gwi_status gwi_model_variance(const gwi_model* model, size_t index, double* out);
/* Criticality, normal form, case and exponents as a JSON object. */
GWI_API gwi_status gwi_classify(const gwi_model* model, char** out_json);

/* Simulation */
GWI_API gwi_status gwi_simulate(const gwi_model* model, size_t steps, size_t replicas, uint64_t seed,
                                unsigned threads, int per_individual, gwi_trajectory** out);
GWI_API void gwi_trajectory_free(gwi_trajectory* batch);
GWI_API gwi_status gwi_trajectory_shape(const gwi_trajectory* batch, size_t* replicas, size_t* steps,
                                        size_t* types);
/* (steps + 1) * types entries. */
GWI_API gwi_status gwi_trajectory_states(const gwi_trajectory* batch, size_t replica, int64_t* out);
/* steps * types entries, row k - 1 holds M_k. */
GWI_API gwi_status gwi_martingale_increments(const gwi_model* model, const gwi_trajectory* batch, size_t replica,
                                             double* out);
/* 7 * (steps + 1) entries in the order x1_1, x2_1, x2_2, x3_1, x3_2, x3_3, x3_4. */
GWI_API gwi_status gwi_decomposition(const gwi_model* model, const gwi_trajectory* batch, size_t replica,
                                     double* out, double* max_residual);
/* Runs the weighted-sum identity battery; JSON with per-identity failure counts. */
GWI_API gwi_status gwi_identities_run(int64_t max_k, size_t trials, uint64_t seed, unsigned threads,
                                      char** out_json, int* all_hold);

/* Moments */
GWI_API gwi_status gwi_mean_vector(const gwi_model* model, int64_t k, double* out);
GWI_API gwi_status gwi_variance_matrix(const gwi_model* model, int64_t k, double* out);
/* Growth exponents, first immigrant indices, leading terms and growth targets. */
GWI_API gwi_status gwi_growth_exponents(const gwi_model* model, char** out_json);

/* Limit systems. A system is described by JSON:
 * {"case": c, "b": [..3], "v": [..3], "a21": x, "a31": y, "a32": z}. */
GWI_API gwi_status gwi_limit_system_from_model(const gwi_model* model, char** out_json);
/* Number of grid points for (horizon, dt). */
GWI_API gwi_status gwi_sde_grid_size(double horizon, double dt, size_t* out);
/* paths * grid_size * 3 entries, path-major; path p uses stream p of seed. */
GWI_API gwi_status gwi_sde_simulate(const char* system_json, double horizon, double dt, size_t paths,
                                    uint64_t seed, unsigned threads, double* out);

/* Harness */
GWI_API gwi_status gwi_converge_run(const gwi_model* model, const char* config_json, unsigned threads,
                                    char** report_json, char** report_csv);
/* config: {"n_list": [...], "replicas": r, "seed": s}; result lists every quantity and coordinate. */
GWI_API gwi_status gwi_growth_fit(const gwi_model* model, const char* config_json, unsigned threads,
                                  char** out_json);

/* Statistics */
GWI_API gwi_status gwi_ks_two_sample(const double* xs, size_t n, const double* ys, size_t m, double* statistic,
                                     double* p_value);
GWI_API gwi_status gwi_wasserstein1(const double* xs, size_t n, const double* ys, size_t m, double* out);

#ifdef __cplusplus
}
#endif

#endif /* GWI_H */
