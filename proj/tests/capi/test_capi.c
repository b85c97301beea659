/* Exercises the C interface from C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "gwi/gwi.h"

static int failures = 0;

#define EXPECT(cond)                                                        \
    do {                                                                    \
        if (!(cond)) {                                                      \
            fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__,    \
                    __LINE__, #cond);                                       \
            ++failures;                                                     \
        }                                                                   \
    } while (0)

#define EXPECT_OK(call) EXPECT((call) == GWI_OK)

static const char* kCase4 =
    "{\"p\":3,"
    "\"offspring\":["
    "{\"kind\":\"Poisson\",\"params\":{\"mean\":[1,1,0.5]}},"
    "{\"kind\":\"Poisson\",\"params\":{\"mean\":[0,1,1]}},"
    "{\"kind\":\"Poisson\",\"params\":{\"mean\":[0,0,1]}}],"
    "\"immigration\":{\"kind\":\"Poisson\",\"params\":{\"mean\":[1,0.5,0.5]}}}";

static void test_errors(void) {
    gwi_model* m = NULL;
    EXPECT(gwi_model_from_json("{not json", &m) == GWI_ERR_INVALID_ARGUMENT);
    EXPECT(m == NULL);
    EXPECT(strlen(gwi_last_error()) > 0);
    EXPECT(gwi_model_from_file("/nonexistent/model.json", &m) == GWI_ERR_IO);
    EXPECT(gwi_model_from_json(
               "{\"p\":2,\"offspring\":[{\"kind\":\"Poisson\",\"params\":{\"mean\":[1]}},"
               "{\"kind\":\"Poisson\",\"params\":{\"mean\":[1]}}],"
               "\"immigration\":{\"kind\":\"Poisson\",\"params\":{\"mean\":[1,1]}}}",
               &m) == GWI_ERR_DIMENSION);
    EXPECT(gwi_model_types(NULL, NULL) == GWI_ERR_INVALID_ARGUMENT);
    EXPECT(strcmp(gwi_status_name(GWI_ERR_OVERFLOW), "overflow") == 0);
    EXPECT(strlen(gwi_version()) > 0);
}

static void test_model(gwi_model* m) {
    size_t p = 0;
    double a[9], b[3], v[9];
    char* json = NULL;
    EXPECT_OK(gwi_model_types(m, &p));
    EXPECT(p == 3);
    EXPECT_OK(gwi_model_mean_matrix(m, a));
    EXPECT(a[3] == 1.0 && a[6] == 0.5 && a[7] == 1.0 && a[1] == 0.0);
    EXPECT_OK(gwi_model_immigration_mean(m, b));
    EXPECT(b[0] == 1.0 && b[1] == 0.5);
    EXPECT_OK(gwi_model_variance(m, 0, v));
    EXPECT(v[0] == 1.0 && v[4] == 0.5 && v[1] == 0.0);
    EXPECT(gwi_model_variance(m, 4, v) != GWI_OK);

    EXPECT_OK(gwi_classify(m, &json));
    EXPECT(strstr(json, "\"critical\"") != NULL);
    gwi_string_free(json);
    EXPECT_OK(gwi_growth_exponents(m, &json));
    EXPECT(strstr(json, "\"eta\"") != NULL);
    gwi_string_free(json);
    EXPECT_OK(gwi_model_to_json(m, &json));
    gwi_model* copy = NULL;
    EXPECT_OK(gwi_model_from_json(json, &copy));
    gwi_model_free(copy);
    gwi_string_free(json);
}

static void test_moments(gwi_model* m) {
    double mean[3], var[9];
    /* E X_2 = b + A b = (2, 2, 2) for this model. */
    EXPECT_OK(gwi_mean_vector(m, 2, mean));
    EXPECT(fabs(mean[0] - 2) < 1e-12 && fabs(mean[1] - 2) < 1e-12 && fabs(mean[2] - 2) < 1e-12);
    EXPECT_OK(gwi_variance_matrix(m, 1, var));
    EXPECT(fabs(var[0] - 1.0) < 1e-12);
    EXPECT(gwi_mean_vector(m, -1, mean) == GWI_ERR_INVALID_ARGUMENT);
}

static void test_simulation(gwi_model* m) {
    gwi_trajectory* t1 = NULL;
    gwi_trajectory* t2 = NULL;
    size_t r, k, p;
    int64_t s1[33], s2[33];
    double dec[7 * 11], resid = 1.0, inc[30];
    EXPECT_OK(gwi_simulate(m, 10, 4, 5, 1, 0, &t1));
    EXPECT_OK(gwi_simulate(m, 10, 4, 5, 3, 0, &t2));
    EXPECT_OK(gwi_trajectory_shape(t1, &r, &k, &p));
    EXPECT(r == 4 && k == 10 && p == 3);
    for (size_t i = 0; i < 4; ++i) {
        EXPECT_OK(gwi_trajectory_states(t1, i, s1));
        EXPECT_OK(gwi_trajectory_states(t2, i, s2));
        EXPECT(memcmp(s1, s2, sizeof s1) == 0);
    }
    EXPECT(gwi_trajectory_states(t1, 4, s1) != GWI_OK);
    EXPECT_OK(gwi_martingale_increments(m, t1, 0, inc));
    EXPECT_OK(gwi_decomposition(m, t1, 0, dec, &resid));
    EXPECT(resid <= 1e-9);
    gwi_trajectory_free(t1);
    gwi_trajectory_free(t2);

    char* json = NULL;
    int all_hold = 0;
    EXPECT_OK(gwi_identities_run(50, 50, 1, 1, &json, &all_hold));
    EXPECT(all_hold == 1);
    gwi_string_free(json);
}

static void test_sde(gwi_model* m) {
    char* system = NULL;
    size_t points = 0;
    EXPECT_OK(gwi_limit_system_from_model(m, &system));
    EXPECT_OK(gwi_sde_grid_size(1.0, 0.01, &points));
    EXPECT(points == 101);
    double* a = malloc(sizeof(double) * 2 * points * 3);
    double* b = malloc(sizeof(double) * 2 * points * 3);
    EXPECT_OK(gwi_sde_simulate(system, 1.0, 0.01, 2, 3, 1, a));
    EXPECT_OK(gwi_sde_simulate(system, 1.0, 0.01, 2, 3, 2, b));
    EXPECT(memcmp(a, b, sizeof(double) * 2 * points * 3) == 0);
    EXPECT(a[0] == 0.0);
    EXPECT(gwi_sde_simulate("{\"case\":9}", 1.0, 0.01, 2, 3, 1, a) == GWI_ERR_INVALID_ARGUMENT);
    free(a);
    free(b);
    gwi_string_free(system);
}

static void test_stats(void) {
    const double x[] = {0, 1, 2, 3};
    const double y[] = {1, 2, 3, 4};
    double d = 0, pv = 0, w = 0;
    EXPECT_OK(gwi_ks_two_sample(x, 4, y, 4, &d, &pv));
    EXPECT(fabs(d - 0.25) < 1e-15);
    EXPECT(pv > 0.5);
    EXPECT_OK(gwi_wasserstein1(x, 4, y, 4, &w));
    EXPECT(fabs(w - 1.0) < 1e-15);
}

int main(void) {
    gwi_model* m = NULL;
    test_errors();
    if (gwi_model_from_json(kCase4, &m) != GWI_OK) {
        fprintf(stderr, "model: %s\n", gwi_last_error());
        return 1;
    }
    test_model(m);
    test_moments(m);
    test_simulation(m);
    test_sde(m);
    test_stats();
    gwi_model_free(m);
    if (failures) fprintf(stderr, "%d failures\n", failures);
    else printf("C API tests passed\n");
    return failures ? 1 : 0;
}
