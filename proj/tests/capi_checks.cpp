// Checks of the C surface, linked against the shared library only: handle
// lifecycles, known closed-form anchors, determinism, and the error-code
// mapping.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <qnet/qnet.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

struct ConfigHandle {
    qnet_config* h = nullptr;
    ~ConfigHandle() { qnet_config_free(h); }
};

struct QfimHandle {
    qnet_qfim* h = nullptr;
    ~QfimHandle() { qnet_qfim_free(h); }
};

}  // namespace

TEST_CASE("version and probe moments") {
    CHECK(std::string(qnet_version()) == "qnet 0.1.0");

    double mean = -1.0, var = -1.0;
    REQUIRE(qnet_probe_moments(QNET_PROBE_FOCK, 2.0, &mean, &var) == QNET_OK);
    CHECK(mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(var == doctest::Approx(5.0).epsilon(1e-12));

    REQUIRE(qnet_probe_moments(QNET_PROBE_VACUUM, 0.0, &mean, &var) == QNET_OK);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(qnet_probe_moments(QNET_PROBE_FOCK, 2.5, &mean, &var) == QNET_ERR_INVALID);
    CHECK(qnet_probe_moments(99, 1.0, &mean, &var) == QNET_ERR_INVALID);
    CHECK(std::strlen(qnet_last_error()) > 0);
}

TEST_CASE("config construction and photon accounting") {
    const double alphas[2] = {2.0, -2.0};
    const double splitting[2] = {0.5, 0.5};
    ConfigHandle cfg;
    REQUIRE(qnet_config_me(alphas, splitting, 2, QNET_PROBE_FOCK, 8.0, &cfg.h) == QNET_OK);
    CHECK(qnet_config_dim(cfg.h) == 2);

    double nc = 0, n = 0, total = 0;
    REQUIRE(qnet_config_photons(cfg.h, &nc, &n, &total) == QNET_OK);
    CHECK(nc == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(n == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(total == doctest::Approx(16.0).epsilon(1e-12));

    const double bad_split[2] = {0.7, 0.7};
    qnet_config* out = nullptr;
    CHECK(qnet_config_me(alphas, bad_split, 2, QNET_PROBE_FOCK, 1.0, &out) == QNET_ERR_INVALID);
    CHECK(out == nullptr);
    CHECK(std::strlen(qnet_last_error()) > 0);
}

TEST_CASE("information matrix, inverse, and variance bounds") {
    const double alphas[2] = {2.0, -2.0};
    const double splitting[2] = {0.5, 0.5};
    ConfigHandle cfg;
    REQUIRE(qnet_config_me(alphas, splitting, 2, QNET_PROBE_FOCK, 8.0, &cfg.h) == QNET_OK);

    QfimHandle F;
    REQUIRE(qnet_qfim_compute(cfg.h, &F.h) == QNET_OK);
    CHECK(qnet_qfim_dim(F.h) == 2);

    double M[4];
    REQUIRE(qnet_qfim_matrix(F.h, M) == QNET_OK);
    CHECK(M[0] == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(M[1] == doctest::Approx(-32.0).epsilon(1e-12));
    CHECK(M[2] == doctest::Approx(-32.0).epsilon(1e-12));
    CHECK(M[3] == doctest::Approx(40.0).epsilon(1e-12));

    double inv[4];
    REQUIRE(qnet_qfim_inverse(F.h, inv) == QNET_OK);
    CHECK(inv[0] == doctest::Approx(40.0 / 576.0).epsilon(1e-12));
    CHECK(inv[1] == doctest::Approx(32.0 / 576.0).epsilon(1e-12));

    const double v[2] = {0.5, -0.5};
    double b = 0;
    REQUIRE(qnet_qcrb(F.h, v, 1, &b) == QNET_OK);
    CHECK(b == doctest::Approx(1.0 / 144.0).epsilon(1e-12));

    REQUIRE(qnet_sum_of_variances_bound(F.h, 1, &b) == QNET_OK);
    CHECK(b == doctest::Approx(80.0 / 576.0).epsilon(1e-12));

    REQUIRE(qnet_bound_general(6.0, 6.0, 1.0, 100, v, 2, &b) == QNET_OK);
    CHECK(b == doctest::Approx(1.0 / 1200.0).epsilon(1e-12));

    REQUIRE(qnet_gain(v, 2, &b) == QNET_OK);
    CHECK(b == doctest::Approx(2.0).epsilon(1e-12));

    // No references and no probe photons: nothing to invert.
    const double zero[2] = {0.0, 0.0};
    QfimHandle Z;
    REQUIRE(qnet_qfim_moments(zero, splitting, 2, 0.0, 1.0, &Z.h) == QNET_OK);
    CHECK(qnet_qfim_inverse(Z.h, inv) == QNET_ERR_SINGULAR);
}

TEST_CASE("budget-optimal builders reproduce the tuned configuration") {
    const double v[2] = {0.5, -0.5};
    ConfigHandle me;
    REQUIRE(qnet_optimal_me_config(v, 2, 16.0, &me.h) == QNET_OK);
    double nc = 0, n = 0, total = 0;
    REQUIRE(qnet_config_photons(me.h, &nc, &n, &total) == QNET_OK);
    CHECK(nc == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(n == doctest::Approx(8.0).epsilon(1e-12));

    QfimHandle F;
    REQUIRE(qnet_qfim_compute(me.h, &F.h) == QNET_OK);
    double b = 0;
    REQUIRE(qnet_qcrb(F.h, v, 1, &b) == QNET_OK);
    CHECK(b == doctest::Approx(1.0 / 144.0).epsilon(1e-12));

    ConfigHandle ms;
    REQUIRE(qnet_optimal_ms_config(v, 2, 16.0, &ms.h) == QNET_OK);
    QfimHandle G;
    REQUIRE(qnet_qfim_compute(ms.h, &G.h) == QNET_OK);
    double M[4];
    REQUIRE(qnet_qfim_matrix(G.h, M) == QNET_OK);
    CHECK(M[0] == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(M[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(M[3] == doctest::Approx(40.0).epsilon(1e-12));
    REQUIRE(qnet_qcrb(G.h, v, 1, &b) == QNET_OK);
    CHECK(b == doctest::Approx(1.0 / 80.0).epsilon(1e-12));
}

TEST_CASE("allocation surface") {
    const double v[2] = {0.5, -0.5};
    double alphas[2], split[2], achieved = 0;
    REQUIRE(qnet_me_allocation(v, 2, 8.0, 0.0, 1.0, alphas, split, &achieved) == QNET_OK);
    CHECK(alphas[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(alphas[1] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(split[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(achieved == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

    const double w[2] = {1.0, 1.0};
    double totals[2], probe[2];
    REQUIRE(qnet_ms_allocation_norm(w, 2, 16.0, alphas, totals, probe, &achieved) == QNET_OK);
    CHECK(totals[0] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(probe[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(achieved == doctest::Approx(8.0 / 256.0).epsilon(1e-12));

    double mb = 0;
    REQUIRE(qnet_ms_optimal_bound(w, 2, 16.0, 1, &mb) == QNET_OK);
    CHECK(mb == doctest::Approx(achieved).epsilon(1e-12));

    // Probe too bright for the requested weights: no nonnegative solution.
    const double skew[2] = {0.9, 0.1};
    CHECK(qnet_ms_coherent_allocation(skew, 2, 1.0, 10.0, 1.0, alphas, totals, &achieved) ==
          QNET_ERR_INFEASIBLE);

    double kap = 0;
    const double a1[1] = {2.0};
    const double p1[1] = {1.0};
    REQUIRE(qnet_kappa(a1, p1, 1, 4.0, &kap) == QNET_OK);
    CHECK(kap == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("outcome table export") {
    const double alphas[1] = {1.0};
    const double splitting[1] = {1.0};
    ConfigHandle cfg;
    REQUIRE(qnet_config_me(alphas, splitting, 1, QNET_PROBE_FOCK, 1.0, &cfg.h) == QNET_OK);

    const double theta[1] = {1.0};
    char* csv = nullptr;
    REQUIRE(qnet_table_csv(cfg.h, theta, "deadbeef", &csv) == QNET_OK);
    REQUIRE(csv != nullptr);
    const std::string body(csv);
    qnet_string_free(csv);
    CHECK(body.rfind("#", 0) == 0);
    CHECK(body.find("deadbeef") != std::string::npos);
    CHECK(body.find("\r\n") != std::string::npos);
}

TEST_CASE("experiment driver: projections, determinism, export") {
    const double alphas[1] = {std::sqrt(3.0)};
    const double splitting[1] = {1.0};
    ConfigHandle cfg;
    REQUIRE(qnet_config_me(alphas, splitting, 1, QNET_PROBE_FOCK, 1.0, &cfg.h) == QNET_OK);

    const double theta[1] = {1.2};
    const double vs[2] = {1.0, 2.0};  // two projection rows, k = 2
    double msf[2], bias[2];
    int flagged = -1;
    char* csv = nullptr;
    REQUIRE(qnet_run_experiment(cfg.h, theta, vs, 2, 12, 6, 77, 2, msf, bias, &flagged, &csv) ==
            QNET_OK);
    REQUIRE(csv != nullptr);
    const std::string body(csv);
    qnet_string_free(csv);
    CHECK(body.find("msf=") != std::string::npos);
    CHECK(flagged >= 0);
    // Scaling a projection row scales the statistics exactly.
    CHECK(msf[1] == doctest::Approx(4.0 * msf[0]).epsilon(1e-12));
    CHECK(bias[1] == doctest::Approx(2.0 * bias[0]).epsilon(1e-12));

    double msf2[2], bias2[2];
    REQUIRE(qnet_run_experiment(cfg.h, theta, vs, 2, 12, 6, 77, 1, msf2, bias2, nullptr, nullptr) ==
            QNET_OK);
    CHECK(std::memcmp(msf, msf2, sizeof msf) == 0);  // worker count changes nothing
    CHECK(std::memcmp(bias, bias2, sizeof bias) == 0);
}

TEST_CASE("phase sweep flags edge truths") {
    const double alphas[1] = {std::sqrt(3.0)};
    const double splitting[1] = {1.0};
    ConfigHandle cfg;
    REQUIRE(qnet_config_me(alphas, splitting, 1, QNET_PROBE_FOCK, 1.0, &cfg.h) == QNET_OK);

    const double v[1] = {1.0};
    const double pts[2] = {0.05, 1.5707963267948966};
    double msf[2], norm[2];
    int boundary[2];
    REQUIRE(qnet_theta_sweep(cfg.h, v, 8, pts, 2, 5, 11, 1, msf, norm, boundary) == QNET_OK);
    CHECK(boundary[0] == 1);
    CHECK(boundary[1] == 0);
    CHECK(msf[1] >= 0.0);
    CHECK(norm[1] >= 0.0);
}

TEST_CASE("shot-number search over the balanced family") {
    const double v[1] = {1.0};
    const double theta[1] = {1.5707963267948966};
    const int candidates[2] = {5, 15};
    int m_opt = 0;
    double curve[2];
    REQUIRE(qnet_find_m_opt(QNET_SCHEME_ME, v, 1, 60.0, candidates, 2, theta, 4, 3, 1, &m_opt,
                            curve) == QNET_OK);
    CHECK((m_opt == 5 || m_opt == 15));
    CHECK(curve[0] >= 0.0);
    CHECK(curve[1] >= 0.0);
    CHECK(qnet_find_m_opt(7, v, 1, 60.0, candidates, 2, theta, 4, 3, 1, &m_opt, curve) ==
          QNET_ERR_INVALID);
}

TEST_CASE("decay-model fit through the C surface") {
    const int m_opt = 36;
    const double g_true = 2.36;
    double nT[4], msf[4];
    for (int i = 0; i < 4; ++i) {
        nT[i] = 288.0 + 144.0 * i;
        msf[i] = g_true * m_opt / (nT[i] * nT[i] + 2.0 * nT[i] * m_opt);
    }
    double gamma = 0, residual = -1;
    char* json = nullptr;
    REQUIRE(qnet_fit_gamma(nT, msf, 4, m_opt, 2, QNET_SCHEME_ME, &gamma, &residual, &json) ==
            QNET_OK);
    REQUIRE(json != nullptr);
    const std::string body(json);
    qnet_string_free(json);
    CHECK(gamma == doctest::Approx(g_true).epsilon(1e-9));
    CHECK(residual <= 1e-18);
    CHECK(body.find("\"gamma\"") != std::string::npos);

    CHECK(qnet_fit_gamma(nT, msf, 2, m_opt, 2, QNET_SCHEME_ME, &gamma, &residual, nullptr) ==
          QNET_ERR_INVALID);
}
