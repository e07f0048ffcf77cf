#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "allocate.hpp"
#include "errors.hpp"
#include "fisher.hpp"
#include "rng.hpp"

using namespace qnet;

namespace {

std::vector<double> random_weights(std::mt19937_64& g, int d, double floor_mag) {
    std::vector<double> v(d);
    for (double& x : v) {
        x = floor_mag + (1.0 - floor_mag) * uniform01(g);
        if (uniform01(g) < 0.5) x = -x;
    }
    return v;
}

double sum_sq(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

}  // namespace

TEST_CASE("entangled allocation: closed-form references and splitting") {
    auto plan = me_allocation({0.5, -0.5}, 6.0);
    CHECK(std::abs(plan.alphas[0] - std::sqrt(3.0)) <= 1e-12);
    CHECK(std::abs(plan.alphas[1] + std::sqrt(3.0)) <= 1e-12);
    CHECK(plan.splitting[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(plan.splitting[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(plan.achieved_bound - 1.0 / 6.0) <= 1e-15);

    auto solo = me_allocation({1.0, 0.0, 0.0}, 4.0);
    CHECK(solo.alphas == std::vector<double>{2.0, 0.0, 0.0});
    CHECK(solo.splitting == std::vector<double>{1.0, 0.0, 0.0});

    auto skew = me_allocation({0.8, 0.2}, 10.0);
    CHECK(std::abs(skew.alphas[0] - std::sqrt(8.0)) <= 1e-12);
    CHECK(std::abs(skew.alphas[1] - std::sqrt(2.0)) <= 1e-12);
    CHECK(std::abs(skew.splitting[0] - 0.8) <= 1e-12);

    // with probe moments the attained bound picks up the variance budget
    auto probed = me_allocation({0.5, -0.5}, 6.0, 6.0, 13.0);
    CHECK(std::abs(probed.achieved_bound - 1.0 / 84.0) <= 1e-15);

    CHECK_THROWS_AS(me_allocation({0.0, 0.0}, 6.0), std::invalid_argument);
    CHECK_THROWS_AS(me_allocation({0.5, 0.5}, 0.0), std::invalid_argument);

    auto g = stream_rng(611, 0);
    for (int rep = 0; rep < 500; ++rep) {
        int d = 1 + static_cast<int>(uniform01(g) * 5);
        double nc = 0.2 + 8.0 * uniform01(g);
        auto p = me_allocation(random_weights(g, d, 0.0), nc);
        CHECK(std::abs(sum_sq(p.alphas) - nc) <= 1e-12);
        double psum = 0.0;
        for (double x : p.splitting) {
            CHECK(x >= 0.0);
            psum += x;
        }
        CHECK(std::abs(psum - 1.0) <= 1e-12);
    }
}

TEST_CASE("separable allocation by 2/3-norm shares") {
    auto plan = ms_allocation_norm({0.5, 0.5}, 16.0);
    CHECK(std::abs(plan.splitting[0] - 8.0) <= 1e-12);
    CHECK(std::abs(plan.splitting[1] - 8.0) <= 1e-12);
    CHECK(std::abs(plan.alphas[0] * plan.alphas[0] - 4.0) <= 1e-12);
    CHECK(std::abs(plan.probe_photons[0] - 4.0) <= 1e-12);
    CHECK(std::abs(plan.achieved_bound - 2.0 / 256.0) <= 1e-15);

    auto solo = ms_allocation_norm({1.0, 0.0}, 10.0);
    CHECK(std::abs(solo.splitting[0] - 10.0) <= 1e-12);
    CHECK(solo.splitting[1] == 0.0);

    auto skew = ms_allocation_norm({0.8, -0.2}, 10.0);
    CHECK(skew.splitting[0] / skew.splitting[1] == doctest::Approx(2.5198).epsilon(1e-4));
    CHECK(skew.splitting[0] / skew.splitting[1] ==
          doctest::Approx(std::pow(4.0, 2.0 / 3.0)).epsilon(1e-12));
    CHECK(skew.alphas[1] < 0.0);

    std::vector<double> uniform3 = {1.0 / 3, -1.0 / 3, 1.0 / 3};
    CHECK(std::abs(ms_allocation_norm(uniform3, 9.0).achieved_bound - 3.0 / 81.0) <= 1e-14);

    auto g = stream_rng(612, 0);
    for (int rep = 0; rep < 500; ++rep) {
        int d = 1 + static_cast<int>(uniform01(g) * 5);
        double nT = 0.5 + 20.0 * uniform01(g);
        auto p = ms_allocation_norm(random_weights(g, d, 0.0), nT);
        double total = 0.0;
        for (int j = 0; j < d; ++j) {
            total += p.splitting[j];
            CHECK(std::abs(p.alphas[j] * p.alphas[j] + p.probe_photons[j] - p.splitting[j]) <=
                  1e-12);
        }
        CHECK(std::abs(total - nT) <= 1e-12);
    }
}

TEST_CASE("separable allocation with a shared fixed probe") {
    auto flat = ms_coherent_allocation({0.5, 0.5}, 6.0, 0.0, 1.0);
    CHECK(std::abs(flat.alphas[0] * flat.alphas[0] - 3.0) <= 1e-12);
    auto sym = ms_coherent_allocation({0.5, 0.5}, 6.0, 6.0, 13.0);
    CHECK(std::abs(sym.alphas[0] * sym.alphas[0] - 3.0) <= 1e-12);
    CHECK(std::abs(sym.probe_photons[1] - 3.0) <= 1e-12);

    auto skew = ms_coherent_allocation({0.8, 0.2}, 6.0, 2.0, 5.0);
    CHECK(std::abs(skew.alphas[0] * skew.alphas[0] - 4.92) <= 1e-12);
    CHECK(std::abs(skew.alphas[1] * skew.alphas[1] - 1.08) <= 1e-12);
    CHECK(std::abs(sum_sq(skew.alphas) - 6.0) <= 1e-12);
    CHECK(std::abs(skew.achieved_bound - 1.0 / 32.0) <= 1e-15);

    CHECK_THROWS_AS(ms_coherent_allocation({0.97, 0.03}, 1.0, 10.0, 1.0), InfeasibleError);
    CHECK_THROWS_AS(ms_coherent_allocation({0.5, 0.5}, 6.0, 0.0, 0.5), std::invalid_argument);

    // the per-sensor variance sum collapses to the budget bound
    auto g = stream_rng(613, 0);
    int feasible = 0;
    for (int rep = 0; rep < 300; ++rep) {
        int d = 1 + static_cast<int>(uniform01(g) * 4);
        auto v = random_weights(g, d, 0.5);
        double nc = 1.0 + 8.0 * uniform01(g);
        double n = 4.0 * uniform01(g);
        double var_p = 1.0 + 10.0 * uniform01(g);
        AllocationPlan p;
        try {
            p = ms_coherent_allocation(v, nc, n, var_p);
        } catch (const InfeasibleError&) {
            continue;
        }
        ++feasible;
        double sum = 0.0;
        for (int j = 0; j < d; ++j)
            sum += v[j] * v[j] / (p.alphas[j] * p.alphas[j] * var_p + p.probe_photons[j]);
        CHECK(std::abs(sum - bound_general(nc, n, var_p, 1, v)) <= 1e-12);
    }
    CHECK(feasible >= 200);
}

TEST_CASE("coherent fraction kappa: anchors and inequality") {
    CHECK(std::abs(kappa({2.0, -2.0}, {0.5, 0.5}, 8.0) - 0.5) <= 1e-12);
    CHECK(std::abs(kappa({1.3, 0.4, 0.2}, {0.2, 0.5, 0.3}, 0.0) - 1.0) <= 1e-12);
    CHECK(std::abs(kappa({2.0, 0.0}, {1.0, 0.0}, 5.0) - 4.0 / 9.0) <= 1e-15);

    auto g = stream_rng(614, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        int d = 1 + static_cast<int>(uniform01(g) * 4);
        std::vector<double> alphas(d), split(d);
        double nc = 0.0, psum = 0.0;
        for (int j = 0; j < d; ++j) {
            alphas[j] = 0.2 + 2.0 * uniform01(g);
            nc += alphas[j] * alphas[j];
            split[j] = 0.05 + uniform01(g);
            psum += split[j];
        }
        for (double& x : split) x /= psum;
        double n = 8.0 * uniform01(g);
        CHECK(kappa(alphas, split, n) <= nc / (nc + n) + 1e-12);
    }
}

TEST_CASE("entangled allocation saturates the photon-budget bound") {
    auto g = stream_rng(615, 0);
    for (int rep = 0; rep < 400; ++rep) {
        int d = 1 + static_cast<int>(uniform01(g) * 4);
        auto v = random_weights(g, d, 0.0);
        if (rep % 5 == 0) v[static_cast<int>(uniform01(g) * d)] = 0.0;
        double l1 = 0.0;
        for (double x : v) l1 += std::abs(x);
        if (l1 < 1e-6) continue;
        double nc = 0.2 + 8.0 * uniform01(g);
        double n = 6.0 * uniform01(g);
        double var_p = 1.0 + 12.0 * uniform01(g);
        auto plan = me_allocation(v, nc, n, var_p);
        Qfim F = qfim_from_moments(plan.alphas, plan.splitting, n, var_p);
        double attained = qcrb(F, v, 1);
        CHECK(std::abs(attained - bound_general(nc, n, var_p, 1, v)) <= 1e-10);
        CHECK(std::abs(attained - plan.achieved_bound) <= 1e-10);
    }
}

TEST_CASE("perturbing an optimal allocation never helps") {
    auto g = stream_rng(616, 0);
    for (int rep = 0; rep < 300; ++rep) {
        int d = 2 + static_cast<int>(uniform01(g) * 3);
        auto v = random_weights(g, d, 0.2);
        double nc = 0.5 + 6.0 * uniform01(g);
        double n = 5.0 * uniform01(g);
        double var_p = 1.0 + 8.0 * uniform01(g);
        auto plan = me_allocation(v, nc, n, var_p);
        double best = qcrb(qfim_from_moments(plan.alphas, plan.splitting, n, var_p), v, 1);

        for (int dir = 0; dir < 4; ++dir) {
            // move along the constraint manifold: renormalize alpha to the
            // sphere and the splitting to the simplex
            const double eps = 1e-4;
            std::vector<double> a = plan.alphas, p = plan.splitting;
            for (int j = 0; j < d; ++j) a[j] += eps * (uniform01(g) - 0.5);
            double scale = std::sqrt(nc / sum_sq(a));
            for (double& x : a) x *= scale;
            double psum = 0.0;
            for (int j = 0; j < d; ++j) {
                p[j] = std::max(0.0, p[j] + eps * (uniform01(g) - 0.5));
                psum += p[j];
            }
            for (double& x : p) x /= psum;
            double moved = qcrb(qfim_from_moments(a, p, n, var_p), v, 1);
            CHECK(moved >= best - 1e-9);
        }
    }
}

TEST_CASE("perturbing the separable 2/3-norm split never helps") {
    auto g = stream_rng(617, 0);
    for (int rep = 0; rep < 300; ++rep) {
        int d = 2 + static_cast<int>(uniform01(g) * 3);
        auto v = random_weights(g, d, 0.2);
        double nT = 2.0 + 20.0 * uniform01(g);
        auto plan = ms_allocation_norm(v, nT);
        // optimal per-sensor information is the squared total
        double best = 0.0;
        for (int j = 0; j < d; ++j) best += v[j] * v[j] / (plan.splitting[j] * plan.splitting[j]);
        CHECK(std::abs(best - plan.achieved_bound) <= 1e-10 * best);

        for (int dir = 0; dir < 4; ++dir) {
            std::vector<double> t = plan.splitting;
            double tsum = 0.0;
            for (int j = 0; j < d; ++j) {
                t[j] = std::max(1e-6, t[j] + 1e-4 * (uniform01(g) - 0.5));
                tsum += t[j];
            }
            double moved = 0.0;
            for (int j = 0; j < d; ++j) {
                double tj = t[j] * nT / tsum;
                moved += v[j] * v[j] / (tj * tj);
            }
            CHECK(moved >= best - 1e-9);
        }
    }
}
