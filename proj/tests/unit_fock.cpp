#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "fock.hpp"

using namespace qnet;

namespace {

// Moments recomputed here by direct summation, independent of the cached path.
double mean_n_direct(const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) s += double(m) * c[m] * c[m];
    return s;
}

double var_p_direct(const std::vector<double>& c) {
    double n1 = 0.0, s = 0.0, bb = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) {
        s += c[m] * c[m];
        n1 += double(m) * c[m] * c[m];
        if (m + 2 < c.size()) bb += c[m] * c[m + 2] * std::sqrt(double(m + 1) * double(m + 2));
    }
    return 2.0 * n1 + s - 2.0 * bb;
}

}  // namespace

TEST_CASE("vacuum and number states") {
    auto v = make_vacuum();
    CHECK(v.coeffs.size() == 1);
    CHECK(v.coeffs[0] == 1.0);
    CHECK(v.mean_n == 0.0);
    CHECK(v.var_p == 1.0);

    for (int n : {0, 1, 2, 5, 9}) {
        auto f = make_fock(n);
        CHECK(f.cutoff() == n);
        CHECK(f.coeffs[n] == 1.0);
        CHECK(f.mean_n == doctest::Approx(n).epsilon(1e-15));
        CHECK(f.var_p == doctest::Approx(2.0 * n + 1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(make_fock(-1), std::invalid_argument);
}

TEST_CASE("coherent state moments and signs") {
    auto c = make_coherent(2.0, 40);
    CHECK(c.cutoff() == 40);
    CHECK(c.mean_n == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(c.norm2() == doctest::Approx(1.0).epsilon(1e-10));

    auto c3 = make_coherent(3.0, 60);
    CHECK(c3.var_p == doctest::Approx(1.0).epsilon(1e-7));

    auto cm = make_coherent(-2.0, 40);
    CHECK(cm.coeffs[0] > 0);
    CHECK(cm.coeffs[1] < 0);
    CHECK(cm.coeffs[2] > 0);
    CHECK(cm.mean_n == doctest::Approx(4.0).epsilon(1e-8));
    for (int m = 0; m <= 40; ++m)
        CHECK(std::abs(cm.coeffs[m]) == doctest::Approx(std::abs(c.coeffs[m])).epsilon(1e-14));

    auto z = make_coherent(0.0);
    CHECK(z.coeffs[0] == 1.0);
    CHECK(z.mean_n == 0.0);

    CHECK_THROWS_AS(make_coherent(3.0, 10), CutoffError);
}

TEST_CASE("squeezed vacuum: variance, parity, cutoff growth") {
    const double r6 = squeeze_param_for_mean(6.0);
    CHECK(r6 == doctest::Approx(1.6283069774000262).epsilon(1e-14));

    auto s = make_squeezed_vacuum(r6);
    CHECK(s.mean_n == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(s.var_p == doctest::Approx(25.96148139681572).epsilon(1e-8));
    CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-9));

    auto s2 = make_squeezed_vacuum(0.5, 40);
    for (int m = 1; m <= 39; m += 2) CHECK(s2.coeffs[m] == 0.0);
    // antisqueezed quadrature grows, conjugate one shrinks: var_p = e^{2r}
    CHECK(s2.var_p == doctest::Approx(std::exp(1.0)).epsilon(1e-10));

    CHECK(make_squeezed_vacuum(0.0).coeffs[0] == 1.0);
    CHECK_THROWS_AS(make_squeezed_vacuum(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_squeezed_vacuum(r6, 30), CutoffError);
}

TEST_CASE("cat state closed-form moments") {
    auto k = make_cat(2.0);
    CHECK(k.mean_n == doctest::Approx(3.9973171989562682).epsilon(1e-7));
    CHECK(k.var_p == doctest::Approx(16.994634397912536).epsilon(1e-7));
    CHECK(k.norm2() == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t m = 1; m < k.coeffs.size(); m += 2) CHECK(k.coeffs[m] == 0.0);

    auto z = make_cat(0.0);
    CHECK(z.coeffs[0] == 1.0);
    CHECK_THROWS_AS(make_cat(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_cat(3.0, 9), CutoffError);
}

TEST_CASE("squeezing identity over the parameter range") {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    for (int i = 0; i < 1200; ++i) {
        const double r = U(gen);
        auto s = make_squeezed_vacuum(r);
        const double want = std::exp(2.0 * r);
        CHECK(std::abs(s.var_p - want) <= 1e-6 * want);
        CHECK(std::abs(s.mean_n - std::sinh(r) * std::sinh(r)) <= 1e-6 * (1.0 + s.mean_n));
    }
}

TEST_CASE("cached moments equal direct recomputation; norms near one") {
    std::mt19937_64 gen(777);
    std::uniform_real_distribution<double> U(-2.5, 2.5);
    for (int i = 0; i < 1000; ++i) {
        const int kind = i % 4;
        SingleModeState st;
        switch (kind) {
            case 0: st = make_coherent(U(gen)); break;
            case 1: st = make_squeezed_vacuum(std::abs(U(gen)) * 0.8); break;
            case 2: st = make_cat(std::abs(U(gen))); break;
            default: st = make_fock(i % 7); break;
        }
        CHECK(std::abs(st.mean_n - mean_n_direct(st.coeffs)) <= 1e-10 * (1.0 + st.mean_n));
        CHECK(std::abs(st.var_p - var_p_direct(st.coeffs)) <= 1e-10 * (1.0 + st.var_p));
        CHECK(st.norm2() <= 1.0 + 1e-12);
        CHECK(st.norm2() >= 1.0 - 1e-6);
    }
}

TEST_CASE("kappa norm: anchors and scaling") {
    const std::vector<double> v{0.8, 0.2};
    CHECK(kappa_norm(v, 2.0 / 3.0) == doctest::Approx(1.3207322048468059).epsilon(1e-12));
    CHECK(kappa_norm(v, 1.0) == 1.0);  // exact: plain sum
    CHECK(kappa_norm({3.0, 4.0}, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(kappa_norm({-3.0, 4.0}, 2.0) == doctest::Approx(5.0).epsilon(1e-14));

    std::mt19937_64 gen(4242);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> K(0.4, 3.0);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> w(2 + i % 4);
        for (auto& x : w) x = U(gen);
        const double kap = K(gen);
        const double c = 0.1 + std::abs(U(gen)) * 3.0;
        std::vector<double> cw = w;
        for (auto& x : cw) x *= c;
        // absolute homogeneity
        CHECK(kappa_norm(cw, kap) == doctest::Approx(c * kappa_norm(w, kap)).epsilon(1e-11));
    }
    CHECK_THROWS_AS(kappa_norm({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kappa_norm({1.0}, 0.0), std::invalid_argument);
}
