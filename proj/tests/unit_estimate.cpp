#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "estimate.hpp"
#include "fisher.hpp"
#include "fock.hpp"
#include "network.hpp"
#include "rng.hpp"

using namespace qnet;

namespace {

constexpr double kPi = std::numbers::pi;

// single sensor, one reference photon's worth of coherent light plus a
// one-photon probe: information number 4, tiny outcome table
NetworkConfig tiny_config() { return make_me_config({1.0}, {1.0}, make_fock(1)); }

double msf_along(const std::vector<std::vector<double>>& estimates,
                 const std::vector<double>& v, const std::vector<double>& truth) {
    double mean = 0.0;
    std::vector<double> x(estimates.size());
    for (std::size_t t = 0; t < estimates.size(); ++t) {
        double dot = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * (estimates[t][j] - truth[j]);
        x[t] = dot;
        mean += dot;
    }
    mean /= estimates.size();
    double var = 0.0;
    for (double xv : x) var += (xv - mean) * (xv - mean);
    return var / estimates.size();
}

}  // namespace

TEST_CASE("log-likelihood: closed-form values and invariances") {
    auto cfg = make_me_config({0.0}, {1.0}, make_fock(1));
    CHECK(log_likelihood({}, cfg, {kPi / 2}) == 0.0);

    // one probe photon through a balanced rotation: P(stay) = 1/2
    std::vector<int> stay = {0, 1};
    CHECK(log_likelihood({stay}, cfg, {kPi / 2}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));

    auto cfg2 = tiny_config();
    auto table = probability_table(cfg2, {1.1});
    auto draws = sample(table, 99u, 40);
    double base = log_likelihood(draws, cfg2, {1.3});
    std::vector<std::vector<int>> reversed(draws.rbegin(), draws.rend());
    CHECK(log_likelihood(reversed, cfg2, {1.3}) == doctest::Approx(base).epsilon(1e-15));

    // an outcome outside the caps has probability zero and hits the floor
    std::vector<int> impossible = {40, 0};
    CHECK(log_likelihood({impossible}, cfg2, {1.3}) ==
          doctest::Approx(std::log(1e-300)).epsilon(1e-12));
}

TEST_CASE("maximum-likelihood search: self-consistency at large m") {
    auto cfg1 = make_me_config({std::sqrt(3.0)}, {1.0}, make_fock(3));
    CHECK_THROWS_AS(mle({}, cfg1), std::invalid_argument);
    const std::vector<double> truth = {kPi / 2};
    auto table = probability_table(cfg1, truth);
    auto draws = sample(table, 7u, 1000);
    MleFit fit = mle(draws, cfg1);
    CHECK(fit.converged);

    // information number 3*7+3 = 24 per shot
    const double sigma = std::sqrt(1.0 / (24.0 * 1000.0));
    CHECK(std::abs(fit.theta[0] - kPi / 2) <= 3.0 * sigma + 2e-3);

    // the argmax dominates the generating point
    CHECK(fit.loglik >= log_likelihood(draws, cfg1, truth) - 1e-9);

    // the search is deterministic
    MleFit again = mle(draws, cfg1);
    CHECK(again.theta[0] == doctest::Approx(fit.theta[0]).epsilon(1e-12));
    CHECK(again.loglik == doctest::Approx(fit.loglik).epsilon(1e-12));
}

TEST_CASE("trial engine: reproducible for any worker count") {
    auto cfg = tiny_config();
    const std::vector<double> truth = {1.2};
    auto a = mle_trials(cfg, truth, 20, 12, 42u, 1);
    auto b = mle_trials(cfg, truth, 20, 12, 42u, 4);
    CHECK(a.size() == 12);
    for (int t = 0; t < 12; ++t) CHECK(a[t][0] == b[t][0]);

    auto c = mle_trials(cfg, truth, 20, 12, 43u, 1);
    int differs = 0;
    for (int t = 0; t < 12; ++t) differs += a[t][0] != c[t][0];
    CHECK(differs > 0);

    CHECK_THROWS_AS(mle_trials(cfg, truth, 0, 12, 1u, 1), std::invalid_argument);
    CHECK_THROWS_AS(mle_trials(cfg, truth, 20, 1, 1u, 1), std::invalid_argument);
}

TEST_CASE("estimation experiment: statistics near the variance bound") {
    auto cfg = tiny_config();
    const std::vector<double> truth = {kPi / 2};
    const std::vector<double> v = {1.0};
    auto r = run_experiment(cfg, truth, v, 100, 200, 11u);
    CHECK(r.trials == 200);
    CHECK(r.m == 100);
    CHECK(static_cast<int>(r.estimates.size()) == 200);
    for (const auto& est : r.estimates) {
        CHECK(est[0] >= 0.0);
        CHECK(est[0] <= kPi);
    }
    // information number 4 per shot
    const double bound = qcrb(qfim_me(cfg), v, 100);
    CHECK(r.msf / bound >= 0.7);
    CHECK(r.msf / bound <= 1.6);
    CHECK(std::abs(r.bias) <= 4.0 * std::sqrt(r.msf / r.trials) + 1e-3);

    // the reported fluctuation is the population variance of v.(Theta-theta)
    CHECK(r.msf == doctest::Approx(msf_along(r.estimates, v, truth)).epsilon(1e-14));

    // single-shot trials stay finite and nowhere near the m=1 bound's floor
    auto one = run_experiment(cfg, truth, v, 1, 40, 5u);
    CHECK(std::isfinite(one.msf));
    CHECK(one.msf >= 0.5 * qcrb(qfim_me(cfg), v, 1));
}

TEST_CASE("anisotropy: the optimized combination beats the orthogonal one") {
    auto cfg = make_me_config({std::sqrt(2.0), -std::sqrt(2.0)}, {0.5, 0.5}, make_fock(4));
    const std::vector<double> truth = {kPi / 2, kPi / 2};
    auto r = run_experiment(cfg, truth, {0.5, -0.5}, 40, 50, 21u);
    const double msf_plus = msf_along(r.estimates, {0.5, 0.5}, truth);
    // per-shot variances 1/40 vs 1/8: well separated even at 50 trials
    CHECK(r.msf < msf_plus);
    CHECK(msf_plus / r.msf > 2.0);
}

TEST_CASE("phase sweep: normalization, symmetry, boundary flag") {
    auto cfg = make_me_config({1.0, 1.0}, {0.5, 0.5}, make_fock(2));
    const std::vector<double> v = {0.5, 0.5};
    std::vector<std::vector<double>> grid = {
        {1.2, 1.9}, {1.9, 1.2}, {kPi / 2, kPi / 2}, {0.05, kPi / 2}};
    auto pts = theta_sweep(cfg, v, 40, grid, 40, 31u);
    REQUIRE(pts.size() == 4);
    CHECK_FALSE(pts[0].boundary);
    CHECK_FALSE(pts[2].boundary);
    CHECK(pts[3].boundary);
    for (int i = 0; i < 3; ++i) {
        CHECK(pts[i].normalized > 0.4);
        CHECK(pts[i].normalized < 2.5);
        CHECK(pts[i].msf == doctest::Approx(pts[i].normalized * qcrb(qfim_me(cfg), v, 40))
                                .epsilon(1e-12));
    }
    // exchange-symmetric config: mirrored truths agree statistically
    CHECK(pts[0].msf / pts[1].msf > 0.35);
    CHECK(pts[0].msf / pts[1].msf < 1.0 / 0.35);
}

TEST_CASE("shot-number search returns the curve argmin") {
    auto family = [](double nT) {
        const int n = std::max(1, static_cast<int>(std::lround(nT / 2.0)));
        return make_me_config({std::sqrt(nT - n)}, {1.0}, make_fock(n));
    };
    auto solo = find_m_opt(family, 80.0, {10}, {kPi / 2}, {1.0}, 20, 3u);
    CHECK(solo.m_opt == 10);
    REQUIRE(solo.curve.size() == 1);

    auto res = find_m_opt(family, 80.0, {4, 10, 26}, {kPi / 2}, {1.0}, 40, 3u);
    REQUIRE(res.curve.size() == 3);
    for (const auto& [m, msf] : res.curve) {
        if (m == res.m_opt) continue;
        double at_opt = 0.0;
        for (const auto& [mm, ms] : res.curve)
            if (mm == res.m_opt) at_opt = ms;
        CHECK(at_opt <= msf);
    }
    CHECK_THROWS_AS(find_m_opt(family, 80.0, {}, {1.0}, {1.0}, 10, 1u), std::invalid_argument);
}

TEST_CASE("gamma fit: exact-model recovery and validation") {
    auto model_me = [](double nT, double g, int m) { return g * m / (nT * nT + 2.0 * nT * m); };
    std::vector<std::pair<double, double>> pts;
    for (double nT : {100.0, 200.0, 400.0, 800.0}) pts.emplace_back(nT, model_me(nT, 2.36, 36));
    FitResult fit = fit_gamma(pts, 36, 2, Scheme::ME);
    CHECK(std::abs(fit.gamma - 2.36) <= 1e-9);
    CHECK(fit.residual <= 1e-20);
    CHECK(fit.model == Scheme::ME);

    auto model_ms = [](double nT, double g, int m, int d) {
        return g * m * d / (nT * nT + 2.0 * nT * d * m);
    };
    std::vector<std::pair<double, double>> pts_ms;
    for (double nT : {64.0, 128.0, 256.0}) pts_ms.emplace_back(nT, model_ms(nT, 2.4, 36, 2));
    FitResult fms = fit_gamma(pts_ms, 36, 2, Scheme::MS);
    CHECK(std::abs(fms.gamma - 2.4) <= 1e-9);

    // mild multiplicative noise moves gamma mildly
    auto g = stream_rng(77, 0);
    std::vector<std::pair<double, double>> noisy;
    for (double nT : {100.0, 150.0, 250.0, 400.0, 600.0})
        noisy.emplace_back(nT, model_me(nT, 2.36, 36) * (0.95 + 0.1 * uniform01(g)));
    CHECK(std::abs(fit_gamma(noisy, 36, 2, Scheme::ME).gamma - 2.36) <= 0.25);

    CHECK_THROWS_AS(fit_gamma({{100.0, 1.0}, {200.0, 0.5}}, 36, 2, Scheme::ME),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_gamma({{100.0, 1.0}, {-1.0, 0.5}, {200.0, 0.2}}, 36, 2, Scheme::ME),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_gamma(pts, 0, 2, Scheme::ME), std::invalid_argument);
}

TEST_CASE("summed per-phase variances track the trace bound") {
    auto cfg = tiny_config();
    double two = sum_of_variances_experiment(cfg, {kPi / 2}, 2, 2, 9u);
    CHECK(std::isfinite(two));
    CHECK(two >= 0.0);

    double v = sum_of_variances_experiment(cfg, {kPi / 2}, 80, 150, 13u);
    const double bound = sum_of_variances_bound(qfim_me(cfg), 80);
    CHECK(v / bound >= 0.6);
    CHECK(v / bound <= 1.7);
}

TEST_CASE("estimation export formats") {
    auto cfg = tiny_config();
    auto r = run_experiment(cfg, {1.2}, {1.0}, 10, 4, 3u);
    std::string csv = estimation_csv(r);
    CHECK(csv.rfind("# msf=", 0) == 0);
    CHECK(csv.find("trial,Theta_1\r\n") != std::string::npos);
    int lines = 0;
    for (std::size_t p = 0; (p = csv.find("\r\n", p)) != std::string::npos; p += 2) ++lines;
    CHECK(lines == 6);  // summary + header + 4 trials

    FitResult fit;
    fit.gamma = 2.36;
    fit.model = Scheme::MS;
    fit.residual = 0.5;
    std::string js = fit_json(fit, 36);
    CHECK(js.find("\"model\":\"MS\"") != std::string::npos);
    CHECK(js.find("\"m_opt\":36") != std::string::npos);
    CHECK(js.front() == '{');
    CHECK(js.back() == '}');
}

TEST_CASE("fluctuations fall off as one over the shot count") {
    auto cfg = tiny_config();
    const std::vector<double> truth = {kPi / 2};
    const std::vector<double> v = {1.0};
    double lo = run_experiment(cfg, truth, v, 25, 150, 17u).msf;
    double hi = run_experiment(cfg, truth, v, 400, 150, 18u).msf;
    const double slope = (std::log(hi) - std::log(lo)) / (std::log(400.0) - std::log(25.0));
    CHECK(slope >= -1.15);
    CHECK(slope <= -0.85);
}
