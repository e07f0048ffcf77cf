#include "fock.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "errors.hpp"

namespace qnet {

std::vector<double> log_factorials(int max_n) {
    std::vector<double> lf(static_cast<std::size_t>(max_n) + 1, 0.0);
    for (int m = 1; m <= max_n; ++m) lf[m] = lf[m - 1] + std::log(static_cast<double>(m));
    return lf;
}

double SingleModeState::norm2() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return s;
}

namespace {

// Fills mean_n and var_p from the coefficients. var_p follows from
// p = i(b' - b)/sqrt(2): <p^2> = <b'b> + 1/2 - Re<bb>, doubled so vacuum = 1.
void set_moments(SingleModeState& st) {
    const auto& c = st.coeffs;
    const int M = st.cutoff();
    double n1 = 0.0, s = 0.0, bb = 0.0;
    for (int m = 0; m <= M; ++m) {
        s += c[m] * c[m];
        n1 += m * c[m] * c[m];
        if (m + 2 <= M)
            bb += c[m] * c[m + 2] * std::sqrt(double(m + 1) * double(m + 2));
    }
    st.mean_n = n1;
    st.var_p = 2.0 * n1 + s - 2.0 * bb;
}

int auto_cutoff_poisson(double nbar) {
    return static_cast<int>(std::ceil(nbar + 10.0 * std::sqrt(nbar + 1.0)));
}

// Remaining probability above cutoff M for Poisson(nbar), bounded by the
// geometric series with ratio nbar/(M+1). Returns >1 when the ratio is >= 1.
double poisson_tail_bound(double nbar, int M, const std::vector<double>& lf) {
    const double q = nbar / (M + 1);
    if (q >= 1.0) return 2.0;
    const double log_pM = M * std::log(nbar) - nbar - lf[M];
    return std::exp(log_pM) * q / (1.0 - q);
}

}  // namespace

SingleModeState make_vacuum() {
    SingleModeState st;
    st.coeffs = {1.0};
    set_moments(st);
    return st;
}

SingleModeState make_fock(int n) {
    if (n < 0) throw std::invalid_argument("fock: n must be >= 0");
    SingleModeState st;
    st.coeffs.assign(static_cast<std::size_t>(n) + 1, 0.0);
    st.coeffs[n] = 1.0;
    set_moments(st);
    return st;
}

SingleModeState make_coherent(double alpha, int cutoff) {
    const double nbar = alpha * alpha;
    if (cutoff < 0) cutoff = auto_cutoff_poisson(nbar);
    auto lf = log_factorials(cutoff);
    if (alpha != 0.0) {
        const double tail = poisson_tail_bound(nbar, cutoff, lf);
        if (tail > 1e-8)
            throw CutoffError("coherent: cutoff " + std::to_string(cutoff) +
                                  " leaves tail mass above 1e-8",
                              1.0 - tail);
    }
    SingleModeState st;
    st.coeffs.assign(static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (alpha == 0.0) {
        st.coeffs[0] = 1.0;
    } else {
        const double la = std::log(std::abs(alpha));
        const double sign = alpha < 0 ? -1.0 : 1.0;
        double sgn = 1.0;
        for (int m = 0; m <= cutoff; ++m) {
            st.coeffs[m] = sgn * std::exp(m * la - 0.5 * nbar - 0.5 * lf[m]);
            sgn *= sign;
        }
    }
    set_moments(st);
    return st;
}

SingleModeState make_squeezed_vacuum(double r, int cutoff) {
    if (r < 0) throw std::invalid_argument("squeezed_vacuum: r must be >= 0");
    if (r == 0.0) {
        SingleModeState st = make_vacuum();
        if (cutoff > 0) {
            st.coeffs.resize(static_cast<std::size_t>(cutoff) + 1, 0.0);
            set_moments(st);
        }
        return st;
    }
    const double lam = std::tanh(r);
    const double log_lam = std::log(lam);
    // log cosh r, overflow-safe for large r
    const double half_log_cosh = 0.5 * (r + std::log1p(std::exp(-2.0 * r)) - std::log(2.0));
    // log of |c_{2k}|^2; lf2k = log((2k)!), lfk = log(k!) maintained by caller
    auto log_p2k = [&](int k, double lf2k, double lfk) {
        return 2.0 * (k * log_lam + 0.5 * lf2k - k * std::log(2.0) - lfk - half_log_cosh);
    };
    // |c_{2k}|^2 has ratio <= lam^2 between consecutive even levels, so the
    // mass above the last included pair level K is <= P_K * lam^2/(1-lam^2).
    const double geo = lam * lam / (1.0 - lam * lam);
    if (cutoff < 0) {
        int K = 0;
        double lf2k = 0.0, lfk = 0.0;
        while (K == 0 || std::exp(log_p2k(K, lf2k, lfk)) * geo > 1e-10) {
            ++K;
            lf2k += std::log(2.0 * K - 1.0) + std::log(2.0 * K);
            lfk += std::log(static_cast<double>(K));
            if (2 * K > 200000)
                throw TooLargeError("squeezed_vacuum: auto cutoff exceeds 200000 levels");
        }
        cutoff = 2 * K;
    } else {
        const int K = cutoff / 2;  // last even level present is 2K
        auto lf = log_factorials(2 * K);
        if (std::exp(log_p2k(K, lf[2 * K], lf[K])) * geo > 1e-8)
            throw CutoffError("squeezed_vacuum: cutoff " + std::to_string(cutoff) +
                              " leaves tail mass above 1e-8");
    }
    auto lf = log_factorials(cutoff);
    SingleModeState st;
    st.coeffs.assign(static_cast<std::size_t>(cutoff) + 1, 0.0);
    double sgn = 1.0;
    for (int k = 0; 2 * k <= cutoff; ++k) {
        st.coeffs[2 * k] =
            sgn * std::exp(k * log_lam + 0.5 * lf[2 * k] - k * std::log(2.0) - lf[k] - half_log_cosh);
        sgn = -sgn;
    }
    set_moments(st);
    return st;
}

SingleModeState make_cat(double alpha, int cutoff) {
    if (alpha < 0) throw std::invalid_argument("cat: alpha must be >= 0");
    const double nbar = alpha * alpha;
    if (cutoff < 0) cutoff = auto_cutoff_poisson(nbar);
    auto lf = log_factorials(cutoff);
    if (alpha != 0.0) {
        // |c_m|^2 <= 2 * Poisson(m), so twice the Poisson bound covers the tail.
        const double tail = 2.0 * poisson_tail_bound(nbar, cutoff, lf);
        if (tail > 1e-8)
            throw CutoffError("cat: cutoff " + std::to_string(cutoff) +
                              " leaves tail mass above 1e-8");
    }
    SingleModeState st;
    st.coeffs.assign(static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (alpha == 0.0) {
        st.coeffs[0] = 1.0;
    } else {
        const double amp = std::sqrt(2.0 / (1.0 + std::exp(-2.0 * nbar)));
        const double la = std::log(alpha);
        double sgn = 1.0;
        for (int m = 0; m <= cutoff; m += 2) {
            st.coeffs[m] = sgn * amp * std::exp(m * la - 0.5 * nbar - 0.5 * lf[m]);
            sgn = -sgn;
        }
    }
    set_moments(st);
    return st;
}

double squeeze_param_for_mean(double nbar) {
    if (nbar < 0) throw std::invalid_argument("squeeze_param_for_mean: nbar must be >= 0");
    return std::asinh(std::sqrt(nbar));
}

double kappa_norm(const std::vector<double>& v, double kappa) {
    if (v.empty()) throw std::invalid_argument("kappa_norm: empty vector");
    if (!(kappa > 0)) throw std::invalid_argument("kappa_norm: kappa must be > 0");
    if (kappa == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), kappa);
    return std::pow(s, 1.0 / kappa);
}

}  // namespace qnet
