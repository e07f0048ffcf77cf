#include "oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace qnet {

namespace {

using cd = std::complex<double>;

constexpr long long kMaxBasis = 1LL << 22;

std::vector<double> coherent_amps(double alpha, int cap) {
    std::vector<double> c(static_cast<std::size_t>(cap) + 1, 0.0);
    if (alpha == 0.0) {
        c[0] = 1.0;
        return c;
    }
    auto lf = log_factorials(cap);
    for (int n = 0; n <= cap; ++n) {
        const double mag = std::exp(n * std::log(std::abs(alpha)) - 0.5 * alpha * alpha -
                                    0.5 * lf[n]);
        c[n] = (alpha < 0 && n % 2) ? -mag : mag;
    }
    return c;
}

void require_sector_complete(const DenseState& st) {
    for (int j = 0; j < st.d; ++j) {
        const int nmax = st.caps[2 * j] + st.caps[2 * j + 1];
        const long long want = static_cast<long long>(nmax + 1) * (nmax + 2) / 2;
        if (static_cast<long long>(st.pairs[j].size()) != want)
            throw std::invalid_argument("dense state: sector-complete basis required");
    }
}

}  // namespace

std::vector<int> DenseState::occupation(long long idx) const {
    std::vector<int> occ(2 * d);
    for (int j = 0; j < d; ++j) {
        const long long p = (idx / strides[j]) % static_cast<long long>(pairs[j].size());
        occ[2 * j] = pairs[j][p].first;
        occ[2 * j + 1] = pairs[j][p].second;
    }
    return occ;
}

long long DenseState::index(const std::vector<int>& occ) const {
    long long idx = 0;
    for (int j = 0; j < d; ++j) {
        const int n = occ[2 * j], m = occ[2 * j + 1];
        if (n < 0 || n >= static_cast<int>(pos[j].size())) return -1;
        if (m < 0 || m >= static_cast<int>(pos[j][n].size())) return -1;
        const int p = pos[j][n][m];
        if (p < 0) return -1;
        idx += strides[j] * p;
    }
    return idx;
}

Eigen::MatrixXcd sector_unitary(int N, double theta) {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int k = 0; k < N; ++k) {
        const double t = 0.5 * std::sqrt(double(k + 1) * double(N - k));
        H(k + 1, k) = cd(0, -t);
        H(k, k + 1) = cd(0, t);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    Eigen::VectorXcd ph(N + 1);
    for (int i = 0; i <= N; ++i) ph[i] = std::exp(cd(0, -theta * es.eigenvalues()[i]));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

DenseState dense_probe(const NetworkConfig& config, std::vector<int> caps, bool sector_complete) {
    const int d = config.d();
    if (caps.empty()) caps = auto_caps(config);
    if (static_cast<int>(caps.size()) != 2 * d)
        throw std::invalid_argument("dense_probe: caps must hold two entries per sensor");

    DenseState st;
    st.d = d;
    st.caps = caps;
    st.pairs.resize(d);
    st.pos.resize(d);
    long long size = 1;
    for (int j = 0; j < d; ++j) {
        const int capA = caps[2 * j], capB = caps[2 * j + 1];
        st.pos[j].assign(capA + capB + 1, {});
        for (int n = 0; n <= capA + capB; ++n) st.pos[j][n].assign(capA + capB + 1, -1);
        for (int n = 0; n <= (sector_complete ? capA + capB : capA); ++n) {
            const int mtop = sector_complete ? capA + capB - n : capB;
            for (int m = 0; m <= mtop; ++m) {
                st.pos[j][n][m] = static_cast<int>(st.pairs[j].size());
                st.pairs[j].emplace_back(n, m);
            }
        }
        size *= static_cast<long long>(st.pairs[j].size());
        if (size > kMaxBasis) throw TooLargeError("dense_probe: basis exceeds 2^22 states");
    }
    st.size = size;
    st.strides.assign(d, 1);
    for (int j = d - 2; j >= 0; --j)
        st.strides[j] = st.strides[j + 1] * static_cast<long long>(st.pairs[j + 1].size());

    // per-sensor reference amplitudes and probe-share factors
    std::vector<std::vector<double>> poi(d);
    for (int j = 0; j < d; ++j) poi[j] = coherent_amps(config.alphas[j], caps[2 * j]);

    st.amp = Eigen::VectorXcd::Zero(size);
    if (config.scheme == Scheme::MS) {
        for (long long idx = 0; idx < size; ++idx) {
            double a = 1.0;
            for (int j = 0; j < d && a != 0.0; ++j) {
                const long long p =
                    (idx / st.strides[j]) % static_cast<long long>(st.pairs[j].size());
                const auto [n, m] = st.pairs[j][p];
                const double pn = n < static_cast<int>(poi[j].size()) ? poi[j][n] : 0.0;
                const double cm =
                    (m <= std::min(caps[2 * j + 1], config.probes[j].cutoff()))
                        ? config.probes[j].coeffs[m]
                        : 0.0;
                a *= pn * cm;
            }
            st.amp[idx] = a;
        }
        return st;
    }

    const auto& probe = config.probes[0];
    const int M = probe.cutoff();
    auto lf = log_factorials(M);
    std::vector<double> cglob(M + 1);
    for (int m = 0; m <= M; ++m) cglob[m] = probe.coeffs[m] * std::exp(0.5 * lf[m]);
    std::vector<std::vector<double>> share(d);  // P^{m/2}/sqrt(m!) per sensor
    for (int j = 0; j < d; ++j) {
        const int mtop = std::min(caps[2 * j + 1], M);
        share[j].assign(mtop + 1, 0.0);
        for (int m = 0; m <= mtop; ++m)
            share[j][m] = std::pow(config.splitting[j], 0.5 * m) * std::exp(-0.5 * lf[m]);
    }
    for (long long idx = 0; idx < size; ++idx) {
        double a = 1.0;
        int mtot = 0;
        for (int j = 0; j < d && a != 0.0; ++j) {
            const long long p = (idx / st.strides[j]) % static_cast<long long>(st.pairs[j].size());
            const auto [n, m] = st.pairs[j][p];
            const double pn = n < static_cast<int>(poi[j].size()) ? poi[j][n] : 0.0;
            const double sm = m < static_cast<int>(share[j].size()) ? share[j][m] : 0.0;
            a *= pn * sm;
            mtot += m;
        }
        st.amp[idx] = (a != 0.0 && mtot <= M) ? a * cglob[mtot] : 0.0;
    }
    return st;
}

void evolve_dense(DenseState& st, const std::vector<double>& theta) {
    if (static_cast<int>(theta.size()) != st.d)
        throw std::invalid_argument("evolve_dense: theta length mismatch");
    require_sector_complete(st);
    for (int j = 0; j < st.d; ++j) {
        const int nmax = st.caps[2 * j] + st.caps[2 * j + 1];
        std::vector<Eigen::MatrixXcd> U(nmax + 1);
        for (int N = 0; N <= nmax; ++N) U[N] = sector_unitary(N, theta[j]);
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(st.size);
        for (long long idx = 0; idx < st.size; ++idx) {
            const cd a = st.amp[idx];
            if (a == cd(0, 0)) continue;
            const long long p = (idx / st.strides[j]) % static_cast<long long>(st.pairs[j].size());
            const auto [n, m] = st.pairs[j][p];
            const int N = n + m;
            const long long base = idx - p * st.strides[j];
            for (int k = 0; k <= N; ++k) {
                const int pk = st.pos[j][k][N - k];
                out[base + pk * st.strides[j]] += U[N](k, n) * a;
            }
        }
        st.amp.swap(out);
    }
}

Eigen::VectorXcd apply_generator(const DenseState& st, int sensor) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(st.size);
    const int j = sensor;
    for (long long idx = 0; idx < st.size; ++idx) {
        const cd a = st.amp[idx];
        if (a == cd(0, 0)) continue;
        const long long p = (idx / st.strides[j]) % static_cast<long long>(st.pairs[j].size());
        const auto [n, m] = st.pairs[j][p];
        const long long base = idx - p * st.strides[j];
        if (m >= 1 && n + 1 < static_cast<int>(st.pos[j].size())) {
            const int pk = st.pos[j][n + 1][m - 1];
            if (pk < 0)
                throw std::invalid_argument("apply_generator: image leaves the basis");
            out[base + pk * st.strides[j]] += cd(0, -0.5 * std::sqrt(double(n + 1) * m)) * a;
        }
        if (n >= 1) {
            const int pk = st.pos[j][n - 1][m + 1];
            if (pk < 0)
                throw std::invalid_argument("apply_generator: image leaves the basis");
            out[base + pk * st.strides[j]] += cd(0, 0.5 * std::sqrt(double(n) * (m + 1))) * a;
        }
    }
    return out;
}

std::vector<double> generator_means(const DenseState& st) {
    std::vector<double> out(st.d);
    for (int j = 0; j < st.d; ++j)
        out[j] = st.amp.dot(apply_generator(st, j)).real();
    return out;
}

double saturation_residual(const DenseState& st) {
    double worst = 0.0;
    for (int j = 0; j < st.d; ++j) {
        const Eigen::VectorXcd u = apply_generator(st, j);
        for (long long i = 0; i < st.size; ++i)
            worst = std::max(worst, std::abs((std::conj(u[i]) * st.amp[i]).real()));
    }
    return worst;
}

Eigen::MatrixXd qfim_bruteforce(const NetworkConfig& config, std::vector<int> caps) {
    if (caps.empty()) caps = auto_caps(config);
    // one slot of headroom per mode so the generator image stays inside
    std::vector<int> wide = caps;
    for (auto& c : wide) ++c;
    DenseState st = dense_probe(config, wide, false);
    // rebuild amplitudes with the original truncation: zero the boundary slots
    for (long long idx = 0; idx < st.size; ++idx) {
        for (int j = 0; j < st.d; ++j) {
            const long long p = (idx / st.strides[j]) % static_cast<long long>(st.pairs[j].size());
            const auto [n, m] = st.pairs[j][p];
            if (n > caps[2 * j] || m > caps[2 * j + 1]) {
                st.amp[idx] = 0;
                break;
            }
        }
    }
    const int d = st.d;
    std::vector<Eigen::VectorXcd> u;
    for (int j = 0; j < d; ++j) u.push_back(apply_generator(st, j));
    std::vector<double> mean(d);
    for (int j = 0; j < d; ++j) mean[j] = st.amp.dot(u[j]).real();
    Eigen::MatrixXd F(d, d);
    for (int j = 0; j < d; ++j)
        for (int k = j; k < d; ++k) {
            F(j, k) = 4.0 * (u[j].dot(u[k]).real() - mean[j] * mean[k]);
            F(k, j) = F(j, k);
        }
    return F;
}

double saturation_check(const NetworkConfig& config, const std::vector<double>& theta,
                        std::vector<int> caps) {
    DenseState st = dense_probe(config, std::move(caps), true);
    evolve_dense(st, theta);
    return saturation_residual(st);
}

OutcomeTable probability_bruteforce(const NetworkConfig& config, const std::vector<double>& theta,
                                    std::vector<int> caps) {
    DenseState st = dense_probe(config, std::move(caps), true);
    evolve_dense(st, theta);
    OutcomeTable table;
    table.d = st.d;
    table.theta = theta;
    table.caps = st.caps;
    table.counts.reserve(st.size * 2 * st.d);
    table.probs.reserve(st.size);
    double mass = 0.0;
    for (long long idx = 0; idx < st.size; ++idx) {
        const auto occ = st.occupation(idx);
        table.counts.insert(table.counts.end(), occ.begin(), occ.end());
        const double p = std::norm(st.amp[idx]);
        table.probs.push_back(p);
        mass += p;
    }
    table.captured_mass = mass;
    return table;
}

}  // namespace qnet
