#include "network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "errors.hpp"
#include "mzi.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace qnet {

namespace {

// Truncated coherent-state coefficients; signed for negative alpha, no tail
// validation here (the table reports its own captured mass).
std::vector<double> coherent_coeffs(double alpha, int cap) {
    std::vector<double> c(static_cast<std::size_t>(cap) + 1, 0.0);
    if (alpha == 0.0) {
        c[0] = 1.0;
        return c;
    }
    auto lf = log_factorials(cap);
    const double la = std::log(std::abs(alpha));
    const double sign = alpha < 0 ? -1.0 : 1.0;
    double sgn = 1.0;
    for (int n = 0; n <= cap; ++n) {
        c[n] = sgn * std::exp(n * la - 0.5 * alpha * alpha - 0.5 * lf[n]);
        sgn *= sign;
    }
    return c;
}

// c(m) * sqrt(m!) — the probe weight each total occupation enters with.
std::vector<double> probe_weights(const SingleModeState& probe) {
    const int M = probe.cutoff();
    auto lf = log_factorials(M);
    std::vector<double> w(static_cast<std::size_t>(M) + 1);
    for (int m = 0; m <= M; ++m) w[m] = probe.coeffs[m] * std::exp(0.5 * lf[m]);
    return w;
}

// Lexicographic per-sensor outcome list: all (n, m) with n + m <= nmax.
std::vector<std::pair<int, int>> sensor_outcomes(int nmax) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(nmax + 1) * (nmax + 2) / 2);
    for (int n = 0; n <= nmax; ++n)
        for (int m = 0; m + n <= nmax; ++m) out.emplace_back(n, m);
    return out;
}

void check_caps(const NetworkConfig& cfg, std::vector<int>& caps) {
    if (caps.empty()) caps = auto_caps(cfg);
    if (static_cast<int>(caps.size()) != 2 * cfg.d())
        throw std::invalid_argument("caps must hold two entries per sensor");
    for (int c : caps)
        if (c < 0) throw std::invalid_argument("caps must be non-negative");
}

// g[m'] = P^{m'/2}/sqrt(m'!) * poi(N-m') * D(n, N-m'): the amplitude the
// sensor contributes when its probe share is m'. Entries with a reference
// occupation above capA are dropped (that part of the input was truncated).
std::vector<double> sensor_poly(const Eigen::VectorXd& drow, const std::vector<double>& poi,
                                double P, int N, int mmax, const std::vector<double>& lf) {
    const int capA = static_cast<int>(poi.size()) - 1;
    std::vector<double> g(static_cast<std::size_t>(mmax) + 1, 0.0);
    const int lo = std::max(0, N - capA);
    const int hi = std::min(N, mmax);
    for (int mp = lo; mp <= hi; ++mp)
        g[mp] = std::pow(P, 0.5 * mp) * std::exp(-0.5 * lf[mp]) * poi[N - mp] * drow[N - mp];
    return g;
}

constexpr std::size_t kMaxTableOutcomes = std::size_t(1) << 21;

}  // namespace

double NetworkConfig::mean_nc() const {
    double s = 0.0;
    for (double a : alphas) s += a * a;
    return s;
}

std::vector<double> NetworkConfig::mean_n() const {
    std::vector<double> out;
    for (const auto& p : probes) out.push_back(p.mean_n);
    return out;
}

double NetworkConfig::mean_n_total() const {
    double s = 0.0;
    for (const auto& p : probes) s += p.mean_n;
    return s;
}

NetworkConfig make_me_config(std::vector<double> alphas, std::vector<double> splitting,
                             SingleModeState probe) {
    if (alphas.empty()) throw std::invalid_argument("config: need at least one sensor");
    if (splitting.size() != alphas.size())
        throw std::invalid_argument("config: splitting length must match sensor count");
    double sum = 0.0;
    for (double p : splitting) {
        if (p < 0) throw std::invalid_argument("config: splitting entries must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("config: splitting must sum to 1 within 1e-12");
    if (probe.coeffs.empty()) throw std::invalid_argument("config: empty probe");
    NetworkConfig cfg;
    cfg.scheme = Scheme::ME;
    cfg.alphas = std::move(alphas);
    cfg.splitting = std::move(splitting);
    cfg.probes.push_back(std::move(probe));
    return cfg;
}

NetworkConfig make_ms_config(std::vector<double> alphas, std::vector<SingleModeState> probes) {
    if (alphas.empty()) throw std::invalid_argument("config: need at least one sensor");
    if (probes.size() != alphas.size())
        throw std::invalid_argument("config: one probe per sensor required");
    for (const auto& p : probes)
        if (p.coeffs.empty()) throw std::invalid_argument("config: empty probe");
    NetworkConfig cfg;
    cfg.scheme = Scheme::MS;
    cfg.alphas = std::move(alphas);
    cfg.probes = std::move(probes);
    return cfg;
}

double qc_split_coefficients(const SingleModeState& probe, const std::vector<double>& splitting,
                             const std::vector<int>& occupation) {
    if (occupation.size() != splitting.size())
        throw std::invalid_argument("qc_split_coefficients: occupation/splitting length mismatch");
    int m = 0;
    for (int mj : occupation) {
        if (mj < 0) throw std::invalid_argument("qc_split_coefficients: negative occupation");
        m += mj;
    }
    if (m > probe.cutoff() || probe.coeffs[m] == 0.0) return 0.0;
    auto lf = log_factorials(m);
    double log_mult = 0.5 * lf[m];
    double amp = probe.coeffs[m];
    for (std::size_t j = 0; j < occupation.size(); ++j) {
        log_mult -= 0.5 * lf[occupation[j]];
        amp *= std::pow(splitting[j], 0.5 * occupation[j]);
    }
    return amp * std::exp(log_mult);
}

std::vector<std::pair<std::vector<int>, double>> marginal_qc_distribution(
    const NetworkConfig& config) {
    if (config.scheme != Scheme::ME)
        throw std::invalid_argument("marginal_qc_distribution: entangled scheme required");
    for (double a : config.alphas)
        if (a != 0.0)
            throw std::invalid_argument("marginal_qc_distribution: references must be off");
    const auto& probe = config.probes[0];
    const int n = probe.cutoff();
    for (int m = 0; m < n; ++m)
        if (probe.coeffs[m] != 0.0)
            throw std::invalid_argument("marginal_qc_distribution: probe must be a number state");
    const int d = config.d();
    std::vector<std::pair<std::vector<int>, double>> out;
    std::vector<int> occ(d, 0);
    // lex enumeration of compositions of n into d parts
    auto rec = [&](auto&& self, int j, int rest) -> void {
        if (j == d - 1) {
            occ[j] = rest;
            const double a = qc_split_coefficients(probe, config.splitting, occ);
            out.emplace_back(occ, a * a);
            return;
        }
        for (int k = 0; k <= rest; ++k) {
            occ[j] = k;
            self(self, j + 1, rest - k);
        }
    };
    rec(rec, 0, n);
    return out;
}

std::vector<int> auto_caps(const NetworkConfig& config) {
    std::vector<int> caps;
    for (int j = 0; j < config.d(); ++j) {
        const double n2 = config.alphas[j] * config.alphas[j];
        caps.push_back(n2 == 0.0 ? 0
                                 : static_cast<int>(std::ceil(n2 + 10.0 * std::sqrt(n2 + 1.0))));
        caps.push_back(config.scheme == Scheme::ME ? config.probes[0].cutoff()
                                                   : config.probes[j].cutoff());
    }
    return caps;
}

OutcomeTable probability_table(const NetworkConfig& config, const std::vector<double>& theta,
                               std::vector<int> caps) {
    const int d = config.d();
    if (static_cast<int>(theta.size()) != d)
        throw std::invalid_argument("probability_table: theta length must match sensor count");
    check_caps(config, caps);

    OutcomeTable table;
    table.d = d;
    table.theta = theta;
    table.caps = caps;

    std::vector<std::vector<std::pair<int, int>>> outs(d);
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) {
        outs[j] = sensor_outcomes(caps[2 * j] + caps[2 * j + 1]);
        total *= outs[j].size();
        if (total > kMaxTableOutcomes)
            throw TooLargeError("probability_table: joint outcome space exceeds " +
                                std::to_string(kMaxTableOutcomes) + " entries");
    }
    table.counts.reserve(total * 2 * d);
    table.probs.reserve(total);

    if (config.scheme == Scheme::MS) {
        // per-sensor amplitude tables; the joint distribution is their product
        std::vector<std::vector<double>> pj(d);
        for (int j = 0; j < d; ++j) {
            const int capA = caps[2 * j], capB = caps[2 * j + 1];
            const auto poi = coherent_coeffs(config.alphas[j], capA);
            const auto& c = config.probes[j].coeffs;
            const int M = config.probes[j].cutoff();
            pj[j].reserve(outs[j].size());
            for (auto [n, m] : outs[j]) {
                const int N = n + m;
                const auto D = mzi_matrix(N, theta[j]);
                double amp = 0.0;
                const int lo = std::max(0, N - capA);
                const int hi = std::min({N, capB, M});
                for (int mp = lo; mp <= hi; ++mp)
                    amp += c[mp] * poi[N - mp] * (*D)(n, N - mp);
                pj[j].push_back(amp * amp);
            }
        }
        std::vector<std::size_t> idx(d, 0);
        std::vector<int> mu(2 * d);
        for (;;) {
            double p = 1.0;
            for (int j = 0; j < d; ++j) {
                p *= pj[j][idx[j]];
                mu[2 * j] = outs[j][idx[j]].first;
                mu[2 * j + 1] = outs[j][idx[j]].second;
            }
            table.counts.insert(table.counts.end(), mu.begin(), mu.end());
            table.probs.push_back(p);
            int j = d - 1;
            while (j >= 0 && ++idx[j] == outs[j].size()) idx[j--] = 0;
            if (j < 0) break;
        }
    } else {
        const auto& probe = config.probes[0];
        const int M = probe.cutoff();
        const auto cw = probe_weights(probe);
        auto lf = log_factorials(M);
        // per sensor and per (n, m): the polynomial in its probe share
        std::vector<std::vector<std::vector<double>>> gj(d);
        for (int j = 0; j < d; ++j) {
            const int capA = caps[2 * j];
            const int mmax = std::min(caps[2 * j + 1], M);
            const auto poi = coherent_coeffs(config.alphas[j], capA);
            gj[j].reserve(outs[j].size());
            for (auto [n, m] : outs[j]) {
                const int N = n + m;
                const auto D = mzi_matrix(N, theta[j]);
                gj[j].push_back(
                    sensor_poly(D->row(n).transpose(), poi, config.splitting[j], N, mmax, lf));
            }
        }
        // depth-first product over sensors with running truncated convolution
        std::vector<int> mu(2 * d);
        std::vector<double> w0{1.0};
        auto rec = [&](auto&& self, int j, const std::vector<double>& w) -> void {
            if (j == d) {
                double amp = 0.0;
                for (std::size_t s = 0; s < w.size(); ++s) amp += cw[s] * w[s];
                table.counts.insert(table.counts.end(), mu.begin(), mu.end());
                table.probs.push_back(amp * amp);
                return;
            }
            for (std::size_t i = 0; i < outs[j].size(); ++i) {
                mu[2 * j] = outs[j][i].first;
                mu[2 * j + 1] = outs[j][i].second;
                const auto& g = gj[j][i];
                const std::size_t len = std::min<std::size_t>(M + 1, w.size() + g.size() - 1);
                std::vector<double> wn(len, 0.0);
                for (std::size_t a = 0; a < w.size(); ++a) {
                    if (w[a] == 0.0) continue;
                    const std::size_t bmax = std::min(g.size(), len - a);
                    for (std::size_t b = 0; b < bmax; ++b) wn[a + b] += w[a] * g[b];
                }
                self(self, j + 1, wn);
            }
        };
        rec(rec, 0, w0);
    }

    double mass = 0.0;
    for (double p : table.probs) mass += p;
    table.captured_mass = mass;
    if (mass < 1.0 - 1e-3)
        throw CutoffError("probability_table: caps capture only " + f17(mass) + " of the mass",
                          mass);
    return table;
}

std::vector<std::vector<int>> sample(const OutcomeTable& table, std::uint64_t seed, int count) {
    auto rng = stream_rng(seed, 0);
    return sample(table, rng, count);
}

std::vector<std::vector<int>> sample(const OutcomeTable& table, std::mt19937_64& rng, int count) {
    if (table.size() == 0) throw std::invalid_argument("sample: empty table");
    if (count < 0) throw std::invalid_argument("sample: negative count");
    std::vector<double> cum(table.size());
    double run = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        run += table.probs[i];
        cum[i] = run;
    }
    std::vector<std::vector<int>> draws;
    draws.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double u = uniform01(rng) * table.captured_mass;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const std::size_t k = std::min<std::size_t>(it - cum.begin(), table.size() - 1);
        draws.emplace_back(table.outcome(k), table.outcome(k) + 2 * table.d);
    }
    return draws;
}

std::string table_csv(const OutcomeTable& table, const std::string& config_hash) {
    std::string s = "# theta=";
    for (std::size_t j = 0; j < table.theta.size(); ++j) {
        if (j) s += ';';
        s += f17(table.theta[j]);
    }
    s += ",captured_mass=" + f17(table.captured_mass) + ",config=" + config_hash + kCrlf;
    for (int j = 0; j < table.d; ++j)
        s += "n" + std::to_string(j + 1) + ",m" + std::to_string(j + 1) + ",";
    s += "probability";
    s += kCrlf;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const int* mu = table.outcome(i);
        for (int k = 0; k < 2 * table.d; ++k) s += std::to_string(mu[k]) + ",";
        s += f17(table.probs[i]);
        s += kCrlf;
    }
    return s;
}

ProbabilityEvaluator::ProbabilityEvaluator(const NetworkConfig& config, std::vector<int> caps)
    : cfg_(config), caps_(std::move(caps)) {
    check_caps(cfg_, caps_);
    for (int j = 0; j < cfg_.d(); ++j)
        poi_.push_back(coherent_coeffs(cfg_.alphas[j], caps_[2 * j]));
    if (cfg_.scheme == Scheme::ME) {
        cw_ = probe_weights(cfg_.probes[0]);
        probe_cut_ = cfg_.probes[0].cutoff();
    }
}

double ProbabilityEvaluator::prob(const std::vector<double>& theta, const int* mu) const {
    const int d = cfg_.d();
    if (cfg_.scheme == Scheme::MS) {
        double p = 1.0;
        for (int j = 0; j < d; ++j) {
            const int n = mu[2 * j], m = mu[2 * j + 1], N = n + m;
            const int capA = caps_[2 * j];
            const int M = cfg_.probes[j].cutoff();
            const auto& c = cfg_.probes[j].coeffs;
            const Eigen::VectorXd row = mzi_row(N, theta[j], n);
            double amp = 0.0;
            const int lo = std::max(0, N - capA);
            const int hi = std::min({N, caps_[2 * j + 1], M});
            for (int mp = lo; mp <= hi; ++mp) amp += c[mp] * poi_[j][N - mp] * row[N - mp];
            p *= amp * amp;
        }
        return p;
    }
    static thread_local std::vector<double> lf_cache;
    std::vector<double> w{1.0};
    for (int j = 0; j < d; ++j) {
        const int n = mu[2 * j], m = mu[2 * j + 1], N = n + m;
        const int mmax = std::min(caps_[2 * j + 1], probe_cut_);
        if (static_cast<int>(lf_cache.size()) < mmax + 1) lf_cache = log_factorials(mmax);
        const Eigen::VectorXd row = mzi_row(N, theta[j], n);
        const auto g = sensor_poly(row, poi_[j], cfg_.splitting[j], N, mmax, lf_cache);
        const std::size_t len = std::min<std::size_t>(probe_cut_ + 1, w.size() + g.size() - 1);
        std::vector<double> wn(len, 0.0);
        for (std::size_t a = 0; a < w.size(); ++a) {
            if (w[a] == 0.0) continue;
            const std::size_t bmax = std::min(g.size(), len - a);
            for (std::size_t b = 0; b < bmax; ++b) wn[a + b] += w[a] * g[b];
        }
        w.swap(wn);
    }
    double amp = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) amp += cw_[s] * w[s];
    return amp * amp;
}

SequentialSampler::SequentialSampler(const NetworkConfig& config, const std::vector<double>& theta,
                                     std::vector<int> caps) {
    if (config.scheme != Scheme::ME)
        throw std::invalid_argument("SequentialSampler: entangled scheme required");
    d_ = config.d();
    if (static_cast<int>(theta.size()) != d_)
        throw std::invalid_argument("SequentialSampler: theta length must match sensor count");
    check_caps(config, caps);
    const auto& probe = config.probes[0];
    probe_cut_ = probe.cutoff();
    cw_ = probe_weights(probe);
    auto lf = log_factorials(std::max(probe_cut_, 1));

    sensors_.resize(d_);
    for (int j = 0; j < d_; ++j) {
        auto& sen = sensors_[j];
        const int capA = caps[2 * j], capB = caps[2 * j + 1];
        const int mmax = std::min(capB, probe_cut_);
        const auto poi = coherent_coeffs(config.alphas[j], capA);
        double poi_mass = 0.0;
        for (double x : poi) poi_mass += x * x;
        sen.rho.assign(static_cast<std::size_t>(mmax) + 1, 0.0);
        for (int mp = 0; mp <= mmax; ++mp)
            sen.rho[mp] = poi_mass * std::pow(config.splitting[j], mp) * std::exp(-lf[mp]);
        sen.cands = sensor_outcomes(capA + capB);
        sen.g.reserve(sen.cands.size());
        for (auto [n, m] : sen.cands) {
            const int N = n + m;
            sen.g.push_back(
                sensor_poly(mzi_row(N, theta[j], n), poi, config.splitting[j], N, mmax, lf));
        }
    }
    suffixR_.assign(d_ + 1, {1.0});
    for (int j = d_ - 1; j >= 0; --j) suffixR_[j] = conv_trunc(suffixR_[j + 1], sensors_[j].rho);
    mass_ = traced_weight({1.0}, 0);
}

std::vector<double> SequentialSampler::conv_trunc(const std::vector<double>& a,
                                                  const std::vector<double>& b) const {
    const std::size_t len = std::min<std::size_t>(probe_cut_ + 1, a.size() + b.size() - 1);
    std::vector<double> out(len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        const std::size_t jmax = std::min(b.size(), len - i);
        for (std::size_t j = 0; j < jmax; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

double SequentialSampler::traced_weight(const std::vector<double>& w, int next_sensor) const {
    const auto& R = suffixR_[next_sensor];
    double total = 0.0;
    for (std::size_t T = 0; T < R.size(); ++T) {
        if (R[T] == 0.0) continue;
        double inner = 0.0;
        for (std::size_t S = 0; S + T <= static_cast<std::size_t>(probe_cut_) && S < w.size(); ++S)
            inner += cw_[S + T] * w[S];
        total += R[T] * inner * inner;
    }
    return total;
}

std::vector<int> SequentialSampler::draw(std::mt19937_64& rng) const {
    std::vector<int> mu(2 * d_);
    std::vector<double> w{1.0};
    std::vector<double> weights;
    for (int j = 0; j < d_; ++j) {
        const auto& sen = sensors_[j];
        weights.assign(sen.cands.size(), 0.0);
        double total = 0.0;
        std::vector<std::vector<double>> wn(sen.cands.size());
        for (std::size_t i = 0; i < sen.cands.size(); ++i) {
            wn[i] = conv_trunc(w, sen.g[i]);
            weights[i] = traced_weight(wn[i], j + 1);
            total += weights[i];
        }
        const double u = uniform01(rng) * total;
        double run = 0.0;
        std::size_t pick = sen.cands.size() - 1;
        for (std::size_t i = 0; i < sen.cands.size(); ++i) {
            run += weights[i];
            if (u <= run) {
                pick = i;
                break;
            }
        }
        mu[2 * j] = sen.cands[pick].first;
        mu[2 * j + 1] = sen.cands[pick].second;
        w = std::move(wn[pick]);
    }
    return mu;
}

double SequentialSampler::chain_probability(const std::vector<int>& outcome) const {
    if (static_cast<int>(outcome.size()) != 2 * d_)
        throw std::invalid_argument("chain_probability: outcome length mismatch");
    std::vector<double> w{1.0};
    for (int j = 0; j < d_; ++j) {
        const auto& sen = sensors_[j];
        const std::pair<int, int> want{outcome[2 * j], outcome[2 * j + 1]};
        const auto it = std::find(sen.cands.begin(), sen.cands.end(), want);
        if (it == sen.cands.end()) return 0.0;
        w = conv_trunc(w, sen.g[it - sen.cands.begin()]);
    }
    return traced_weight(w, d_);
}

}  // namespace qnet
