// C surface over the C++ core: opaque handles, status codes, thread-local
// error text. Every entry point funnels through guarded() so exceptions never
// cross the boundary.
#include "qnet/qnet.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "allocate.hpp"
#include "errors.hpp"
#include "estimate.hpp"
#include "fisher.hpp"
#include "fock.hpp"
#include "network.hpp"
#include "textio.hpp"

struct qnet_config {
    qnet::NetworkConfig cfg;
};

struct qnet_qfim {
    qnet::Qfim F;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) noexcept {
    try {
        fn();
        return QNET_OK;
    } catch (const qnet::CutoffError& e) {
        g_last_error = e.what();
        return QNET_ERR_CUTOFF;
    } catch (const qnet::SingularError& e) {
        g_last_error = e.what();
        return QNET_ERR_SINGULAR;
    } catch (const qnet::InfeasibleError& e) {
        g_last_error = e.what();
        return QNET_ERR_INFEASIBLE;
    } catch (const qnet::TooLargeError& e) {
        g_last_error = e.what();
        return QNET_ERR_TOO_LARGE;
    } catch (const qnet::ConvergenceError& e) {
        g_last_error = e.what();
        return QNET_ERR_CONVERGENCE;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return QNET_ERR_INVALID;
    } catch (const std::domain_error& e) {
        g_last_error = e.what();
        return QNET_ERR_INVALID;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return QNET_ERR_NOMEM;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QNET_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return QNET_ERR_UNKNOWN;
    }
}

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::vector<double> to_vec(const double* p, int n) {
    require(p != nullptr, "null array argument");
    require(n >= 1, "array length must be positive");
    return std::vector<double>(p, p + n);
}

char* dup_cstr(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

qnet::SingleModeState make_probe(int kind, double param) {
    switch (kind) {
        case QNET_PROBE_VACUUM:
            return qnet::make_vacuum();
        case QNET_PROBE_FOCK: {
            const long n = std::llround(param);
            require(n >= 0 && std::abs(param - static_cast<double>(n)) < 1e-9,
                    "photon number must be a nonnegative integer");
            return qnet::make_fock(static_cast<int>(n));
        }
        case QNET_PROBE_COHERENT:
            return qnet::make_coherent(param);
        case QNET_PROBE_SQUEEZED:
            return qnet::make_squeezed_vacuum(param);
        case QNET_PROBE_CAT:
            return qnet::make_cat(param);
        default:
            throw std::invalid_argument("unknown probe kind");
    }
}

// Budget-optimal families with a balanced, integral Fock probe. These back
// both the *_optimal_*_config constructors and the shot-number search.
qnet::NetworkConfig optimal_me(const std::vector<double>& v, double nT) {
    require(nT > 0.0, "photon budget must be positive");
    const long n = std::llround(nT / 2.0);
    const double nc = nT - static_cast<double>(n);
    qnet::AllocationPlan plan = qnet::me_allocation(v, nc);
    return qnet::make_me_config(plan.alphas, plan.splitting, qnet::make_fock(static_cast<int>(n)));
}

qnet::NetworkConfig optimal_ms(const std::vector<double>& v, double nT) {
    qnet::AllocationPlan plan = qnet::ms_allocation_norm(v, nT);
    const int d = static_cast<int>(v.size());
    std::vector<double> alphas(d);
    std::vector<qnet::SingleModeState> probes;
    probes.reserve(d);
    for (int j = 0; j < d; ++j) {
        const double total = plan.splitting[j];
        const long n = std::llround(total / 2.0);
        const double a2 = std::max(total - static_cast<double>(n), 0.0);
        alphas[j] = std::copysign(std::sqrt(a2), v[j]);
        probes.push_back(qnet::make_fock(static_cast<int>(n)));
    }
    return qnet::make_ms_config(std::move(alphas), std::move(probes));
}

// Population mean and variance of v.(Theta_t - theta_true), in the same
// two-pass order the experiment driver uses.
void projection_stats(const std::vector<std::vector<double>>& estimates,
                      const std::vector<double>& theta_true, const double* v, int d, int trials,
                      double* msf, double* bias) {
    std::vector<double> x(trials);
    double mean = 0.0;
    for (int t = 0; t < trials; ++t) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += v[j] * (estimates[t][j] - theta_true[j]);
        x[t] = dot;
        mean += dot;
    }
    mean /= trials;
    double var = 0.0;
    for (double xv : x) var += (xv - mean) * (xv - mean);
    var /= trials;
    if (msf) *msf = var;
    if (bias) *bias = mean;
}

}  // namespace

extern "C" {

const char* qnet_version(void) { return qnet::kVersion; }

const char* qnet_last_error(void) { return g_last_error.c_str(); }

void qnet_string_free(char* s) { std::free(s); }

int qnet_probe_moments(int kind, double param, double* mean_n, double* var_p) {
    return guarded([&] {
        const qnet::SingleModeState st = make_probe(kind, param);
        if (mean_n) *mean_n = st.mean_n;
        if (var_p) *var_p = st.var_p;
    });
}

int qnet_config_me(const double* alphas, const double* splitting, int d, int probe_kind,
                   double probe_param, qnet_config** out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        qnet::NetworkConfig cfg = qnet::make_me_config(to_vec(alphas, d), to_vec(splitting, d),
                                                       make_probe(probe_kind, probe_param));
        *out = new qnet_config{std::move(cfg)};
    });
}

int qnet_config_ms(const double* alphas, int d, const int* probe_kinds, const double* probe_params,
                   qnet_config** out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        require(probe_kinds != nullptr && probe_params != nullptr, "null probe arrays");
        std::vector<double> a = to_vec(alphas, d);
        std::vector<qnet::SingleModeState> probes;
        probes.reserve(d);
        for (int j = 0; j < d; ++j) probes.push_back(make_probe(probe_kinds[j], probe_params[j]));
        *out = new qnet_config{qnet::make_ms_config(std::move(a), std::move(probes))};
    });
}

int qnet_optimal_me_config(const double* v, int d, double nT, qnet_config** out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = new qnet_config{optimal_me(to_vec(v, d), nT)};
    });
}

int qnet_optimal_ms_config(const double* v, int d, double nT, qnet_config** out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = new qnet_config{optimal_ms(to_vec(v, d), nT)};
    });
}

void qnet_config_free(qnet_config* cfg) { delete cfg; }

int qnet_config_dim(const qnet_config* cfg) { return cfg ? cfg->cfg.d() : 0; }

int qnet_config_photons(const qnet_config* cfg, double* nc, double* n, double* n_total) {
    return guarded([&] {
        require(cfg != nullptr, "null config");
        const double c = cfg->cfg.mean_nc();
        double probes = 0.0;
        for (double nj : cfg->cfg.mean_n()) probes += nj;
        if (nc) *nc = c;
        if (n) *n = probes;
        if (n_total) *n_total = c + probes;
    });
}

int qnet_config_probe_moments(const qnet_config* cfg, double* mean_n, double* var_p, int* count) {
    return guarded([&] {
        require(cfg != nullptr, "null config");
        const auto& probes = cfg->cfg.probes;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            if (mean_n) mean_n[i] = probes[i].mean_n;
            if (var_p) var_p[i] = probes[i].var_p;
        }
        if (count) *count = static_cast<int>(probes.size());
    });
}

int qnet_qfim_compute(const qnet_config* cfg, qnet_qfim** out) {
    return guarded([&] {
        require(cfg != nullptr, "null config");
        require(out != nullptr, "null output argument");
        qnet::Qfim F = cfg->cfg.scheme == qnet::Scheme::ME ? qnet::qfim_me(cfg->cfg)
                                                           : qnet::qfim_ms(cfg->cfg);
        *out = new qnet_qfim{std::move(F)};
    });
}

int qnet_qfim_moments(const double* alphas, const double* splitting, int d, double nbar,
                      double var_p, qnet_qfim** out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = new qnet_qfim{
            qnet::qfim_from_moments(to_vec(alphas, d), to_vec(splitting, d), nbar, var_p)};
    });
}

void qnet_qfim_free(qnet_qfim* F) { delete F; }

int qnet_qfim_dim(const qnet_qfim* F) { return F ? F->F.d : 0; }

int qnet_qfim_matrix(const qnet_qfim* F, double* out) {
    return guarded([&] {
        require(F != nullptr && out != nullptr, "null argument");
        const int d = F->F.d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out[i * d + j] = F->F.matrix(i, j);
    });
}

int qnet_qfim_inverse(const qnet_qfim* F, double* out) {
    return guarded([&] {
        require(F != nullptr && out != nullptr, "null argument");
        const Eigen::MatrixXd inv = qnet::invert_qfim(F->F);
        const int d = F->F.d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out[i * d + j] = inv(i, j);
    });
}

int qnet_qfim_kappa(const qnet_qfim* F, double* out) {
    return guarded([&] {
        require(F != nullptr && out != nullptr, "null argument");
        *out = F->F.kappa;
    });
}

int qnet_qcrb(const qnet_qfim* F, const double* v, int m, double* out) {
    return guarded([&] {
        require(F != nullptr && out != nullptr, "null argument");
        *out = qnet::qcrb(F->F, to_vec(v, F->F.d), m);
    });
}

int qnet_sum_of_variances_bound(const qnet_qfim* F, int m, double* out) {
    return guarded([&] {
        require(F != nullptr && out != nullptr, "null argument");
        *out = qnet::sum_of_variances_bound(F->F, m);
    });
}

int qnet_bound_general(double nc, double n, double var_p, int m, const double* v, int d,
                       double* out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = qnet::bound_general(nc, n, var_p, m, to_vec(v, d));
    });
}

int qnet_ms_optimal_bound(const double* v, int d, double nT, int m, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = qnet::ms_optimal_bound(to_vec(v, d), nT, m);
    });
}

int qnet_gain(const double* v, int d, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = qnet::gain(to_vec(v, d));
    });
}

int qnet_me_allocation(const double* v, int d, double nc, double n, double var_p, double* alphas,
                       double* splitting, double* achieved) {
    return guarded([&] {
        const qnet::AllocationPlan plan = qnet::me_allocation(to_vec(v, d), nc, n, var_p);
        for (int j = 0; j < d; ++j) {
            if (alphas) alphas[j] = plan.alphas[j];
            if (splitting) splitting[j] = plan.splitting[j];
        }
        if (achieved) *achieved = plan.achieved_bound;
    });
}

int qnet_ms_allocation_norm(const double* v, int d, double nT, double* alphas, double* totals,
                            double* probe_photons, double* achieved) {
    return guarded([&] {
        const qnet::AllocationPlan plan = qnet::ms_allocation_norm(to_vec(v, d), nT);
        for (int j = 0; j < d; ++j) {
            if (alphas) alphas[j] = plan.alphas[j];
            if (totals) totals[j] = plan.splitting[j];
            if (probe_photons) probe_photons[j] = plan.probe_photons[j];
        }
        if (achieved) *achieved = plan.achieved_bound;
    });
}

int qnet_ms_coherent_allocation(const double* v, int d, double nc, double n, double var_p,
                                double* alphas, double* totals, double* achieved) {
    return guarded([&] {
        const qnet::AllocationPlan plan = qnet::ms_coherent_allocation(to_vec(v, d), nc, n, var_p);
        for (int j = 0; j < d; ++j) {
            if (alphas) alphas[j] = plan.alphas[j];
            if (totals) totals[j] = plan.splitting[j];
        }
        if (achieved) *achieved = plan.achieved_bound;
    });
}

int qnet_kappa(const double* alphas, const double* splitting, int d, double n, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output argument");
        *out = qnet::kappa(to_vec(alphas, d), to_vec(splitting, d), n);
    });
}

int qnet_table_csv(const qnet_config* cfg, const double* theta, const char* config_hash,
                   char** out_csv) {
    return guarded([&] {
        require(cfg != nullptr && out_csv != nullptr, "null argument");
        const qnet::OutcomeTable table =
            qnet::probability_table(cfg->cfg, to_vec(theta, cfg->cfg.d()));
        *out_csv = dup_cstr(qnet::table_csv(table, config_hash ? config_hash : ""));
    });
}

int qnet_run_experiment(const qnet_config* cfg, const double* theta_true, const double* vs, int k,
                        int m, int trials, uint64_t seed, int workers, double* msf, double* bias,
                        int* flagged, char** out_csv) {
    return guarded([&] {
        require(cfg != nullptr, "null config");
        require(k >= 1, "need at least one weight vector");
        require(vs != nullptr, "null weight array");
        const int d = cfg->cfg.d();
        const std::vector<double> truth = to_vec(theta_true, d);

        qnet::EstimationResult r =
            qnet::run_experiment(cfg->cfg, truth, std::vector<double>(vs, vs + d), m, trials, seed,
                                 workers);
        if (msf) msf[0] = r.msf;
        if (bias) bias[0] = r.bias;
        for (int i = 1; i < k; ++i)
            projection_stats(r.estimates, truth, vs + static_cast<std::size_t>(i) * d, d, trials,
                             msf ? msf + i : nullptr, bias ? bias + i : nullptr);
        if (flagged) *flagged = r.flagged;
        if (out_csv) *out_csv = dup_cstr(qnet::estimation_csv(r));
    });
}

int qnet_sum_of_variances_experiment(const qnet_config* cfg, const double* theta_true, int m,
                                     int trials, uint64_t seed, int workers, double* out) {
    return guarded([&] {
        require(cfg != nullptr && out != nullptr, "null argument");
        *out = qnet::sum_of_variances_experiment(cfg->cfg, to_vec(theta_true, cfg->cfg.d()), m,
                                                 trials, seed, workers);
    });
}

int qnet_theta_sweep(const qnet_config* cfg, const double* v, int m, const double* thetas, int k,
                     int trials, uint64_t seed, int workers, double* msf, double* normalized,
                     int* boundary) {
    return guarded([&] {
        require(cfg != nullptr, "null config");
        require(thetas != nullptr && k >= 1, "need at least one phase point");
        const int d = cfg->cfg.d();
        std::vector<std::vector<double>> pts(k);
        for (int i = 0; i < k; ++i)
            pts[i].assign(thetas + static_cast<std::size_t>(i) * d,
                          thetas + static_cast<std::size_t>(i + 1) * d);
        const std::vector<qnet::SweepPoint> sweep =
            qnet::theta_sweep(cfg->cfg, to_vec(v, d), m, pts, trials, seed, workers);
        for (int i = 0; i < k; ++i) {
            if (msf) msf[i] = sweep[i].msf;
            if (normalized) normalized[i] = sweep[i].normalized;
            if (boundary) boundary[i] = sweep[i].boundary ? 1 : 0;
        }
    });
}

int qnet_find_m_opt(int scheme, const double* v, int d, double total_N, const int* candidates,
                    int ncand, const double* theta_true, int trials, uint64_t seed, int workers,
                    int* m_opt, double* curve_msf) {
    return guarded([&] {
        require(scheme == QNET_SCHEME_ME || scheme == QNET_SCHEME_MS, "unknown scheme");
        require(candidates != nullptr && ncand >= 1, "need at least one shot-number candidate");
        const std::vector<double> vv = to_vec(v, d);
        const std::function<qnet::NetworkConfig(double)> family =
            scheme == QNET_SCHEME_ME
                ? std::function<qnet::NetworkConfig(double)>(
                      [vv](double nT) { return optimal_me(vv, nT); })
                : std::function<qnet::NetworkConfig(double)>(
                      [vv](double nT) { return optimal_ms(vv, nT); });
        const qnet::MOptResult res =
            qnet::find_m_opt(family, total_N, std::vector<int>(candidates, candidates + ncand),
                             to_vec(theta_true, d), vv, trials, seed, workers);
        if (m_opt) *m_opt = res.m_opt;
        if (curve_msf)
            for (int i = 0; i < ncand; ++i) curve_msf[i] = res.curve[i].second;
    });
}

int qnet_fit_gamma(const double* nT, const double* msf, int npoints, int m_opt, int d, int scheme,
                   double* gamma, double* residual, char** out_json) {
    return guarded([&] {
        require(nT != nullptr && msf != nullptr, "null data arrays");
        require(scheme == QNET_SCHEME_ME || scheme == QNET_SCHEME_MS, "unknown scheme");
        std::vector<std::pair<double, double>> points;
        points.reserve(npoints > 0 ? npoints : 0);
        for (int i = 0; i < npoints; ++i) points.emplace_back(nT[i], msf[i]);
        const qnet::FitResult fit = qnet::fit_gamma(
            points, m_opt, d, scheme == QNET_SCHEME_ME ? qnet::Scheme::ME : qnet::Scheme::MS);
        if (gamma) *gamma = fit.gamma;
        if (residual) *residual = fit.residual;
        if (out_json) *out_json = dup_cstr(qnet::fit_json(fit, m_opt));
    });
}

}  // extern "C"
