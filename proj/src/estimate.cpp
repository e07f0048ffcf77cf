#include "estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "errors.hpp"
#include "fisher.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace qnet {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kProbFloor = 1e-300;

// Grouped i.i.d. samples against one shared evaluator.
class Likelihood {
  public:
    Likelihood(const NetworkConfig& config, const std::vector<std::vector<int>>& samples)
        : eval_(config), width_(2 * config.d()) {
        std::map<std::vector<int>, int> groups;
        for (const auto& s : samples) {
            if (static_cast<int>(s.size()) != width_)
                throw std::invalid_argument("outcome width does not match the config");
            ++groups[s];
        }
        for (const auto& [mu, c] : groups) {
            flat_.insert(flat_.end(), mu.begin(), mu.end());
            counts_.push_back(c);
        }
    }

    double operator()(const std::vector<double>& theta, bool* floored) const {
        double total = 0.0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            double p = eval_.prob(theta, flat_.data() + i * width_);
            if (p < kProbFloor) {
                p = kProbFloor;
                if (floored) *floored = true;
            }
            total += counts_[i] * std::log(p);
        }
        return total;
    }

  private:
    ProbabilityEvaluator eval_;
    int width_;
    std::vector<int> flat_;
    std::vector<int> counts_;
};

struct AscentOut {
    std::vector<double> theta;
    double loglik;
    bool converged;
    bool floored;
};

AscentOut ascend(const Likelihood& like, std::vector<double> theta, const AscentSettings& s) {
    const int d = static_cast<int>(theta.size());
    bool floored = false;
    double cur = like(theta, &floored);
    double step = s.max_step;
    bool converged = false;
    std::vector<double> grad(d), probe(d), cand(d);

    for (int it = 0; it < s.max_iters; ++it) {
        for (int j = 0; j < d; ++j) {
            probe = theta;
            const double hi = std::min(kPi, theta[j] + s.fd_step);
            const double lo = std::max(0.0, theta[j] - s.fd_step);
            probe[j] = hi;
            const double fp = like(probe, &floored);
            probe[j] = lo;
            const double fm = like(probe, &floored);
            grad[j] = (fp - fm) / (hi - lo);
        }
        double gn = 0.0;
        for (double g : grad) gn += g * g;
        gn = std::sqrt(gn);
        if (gn < 1e-12) {
            converged = true;
            break;
        }
        bool moved = false;
        while (step >= s.min_step) {
            for (int j = 0; j < d; ++j)
                cand[j] = std::clamp(theta[j] + step * grad[j] / gn, 0.0, kPi);
            const double lc = like(cand, &floored);
            if (lc >= cur + s.armijo * step * gn) {
                theta = cand;
                cur = lc;
                moved = true;
                step = std::min(step * 2.0, s.max_step);
                break;
            }
            step *= 0.5;
        }
        if (!moved) {  // no ascent direction left at this scale
            converged = true;
            break;
        }
    }
    return {std::move(theta), cur, converged, floored};
}

}  // namespace

double log_likelihood(const std::vector<std::vector<int>>& samples, const NetworkConfig& config,
                      const std::vector<double>& theta) {
    if (samples.empty()) return 0.0;
    return Likelihood(config, samples)(theta, nullptr);
}

MleFit mle(const std::vector<std::vector<int>>& samples, const NetworkConfig& config,
           const AscentSettings& settings) {
    if (samples.empty()) throw std::invalid_argument("mle: no samples");
    if (settings.grid_points < 2 || settings.top_seeds < 1)
        throw std::invalid_argument("mle: bad search settings");
    const int d = config.d();
    Likelihood like(config, samples);

    // full-factorial seeding grid over [0, pi]^d, keep the best few
    std::vector<std::pair<double, std::vector<double>>> seeds;
    std::vector<int> idx(d, 0);
    std::vector<double> theta(d);
    const int G = settings.grid_points;
    for (;;) {
        for (int j = 0; j < d; ++j) theta[j] = kPi * idx[j] / (G - 1);
        seeds.emplace_back(like(theta, nullptr), theta);
        std::push_heap(seeds.begin(), seeds.end(), std::greater<>());
        if (static_cast<int>(seeds.size()) > settings.top_seeds) {
            std::pop_heap(seeds.begin(), seeds.end(), std::greater<>());
            seeds.pop_back();
        }
        int j = d - 1;
        while (j >= 0 && ++idx[j] == G) idx[j--] = 0;
        if (j < 0) break;
    }
    std::sort(seeds.rbegin(), seeds.rend());

    MleFit out;
    out.loglik = -std::numeric_limits<double>::infinity();
    for (const auto& [l0, seed_theta] : seeds) {
        AscentOut res = ascend(like, seed_theta, settings);
        if (res.loglik > out.loglik) {
            out.theta = std::move(res.theta);
            out.loglik = res.loglik;
            out.converged = res.converged;
            out.floored = res.floored;
        }
    }
    return out;
}

std::vector<std::vector<double>> mle_trials(const NetworkConfig& config,
                                            const std::vector<double>& theta_true, int m,
                                            int trials, std::uint64_t seed, int workers,
                                            const AscentSettings& settings, int* flagged,
                                            std::uint64_t stream_base) {
    if (m < 1) throw std::invalid_argument("shots per trial must be positive");
    if (trials < 2) throw std::invalid_argument("need at least two trials");

    // tabulate the truth where feasible, otherwise draw sensor by sensor
    OutcomeTable table;
    std::unique_ptr<SequentialSampler> seq;
    try {
        table = probability_table(config, theta_true);
    } catch (const TooLargeError&) {
        if (config.scheme != Scheme::ME) throw;
        seq = std::make_unique<SequentialSampler>(config, theta_true);
    }

    std::vector<std::vector<double>> out(trials);
    std::atomic<int> next{0};
    std::atomic<int> nflag{0};
    auto work = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            auto rng = stream_rng(seed, stream_base + t + 1);
            std::vector<std::vector<int>> samples;
            if (seq) {
                samples.reserve(m);
                for (int i = 0; i < m; ++i) samples.push_back(seq->draw(rng));
            } else {
                samples = sample(table, rng, m);
            }
            MleFit fit = mle(samples, config, settings);
            if (!fit.converged || fit.floored) nflag.fetch_add(1);
            out[t] = std::move(fit.theta);
        }
    };

    int W = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    W = std::clamp(W, 1, trials);
    if (W == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(W);
        for (int i = 0; i < W; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (flagged) *flagged = nflag.load();
    return out;
}

EstimationResult run_experiment(const NetworkConfig& config, const std::vector<double>& theta_true,
                                const std::vector<double>& v, int m, int trials,
                                std::uint64_t seed, int workers, const AscentSettings& settings) {
    const int d = config.d();
    if (static_cast<int>(theta_true.size()) != d || static_cast<int>(v.size()) != d)
        throw std::invalid_argument("theta/v size does not match the config");

    EstimationResult r;
    r.estimates = mle_trials(config, theta_true, m, trials, seed, workers, settings, &r.flagged);
    r.v = v;
    r.trials = trials;
    r.m = m;
    r.seed = seed;

    std::vector<double> x(trials);
    for (int t = 0; t < trials; ++t) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += v[j] * (r.estimates[t][j] - theta_true[j]);
        x[t] = dot;
        r.bias += dot;
    }
    r.bias /= trials;
    for (double xv : x) r.msf += (xv - r.bias) * (xv - r.bias);
    r.msf /= trials;
    return r;
}

std::vector<SweepPoint> theta_sweep(const NetworkConfig& config, const std::vector<double>& v,
                                    int m, const std::vector<std::vector<double>>& thetas,
                                    int trials, std::uint64_t seed, int workers) {
    const Qfim F = config.scheme == Scheme::ME ? qfim_me(config) : qfim_ms(config);
    const double bound = qcrb(F, v, m);
    std::vector<SweepPoint> out;
    out.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        int flagged = 0;
        auto est = mle_trials(config, thetas[i], m, trials, seed, workers, {}, &flagged,
                              static_cast<std::uint64_t>(i) << 32);
        SweepPoint pt;
        pt.theta = thetas[i];
        double bias = 0.0;
        std::vector<double> x(trials);
        for (int t = 0; t < trials; ++t) {
            double dot = 0.0;
            for (int j = 0; j < config.d(); ++j) dot += v[j] * (est[t][j] - thetas[i][j]);
            x[t] = dot;
            bias += dot;
        }
        bias /= trials;
        for (double xv : x) pt.msf += (xv - bias) * (xv - bias);
        pt.msf /= trials;
        pt.normalized = pt.msf / bound;
        for (double th : thetas[i])
            if (std::min(th, kPi - th) < 0.1) pt.boundary = true;
        out.push_back(std::move(pt));
    }
    return out;
}

MOptResult find_m_opt(const std::function<NetworkConfig(double)>& family, double total_N,
                      const std::vector<int>& candidates, const std::vector<double>& theta_true,
                      const std::vector<double>& v, int trials, std::uint64_t seed, int workers) {
    if (candidates.empty()) throw std::invalid_argument("no shot-number candidates");
    if (total_N <= 0.0) throw std::invalid_argument("total budget must be positive");
    MOptResult res;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const int m = candidates[i];
        if (m < 1) throw std::invalid_argument("shot candidates must be positive");
        NetworkConfig cfg = family(total_N / m);
        int flagged = 0;
        auto est = mle_trials(cfg, theta_true, m, trials, seed, workers, {}, &flagged,
                              static_cast<std::uint64_t>(i) << 32);
        double bias = 0.0;
        std::vector<double> x(trials);
        for (int t = 0; t < trials; ++t) {
            double dot = 0.0;
            for (int j = 0; j < cfg.d(); ++j) dot += v[j] * (est[t][j] - theta_true[j]);
            x[t] = dot;
            bias += dot;
        }
        bias /= trials;
        double msf = 0.0;
        for (double xv : x) msf += (xv - bias) * (xv - bias);
        msf /= trials;
        res.curve.emplace_back(m, msf);
        if (msf < best) {
            best = msf;
            res.m_opt = m;
        }
    }
    return res;
}

FitResult fit_gamma(const std::vector<std::pair<double, double>>& points, int m_opt, int d,
                    Scheme model) {
    if (points.size() < 3) throw std::invalid_argument("fit needs at least three points");
    if (m_opt < 1 || d < 1) throw std::invalid_argument("bad fit parameters");
    double sphi2 = 0.0, sy = 0.0;
    std::vector<double> phis;
    phis.reserve(points.size());
    for (const auto& [nT, msf] : points) {
        if (nT <= 0.0) throw std::invalid_argument("budget points must be positive");
        const double phi = model == Scheme::ME
                               ? m_opt / (nT * nT + 2.0 * nT * m_opt)
                               : m_opt * d / (nT * nT + 2.0 * nT * d * m_opt);
        phis.push_back(phi);
        sphi2 += phi * phi;
        sy += msf * phi;
    }
    if (sphi2 == 0.0) throw std::invalid_argument("degenerate fit design");
    FitResult fit;
    fit.gamma = sy / sphi2;
    fit.model = model;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double r = points[i].second - fit.gamma * phis[i];
        fit.residual += r * r;
    }
    return fit;
}

double sum_of_variances_experiment(const NetworkConfig& config,
                                   const std::vector<double>& theta_true, int m, int trials,
                                   std::uint64_t seed, int workers) {
    const int d = config.d();
    if (static_cast<int>(theta_true.size()) != d)
        throw std::invalid_argument("theta size does not match the config");
    auto est = mle_trials(config, theta_true, m, trials, seed, workers);
    double total = 0.0;
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t) mean += est[t][j] - theta_true[j];
        mean /= trials;
        double var = 0.0;
        for (int t = 0; t < trials; ++t) {
            const double e = est[t][j] - theta_true[j] - mean;
            var += e * e;
        }
        total += var / trials;
    }
    return total;
}

std::string estimation_csv(const EstimationResult& result) {
    std::string s = "# msf=" + f17(result.msf) + ",bias=" + f17(result.bias) +
                    ",trials=" + std::to_string(result.trials) + ",m=" + std::to_string(result.m) +
                    ",seed=" + std::to_string(result.seed) +
                    ",flagged=" + std::to_string(result.flagged) + kCrlf;
    const int d = result.estimates.empty() ? 0 : static_cast<int>(result.estimates[0].size());
    s += "trial";
    for (int j = 1; j <= d; ++j) s += ",Theta_" + std::to_string(j);
    s += kCrlf;
    for (std::size_t t = 0; t < result.estimates.size(); ++t) {
        s += std::to_string(t);
        for (double th : result.estimates[t]) s += "," + f17(th);
        s += kCrlf;
    }
    return s;
}

std::string fit_json(const FitResult& fit, int m_opt) {
    return std::string("{\"gamma\":") + f17(fit.gamma) + ",\"model\":\"" +
           (fit.model == Scheme::ME ? "ME" : "MS") + "\",\"residual\":" + f17(fit.residual) +
           ",\"m_opt\":" + std::to_string(m_opt) + "}";
}

}  // namespace qnet
