#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "network.hpp"

namespace qnet {

// Multi-start search over [0, pi]^d: full-factorial seeding grid, then
// projected gradient ascent (central finite differences) from the best seeds.
struct AscentSettings {
    int grid_points = 21;
    int top_seeds = 3;
    double fd_step = 1e-5;
    double armijo = 1e-4;
    double max_step = 0.3;
    double min_step = 1e-7;
    int max_iters = 200;
};

struct MleFit {
    std::vector<double> theta;
    double loglik = 0.0;
    bool converged = false;
    bool floored = false;  // some outcome hit the log-probability floor
};

struct EstimationResult {
    std::vector<std::vector<double>> estimates;  // one Theta per trial
    std::vector<double> v;
    double msf = 0.0;   // variance of v.(Theta - theta_true), population form
    double bias = 0.0;  // mean of v.(Theta - theta_true)
    int trials = 0;
    int m = 0;
    std::uint64_t seed = 0;
    int flagged = 0;  // trials whose ascent failed to converge or hit the floor
};

struct FitResult {
    double gamma = 0.0;
    Scheme model = Scheme::ME;
    double residual = 0.0;
};

struct SweepPoint {
    std::vector<double> theta;
    double msf = 0.0;
    double normalized = 0.0;  // msf / qcrb
    bool boundary = false;    // true phase within 0.1 of the domain edge
};

struct MOptResult {
    int m_opt = 0;
    std::vector<std::pair<int, double>> curve;  // (m, msf), candidate order
};

// Sum over shots of log P(mu|theta); zero-probability outcomes contribute
// log(1e-300). Empty sample list gives 0.
double log_likelihood(const std::vector<std::vector<int>>& samples, const NetworkConfig& config,
                      const std::vector<double>& theta);

MleFit mle(const std::vector<std::vector<int>>& samples, const NetworkConfig& config,
           const AscentSettings& settings = {});

// trials independent draw-then-estimate repetitions. Trial t uses the RNG
// stream (seed, stream_base + t + 1), so results are reproducible for any
// worker count; workers = 0 means one thread per core.
std::vector<std::vector<double>> mle_trials(const NetworkConfig& config,
                                            const std::vector<double>& theta_true, int m,
                                            int trials, std::uint64_t seed, int workers,
                                            const AscentSettings& settings = {},
                                            int* flagged = nullptr,
                                            std::uint64_t stream_base = 0);

EstimationResult run_experiment(const NetworkConfig& config, const std::vector<double>& theta_true,
                                const std::vector<double>& v, int m, int trials,
                                std::uint64_t seed, int workers = 0,
                                const AscentSettings& settings = {});

// run_experiment at each grid point, msf normalized by the matching qcrb.
std::vector<SweepPoint> theta_sweep(const NetworkConfig& config, const std::vector<double>& v,
                                    int m, const std::vector<std::vector<double>>& thetas,
                                    int trials, std::uint64_t seed, int workers = 0);

// Shot-number search at fixed total budget: candidate m gets the config
// family(total_N / m) and m shots per trial.
MOptResult find_m_opt(const std::function<NetworkConfig(double)>& family, double total_N,
                      const std::vector<int>& candidates, const std::vector<double>& theta_true,
                      const std::vector<double>& v, int trials, std::uint64_t seed,
                      int workers = 0);

// One-parameter least squares of msf(N_T) against
//   gamma m/(N_T^2 + 2 N_T m)        (entangled)
//   gamma m d/(N_T^2 + 2 N_T d m)    (separable)
FitResult fit_gamma(const std::vector<std::pair<double, double>>& points, int m_opt, int d,
                    Scheme model);

// As run_experiment but reporting sum_j Var(Theta_j) about the true phases.
double sum_of_variances_experiment(const NetworkConfig& config,
                                   const std::vector<double>& theta_true, int m, int trials,
                                   std::uint64_t seed, int workers = 0);

// '#' summary line, then trial,Theta_1..Theta_d rows. CRLF line endings.
std::string estimation_csv(const EstimationResult& result);
std::string fit_json(const FitResult& fit, int m_opt);

}  // namespace qnet
