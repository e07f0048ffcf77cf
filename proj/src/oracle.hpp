#pragma once
#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "network.hpp"

namespace qnet {

// Brute-force reference path: explicit 2d-mode state vectors, direct sparse
// generator application, and complex per-sector exponentials. Shares no
// assembly shortcuts with the production code on purpose; slow and only used
// for validation.
struct DenseState {
    int d = 0;
    std::vector<int> caps;                                // capA_1, capB_1, ...
    std::vector<std::vector<std::pair<int, int>>> pairs;  // per-sensor (n, m), lex
    std::vector<std::vector<std::vector<int>>> pos;       // pos[j][n][m] -> slot or -1
    std::vector<long long> strides;                       // last sensor fastest
    long long size = 0;
    Eigen::VectorXcd amp;

    std::vector<int> occupation(long long idx) const;
    long long index(const std::vector<int>& occ) const;  // -1 when outside the basis
};

// exp(-i theta H) in the fixed-N sector, built from the complex Hermitian
// generator directly.
Eigen::MatrixXcd sector_unitary(int N, double theta);

// Product of truncated reference amplitudes and splitting coefficients.
// sector_complete selects per-sensor bases closed under the rotations
// (n + m <= capA + capB) instead of the rectangular per-mode caps.
DenseState dense_probe(const NetworkConfig& config, std::vector<int> caps = {},
                       bool sector_complete = false);

// In-place rotation of every sensor by its phase; requires a sector-complete
// basis (validated), under which it is norm-preserving.
void evolve_dense(DenseState& state, const std::vector<double>& theta);

// Sparse application of the sensor's generator; the basis must contain the
// image (true for sector-complete bases, and for rectangular ones whose
// amplitudes vanish on the boundary).
Eigen::VectorXcd apply_generator(const DenseState& state, int sensor);

// Re<H_j> for every sensor; zero for the real catalogue states.
std::vector<double> generator_means(const DenseState& state);

// max over outcomes and sensors of |Re[<Psi|H_j|mu><mu|Psi>]| — the quantity
// whose vanishing makes photon counting optimal.
double saturation_residual(const DenseState& state);

// 4 * covariance matrix of the generators on the (unevolved) probe.
Eigen::MatrixXd qfim_bruteforce(const NetworkConfig& config, std::vector<int> caps = {});

// Convenience: probe -> evolve -> residual.
double saturation_check(const NetworkConfig& config, const std::vector<double>& theta,
                        std::vector<int> caps = {});

// Evolve densely and square amplitudes; same outcome enumeration as
// probability_table so entries align index by index.
OutcomeTable probability_bruteforce(const NetworkConfig& config, const std::vector<double>& theta,
                                    std::vector<int> caps = {});

}  // namespace qnet
