#pragma once
#include <vector>

namespace qnet {

// Resource assignment optimized for estimating v . theta. splitting holds the
// probe share P_j for the entangled scheme and the per-sensor photon total
// n_{T,j} for the separable one; achieved_bound is the single-shot variance
// the assignment attains.
struct AllocationPlan {
    std::vector<double> alphas;         // signed reference amplitudes
    std::vector<double> splitting;
    std::vector<double> probe_photons;  // one entry (entangled) or per sensor
    double achieved_bound = 0.0;
};

// Entangled scheme: P_j = |v_j|/||v||_1, alpha_j = sign(v_j) sqrt(nc P_j).
// Attains ||v||_1^2 / (nc var_p + n) per shot.
AllocationPlan me_allocation(const std::vector<double>& v, double nc, double n = 0.0,
                             double var_p = 1.0);

// Separable scheme, per-sensor totals n_{T,j} proportional to |v_j|^{2/3},
// each split evenly between reference and a vacuum-variance probe arm.
// Attains ||v||_{2/3}^2 / nT^2 per shot.
AllocationPlan ms_allocation_norm(const std::vector<double>& v, double nT);

// Separable scheme with a fixed probe (n, var_p) shared evenly across sensors
// and only the references tuned. Throws InfeasibleError when some alpha_j^2
// would have to be negative.
AllocationPlan ms_coherent_allocation(const std::vector<double>& v, double nc, double n,
                                      double var_p);

// sum_j alpha_j^2 P_j / (alpha_j^2 + P_j n); sensors with no resources
// contribute zero. Bounded by nc/(nc + n) with equality at P_j = alpha_j^2/nc.
double kappa(const std::vector<double>& alphas, const std::vector<double>& splitting, double n);

}  // namespace qnet
