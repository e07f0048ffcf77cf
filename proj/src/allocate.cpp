#include "allocate.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"
#include "fisher.hpp"

namespace qnet {
namespace {

double norm1_checked(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("weight vector is empty");
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    if (l1 == 0.0) throw std::invalid_argument("weight vector is zero");
    return l1;
}

}  // namespace

AllocationPlan me_allocation(const std::vector<double>& v, double nc, double n, double var_p) {
    if (nc <= 0.0) throw std::invalid_argument("coherent budget must be positive");
    if (n < 0.0 || var_p < 1.0) throw std::invalid_argument("invalid probe moments");
    const double l1 = norm1_checked(v);
    const int d = static_cast<int>(v.size());

    AllocationPlan plan;
    plan.alphas.resize(d);
    plan.splitting.resize(d);
    plan.probe_photons = {n};
    for (int j = 0; j < d; ++j) {
        const double share = std::abs(v[j]) / l1;
        plan.splitting[j] = share;
        plan.alphas[j] = std::copysign(std::sqrt(nc * share), v[j]);
        if (v[j] == 0.0) plan.alphas[j] = 0.0;  // keep exact zeros sign-free
    }
    plan.achieved_bound = bound_general(nc, n, var_p, 1, v);
    return plan;
}

AllocationPlan ms_allocation_norm(const std::vector<double>& v, double nT) {
    if (nT <= 0.0) throw std::invalid_argument("total photon number must be positive");
    norm1_checked(v);
    const int d = static_cast<int>(v.size());
    double s23 = 0.0;
    for (double x : v) s23 += std::cbrt(x * x);

    AllocationPlan plan;
    plan.alphas.resize(d);
    plan.splitting.resize(d);
    plan.probe_photons.resize(d);
    for (int j = 0; j < d; ++j) {
        const double total = nT * std::cbrt(v[j] * v[j]) / s23;
        plan.splitting[j] = total;
        plan.probe_photons[j] = total / 2.0;  // even split within the sensor
        plan.alphas[j] = std::copysign(std::sqrt(total / 2.0), v[j]);
        if (v[j] == 0.0) plan.alphas[j] = 0.0;
    }
    plan.achieved_bound = ms_optimal_bound(v, nT, 1);
    return plan;
}

AllocationPlan ms_coherent_allocation(const std::vector<double>& v, double nc, double n,
                                      double var_p) {
    if (nc <= 0.0) throw std::invalid_argument("coherent budget must be positive");
    if (n < 0.0) throw std::invalid_argument("negative probe photon number");
    if (var_p < 1.0) throw std::invalid_argument("probe variance below vacuum");
    const double l1 = norm1_checked(v);
    const int d = static_cast<int>(v.size());
    const double budget = nc * var_p + n;
    const double per_sensor_probe = n / d;

    AllocationPlan plan;
    plan.alphas.resize(d);
    plan.splitting.resize(d);
    plan.probe_photons.assign(d, per_sensor_probe);
    for (int j = 0; j < d; ++j) {
        double a2 = (std::abs(v[j]) / l1 * budget - per_sensor_probe) / var_p;
        if (a2 < 0.0) {
            if (a2 < -1e-12)
                throw InfeasibleError("weights too skewed for the shared probe: alpha_" +
                                      std::to_string(j + 1) + "^2 < 0");
            a2 = 0.0;  // roundoff at the feasibility boundary
        }
        plan.alphas[j] = std::copysign(std::sqrt(a2), v[j]);
        plan.splitting[j] = a2 + per_sensor_probe;
    }
    plan.achieved_bound = bound_general(nc, n, var_p, 1, v);
    return plan;
}

double kappa(const std::vector<double>& alphas, const std::vector<double>& splitting, double n) {
    if (alphas.size() != splitting.size())
        throw std::invalid_argument("alphas and splitting sizes differ");
    if (n < 0.0) throw std::invalid_argument("negative probe photon number");
    double k = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        const double a2 = alphas[j] * alphas[j];
        const double djj = a2 + splitting[j] * n;
        // a zero denominator forces a zero numerator: such sensors hold nothing
        if (djj > 0.0) k += a2 * splitting[j] / djj;
    }
    return k;
}

}  // namespace qnet
