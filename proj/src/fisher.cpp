#include "fisher.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "errors.hpp"

namespace qnet {
namespace {

void check_weights(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("weight vector is empty");
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    if (l1 == 0.0) throw std::invalid_argument("weight vector is zero");
}

double norm1(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

// ||v||_{2/3}^2 = (sum |v_j|^{2/3})^3
double norm23_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::cbrt(x * x);
    return s * s * s;
}

}  // namespace

Qfim qfim_from_moments(const std::vector<double>& alphas, const std::vector<double>& splitting,
                       double nbar, double var_p) {
    const int d = static_cast<int>(alphas.size());
    if (d == 0) throw std::invalid_argument("no sensors");
    if (splitting.size() != alphas.size())
        throw std::invalid_argument("alphas and splitting sizes differ");
    if (nbar < 0.0 || var_p < 0.0) throw std::invalid_argument("negative probe moments");
    double psum = 0.0;
    for (double p : splitting) {
        if (p < 0.0) throw std::invalid_argument("negative splitting weight");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw std::invalid_argument("splitting must sum to 1");

    Qfim F;
    F.d = d;
    F.gamma = var_p - 1.0;
    F.low_variance = var_p < 1.0;
    F.f.resize(d);
    F.diag.resize(d);
    for (int j = 0; j < d; ++j) {
        F.f(j) = alphas[j] * std::sqrt(splitting[j]);
        F.diag(j) = alphas[j] * alphas[j] + splitting[j] * nbar;
    }
    F.matrix = F.gamma * (F.f * F.f.transpose());
    F.matrix.diagonal() += F.diag;
    F.kappa = 0.0;
    for (int j = 0; j < d; ++j)
        if (F.diag(j) > 0.0) F.kappa += F.f(j) * F.f(j) / F.diag(j);
    return F;
}

Qfim qfim_me(const NetworkConfig& config) {
    if (config.scheme != Scheme::ME)
        throw std::invalid_argument("entangled-scheme matrix requested for a separable config");
    const SingleModeState& probe = config.probes[0];
    return qfim_from_moments(config.alphas, config.splitting, probe.mean_n, probe.var_p);
}

Qfim qfim_ms(const NetworkConfig& config) {
    if (config.scheme != Scheme::MS)
        throw std::invalid_argument("separable-scheme matrix requested for an entangled config");
    const int d = config.d();
    Qfim F;
    F.d = d;
    F.gamma = 0.0;
    F.kappa = 0.0;
    F.f = Eigen::VectorXd::Zero(d);
    F.diag.resize(d);
    for (int j = 0; j < d; ++j) {
        const SingleModeState& probe = config.probes[j];
        F.diag(j) = config.alphas[j] * config.alphas[j] * probe.var_p + probe.mean_n;
        if (probe.var_p < 1.0) F.low_variance = true;
    }
    F.matrix = F.diag.asDiagonal();
    return F;
}

Eigen::MatrixXd invert_qfim(const Qfim& F) {
    for (int j = 0; j < F.d; ++j)
        if (F.diag(j) <= 0.0) throw SingularError("information matrix has a zero diagonal entry");
    const double denom = 1.0 + F.gamma * F.kappa;
    if (std::abs(denom) < 1e-14) throw SingularError("rank-one update denominator vanishes");
    Eigen::VectorXd g = F.f.array() / F.diag.array();
    Eigen::MatrixXd inv = (-F.gamma / denom) * (g * g.transpose());
    inv.diagonal() += F.diag.cwiseInverse();
    return inv;
}

Eigen::MatrixXd invert_qfim_dense(const Qfim& F) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(F.matrix);
    if (!lu.isInvertible()) throw SingularError("information matrix is singular");
    return lu.inverse();
}

double qcrb(const Qfim& F, const std::vector<double>& v, int m) {
    if (static_cast<int>(v.size()) != F.d) throw std::invalid_argument("weight size mismatch");
    if (m < 1) throw std::invalid_argument("repetition count must be positive");
    // Restrict to the support of v; zero-resource sensors may only carry zero weight.
    double quad = 0.0, proj = 0.0, kap = 0.0;
    for (int j = 0; j < F.d; ++j) {
        if (F.diag(j) <= 0.0) {
            if (v[j] != 0.0)
                throw SingularError("nonzero weight on a sensor with no resources");
            continue;
        }
        quad += v[j] * v[j] / F.diag(j);
        proj += v[j] * F.f(j) / F.diag(j);
        kap += F.f(j) * F.f(j) / F.diag(j);
    }
    const double denom = 1.0 + F.gamma * kap;
    if (std::abs(denom) < 1e-14) throw SingularError("rank-one update denominator vanishes");
    return (quad - F.gamma / denom * proj * proj) / m;
}

double bound_general(double nc, double n, double var_p, int m, const std::vector<double>& v) {
    check_weights(v);
    if (m < 1) throw std::invalid_argument("repetition count must be positive");
    if (nc < 0.0 || n < 0.0) throw std::invalid_argument("negative photon budget");
    if (var_p < 1.0) throw std::invalid_argument("probe variance below vacuum");
    const double denom = nc * var_p + n;
    if (denom == 0.0) throw std::invalid_argument("no photons in the network");
    const double l1 = norm1(v);
    return l1 * l1 / (m * denom);
}

double ms_optimal_bound(const std::vector<double>& v, double nT, int m) {
    check_weights(v);
    if (m < 1) throw std::invalid_argument("repetition count must be positive");
    if (nT <= 0.0) throw std::invalid_argument("total photon number must be positive");
    return norm23_sq(v) / (m * nT * nT);
}

double gain(const std::vector<double>& v) {
    check_weights(v);
    if (std::abs(norm1(v) - 1.0) > 1e-9)
        throw std::invalid_argument("gain expects weights with unit 1-norm");
    return norm23_sq(v);
}

double sum_of_variances_bound(const Qfim& F, int m) {
    if (m < 1) throw std::invalid_argument("repetition count must be positive");
    return invert_qfim(F).trace() / m;
}

}  // namespace qnet
