#pragma once
#include <Eigen/Dense>
#include <vector>

#include "network.hpp"

namespace qnet {

// Information matrix in rank-one-plus-diagonal form: matrix = gamma*f*f^T +
// diag(D). The decomposition, not the dense matrix, is what the closed-form
// inverse and bounds consume.
struct Qfim {
    int d = 0;
    double gamma = 0.0;      // probe quadrature variance minus one
    Eigen::VectorXd f;       // alpha_j sqrt(P_j)
    Eigen::VectorXd diag;    // alpha_j^2 + P_j nbar (or the full diagonal)
    Eigen::MatrixXd matrix;
    double kappa = 0.0;      // sum f_j^2 / D_jj over nonzero D
    bool low_variance = false;  // probe variance below vacuum; bounds not guaranteed
};

// Matrix from the scalar moments alone; also the bounds-only entry point that
// needs no probe state.
Qfim qfim_from_moments(const std::vector<double>& alphas, const std::vector<double>& splitting,
                       double nbar, double var_p);

Qfim qfim_me(const NetworkConfig& config);  // entangled scheme, exact closed form
Qfim qfim_ms(const NetworkConfig& config);  // separable scheme: diagonal

// Rank-one-update inverse (Sherman-Morrison); errors when some D_jj = 0 or
// the update denominator vanishes.
Eigen::MatrixXd invert_qfim(const Qfim& F);
// Dense LU fallback used as an internal cross-check.
Eigen::MatrixXd invert_qfim_dense(const Qfim& F);

// v^T F^{-1} v / m, computed on the support of v: sensors with D_jj = 0 are
// droppable only when v_j = 0 (they carry no resources and are not estimated).
double qcrb(const Qfim& F, const std::vector<double>& v, int m);

// ||v||_1^2 / (m [nc*var_p + n]) — the optimum over entangled allocations.
double bound_general(double nc, double n, double var_p, int m, const std::vector<double>& v);

// ||v||_{2/3}^2 / (m nT^2) — the optimum over separable allocations.
double ms_optimal_bound(const std::vector<double>& v, double nT, int m);

// Separable-to-entangled sensitivity ratio for normalized v: ||v||_{2/3}^2,
// ranging from 1 (single parameter) to d (uniform +-1/d weights).
double gain(const std::vector<double>& v);

// Tr[F^{-1}]/m via the analytic inverse.
double sum_of_variances_bound(const Qfim& F, int m);

}  // namespace qnet
