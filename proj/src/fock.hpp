#pragma once
#include <vector>

namespace qnet {

// Single bosonic mode in the number basis. Coefficients are real by
// construction (every catalogue state below has real Fock amplitudes), which
// is what makes the measurement saturate the multiparameter bound.
struct SingleModeState {
    std::vector<double> coeffs;  // c(0..M)
    double mean_n = 0.0;         // cached <n>, recomputed from coeffs
    double var_p = 1.0;          // cached <2 b'b + 1 - bb - b'b'> (= <p^2>, since <p> = 0)

    int cutoff() const { return static_cast<int>(coeffs.size()) - 1; }
    double norm2() const;
};

// Constructors. cutoff = -1 selects one automatically: mean + 10*sqrt(mean+1)
// for Poissonian tails (coherent, cat), a geometric-remainder bound for the
// squeezed vacuum whose number distribution decays only like tanh^{2k} r.
// An explicit cutoff that leaves more than 1e-8 of mass in the tail is
// rejected (CutoffError).
SingleModeState make_vacuum();
SingleModeState make_fock(int n);
SingleModeState make_coherent(double alpha, int cutoff = -1);
SingleModeState make_squeezed_vacuum(double r, int cutoff = -1);
SingleModeState make_cat(double alpha, int cutoff = -1);

// Squeezing parameter giving mean photon number nbar: r = asinh(sqrt(nbar)).
double squeeze_param_for_mean(double nbar);

// lf[m] = log(m!), cumulative; shared by the amplitude assembly code.
std::vector<double> log_factorials(int max_n);

// (sum_j |v_j|^kappa)^(1/kappa); kappa = 1 is computed as a plain sum so the
// 1-norm identity is exact.
double kappa_norm(const std::vector<double>& v, double kappa);

}  // namespace qnet
