#pragma once
#include <Eigen/Dense>
#include <memory>

namespace qnet {

// Fixed-total-photon sector of one two-port interferometer, basis |k, N-k>
// with k ascending (k = photons in the upper port). The generator in this
// sector is tridiagonal with couplings t_k = sqrt((k+1)(N-k))/2; its real
// symmetric surrogate T (zero diagonal, off-diagonal t) is diagonalized once
// per N and reused for every rotation angle.
struct SectorBasis {
    int N;
    Eigen::VectorXd t;       // couplings t_0..t_{N-1}
    Eigen::VectorXd lambda;  // eigenvalues of T, ascending
    Eigen::MatrixXd U;       // columns = eigenvectors of T
};

// Cached per-N eigenbases (global, thread-safe, kept for the process lifetime).
std::shared_ptr<const SectorBasis> sector_basis(int N);

// Full (N+1)x(N+1) rotation matrix for mixing angle theta. Entries are real:
// the i^(column-row) phases of the unitary are folded into sign/selection of
// the cosine and sine parts. Memoized on (N, theta) with theta quantized to
// 1e-12; the memo clears wholesale when it exceeds its cap.
std::shared_ptr<const Eigen::MatrixXd> mzi_matrix(int N, double theta);

// Single row of the rotation matrix, computed directly in O(N^2) and not
// memoized; this is the hot path of likelihood evaluation.
Eigen::VectorXd mzi_row(int N, double theta, int row);

// Elementwise theta-derivative of mzi_matrix (the response of every transition
// amplitude to the phase). Equals -D*A where A is the antisymmetric surrogate.
Eigen::MatrixXd b_matrix(int N, double theta);

// Test hook: drops all memoized rotation matrices (not the eigenbases).
void clear_mzi_memo();

}  // namespace qnet
