#include "mzi.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

namespace qnet {

namespace {

std::mutex g_basis_mutex;
std::map<int, std::shared_ptr<const SectorBasis>> g_bases;

struct MemoKey {
    int N;
    std::int64_t q;
    bool operator==(const MemoKey&) const = default;
};
struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const {
        return std::hash<std::int64_t>()(k.q * 1000003 + k.N);
    }
};

constexpr std::size_t kMemoCap = 16384;
std::shared_mutex g_memo_mutex;
std::unordered_map<MemoKey, std::shared_ptr<const Eigen::MatrixXd>, MemoKeyHash> g_memo;

MemoKey memo_key(int N, double theta) {
    return MemoKey{N, static_cast<std::int64_t>(std::llround(theta / 1e-12))};
}

// D(a,b) = i^(a-b) (C + iS)_(a,b); parity of T makes exactly one of C, S
// nonzero at each distance, so the result is real with a sign from the phase.
inline double select_real(double c, double s, int row, int col) {
    switch (((col - row) % 4 + 4) % 4) {
        case 0: return c;
        case 1: return s;
        case 2: return -c;
        default: return -s;
    }
}

}  // namespace

std::shared_ptr<const SectorBasis> sector_basis(int N) {
    if (N < 0) throw std::invalid_argument("sector_basis: N must be >= 0");
    {
        std::lock_guard lk(g_basis_mutex);
        auto it = g_bases.find(N);
        if (it != g_bases.end()) return it->second;
    }
    auto sb = std::make_shared<SectorBasis>();
    sb->N = N;
    sb->t.resize(N);
    for (int k = 0; k < N; ++k) sb->t[k] = 0.5 * std::sqrt(double(k + 1) * double(N - k));
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(N + 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sb->t, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sector_basis: eigendecomposition failed");
    sb->lambda = es.eigenvalues();
    sb->U = es.eigenvectors();
    std::lock_guard lk(g_basis_mutex);
    auto [it, inserted] = g_bases.emplace(N, std::move(sb));
    (void)inserted;  // a concurrent builder may have won; either copy is fine
    return it->second;
}

std::shared_ptr<const Eigen::MatrixXd> mzi_matrix(int N, double theta) {
    const MemoKey key = memo_key(N, theta);
    {
        std::shared_lock lk(g_memo_mutex);
        auto it = g_memo.find(key);
        if (it != g_memo.end()) return it->second;
    }
    auto D = std::make_shared<Eigen::MatrixXd>(N + 1, N + 1);
    if (theta == 0.0) {
        D->setIdentity();
    } else {
        auto sb = sector_basis(N);
        const Eigen::ArrayXd phase = theta * sb->lambda.array();
        const Eigen::MatrixXd C =
            sb->U * phase.cos().matrix().asDiagonal() * sb->U.transpose();
        const Eigen::MatrixXd S =
            sb->U * phase.sin().matrix().asDiagonal() * sb->U.transpose();
        for (int a = 0; a <= N; ++a)
            for (int b = 0; b <= N; ++b) (*D)(a, b) = select_real(C(a, b), S(a, b), a, b);
    }
    std::unique_lock lk(g_memo_mutex);
    if (g_memo.size() >= kMemoCap) g_memo.clear();
    auto [it, inserted] = g_memo.emplace(key, std::move(D));
    (void)inserted;
    return it->second;
}

Eigen::VectorXd mzi_row(int N, double theta, int row) {
    if (row < 0 || row > N) throw std::invalid_argument("mzi_row: row out of range");
    if (theta == 0.0) return Eigen::VectorXd::Unit(N + 1, row);
    auto sb = sector_basis(N);
    const Eigen::ArrayXd phase = theta * sb->lambda.array();
    const Eigen::ArrayXd ua = sb->U.row(row).transpose().array();
    const Eigen::VectorXd crow = sb->U * (ua * phase.cos()).matrix();
    const Eigen::VectorXd srow = sb->U * (ua * phase.sin()).matrix();
    Eigen::VectorXd out(N + 1);
    for (int b = 0; b <= N; ++b) out[b] = select_real(crow[b], srow[b], row, b);
    return out;
}

Eigen::MatrixXd b_matrix(int N, double theta) {
    auto Dp = mzi_matrix(N, theta);
    const Eigen::MatrixXd& D = *Dp;
    auto sb = sector_basis(N);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N + 1, N + 1);
    for (int c = 0; c <= N; ++c) {
        if (c + 1 <= N) B.col(c) -= sb->t[c] * D.col(c + 1);
        if (c - 1 >= 0) B.col(c) += sb->t[c - 1] * D.col(c - 1);
    }
    return B;
}

void clear_mzi_memo() {
    std::unique_lock lk(g_memo_mutex);
    g_memo.clear();
}

}  // namespace qnet
