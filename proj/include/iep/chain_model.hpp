#pragma once

#include "iep/errors.hpp"
#include "iep/real.hpp"

#include <string>
#include <vector>

namespace iep {

struct ChainSystem {
    std::vector<Real> m;
    std::vector<Real> k;
    std::vector<Real> b;

    size_t n() const { return m.size(); }
};

struct Violation {
    size_t index;  // 1-based; 0 for whole-chain problems
    std::string field;
    std::string constraint;
};

using DenseMatrix = std::vector<std::vector<Real>>;

struct PencilMatrices {
    DenseMatrix M;
    DenseMatrix K;
    DenseMatrix B;
};

inline std::vector<Violation> validate(const ChainSystem& c) {
    std::vector<Violation> out;
    const size_t n = c.m.size();
    if (n == 0) out.push_back({0, "n", "chain must have at least one degree of freedom"});
    if (c.k.size() != n) out.push_back({0, "k", "length must equal n"});
    if (c.b.size() != n) out.push_back({0, "b", "length must equal n"});
    for (size_t j = 0; j < c.m.size(); ++j)
        if (!c.m[j].is_finite() || c.m[j].sign() <= 0) out.push_back({j + 1, "m", "mass must be positive"});
    for (size_t j = 0; j < c.k.size(); ++j)
        if (!c.k[j].is_finite() || c.k[j].sign() <= 0) out.push_back({j + 1, "k", "stiffness must be positive"});
    for (size_t j = 0; j < c.b.size(); ++j)
        if (!c.b[j].is_finite() || c.b[j].sign() < 0) out.push_back({j + 1, "b", "inertance must be non-negative"});
    return out;
}

inline void require_valid(const ChainSystem& c) {
    auto v = validate(c);
    if (v.empty()) return;
    std::string msg = "invalid chain:";
    for (auto& x : v) msg += " " + x.field + "[" + std::to_string(x.index) + "]: " + x.constraint + ";";
    throw ValidationError(msg);
}

// tridiagonal template shared by K and B: diag p_j + p_{j+1} (last p_n), off-diag -p_{j+1}
inline DenseMatrix chain_tridiagonal(const std::vector<Real>& p) {
    const size_t n = p.size();
    DenseMatrix A(n, std::vector<Real>(n, Real(0)));
    for (size_t j = 0; j < n; ++j) {
        A[j][j] = j + 1 < n ? p[j] + p[j + 1] : p[j];
        if (j + 1 < n) {
            A[j][j + 1] = -p[j + 1];
            A[j + 1][j] = -p[j + 1];
        }
    }
    return A;
}

inline PencilMatrices assemble(const ChainSystem& c) {
    require_valid(c);
    const size_t n = c.n();
    PencilMatrices P;
    P.M.assign(n, std::vector<Real>(n, Real(0)));
    for (size_t j = 0; j < n; ++j) P.M[j][j] = c.m[j];
    P.K = chain_tridiagonal(c.k);
    P.B = chain_tridiagonal(c.b);
    return P;
}

inline DenseMatrix add(const DenseMatrix& A, const DenseMatrix& B) {
    DenseMatrix C = A;
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < A.size(); ++j) C[i][j] = A[i][j] + B[i][j];
    return C;
}

//! Symmetric positive definiteness via unpivoted elimination (all leading minors positive).
inline bool positive_definite(DenseMatrix A) {
    const size_t n = A.size();
    for (size_t p = 0; p < n; ++p) {
        if (A[p][p].sign() <= 0) return false;
        for (size_t i = p + 1; i < n; ++i) {
            if (A[i][p].is_zero()) continue;
            Real f = A[i][p] / A[p][p];
            for (size_t j = p; j < n; ++j) A[i][j] -= f * A[p][j];
        }
    }
    return true;
}

}  // namespace iep
