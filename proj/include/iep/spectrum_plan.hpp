#pragma once

#include "iep/errors.hpp"
#include "iep/real.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace iep {

struct TargetSpectrum {
    std::vector<Real> lambdas;  // strictly increasing, positive
    std::vector<size_t> mults;

    size_t m() const { return lambdas.size(); }
    size_t n() const {
        size_t s = 0;
        for (size_t t : mults) s += t;
        return s;
    }
};

inline void require_well_formed(const TargetSpectrum& s) {
    if (s.lambdas.empty()) throw ValidationError("spectrum: no eigenvalues");
    if (s.lambdas.size() != s.mults.size()) throw ValidationError("spectrum: lambdas and mults differ in length");
    for (size_t i = 0; i < s.m(); ++i) {
        if (!s.lambdas[i].is_finite() || s.lambdas[i].sign() <= 0)
            throw ValidationError("spectrum: lambdas[" + std::to_string(i + 1) + "] must be positive");
        if (i && !(s.lambdas[i - 1] < s.lambdas[i]))
            throw ValidationError("spectrum: lambdas must be strictly increasing at index " + std::to_string(i + 1));
        if (s.mults[i] < 1) throw ValidationError("spectrum: mults[" + std::to_string(i + 1) + "] must be >= 1");
    }
}

//! 1-based indices i with t_i > i.
inline std::vector<size_t> feasibility_violations(const TargetSpectrum& s) {
    std::vector<size_t> bad;
    for (size_t i = 0; i < s.mults.size(); ++i)
        if (s.mults[i] > i + 1) bad.push_back(i + 1);
    return bad;
}

inline bool feasible(const TargetSpectrum& s) { return feasibility_violations(s).empty(); }

struct MultiplicityPlan {
    size_t n = 0, m = 0, T = 0;
    std::vector<std::vector<size_t>> S;  // S[j-1] = indices i (0-based) with t_i >= j+1, increasing
    std::vector<size_t> q;
    std::vector<std::optional<size_t>> schedule;  // by chain index 1..n (slot 0 unused): lambda index or free
    std::vector<size_t> pinned_indices;           // 1-based, increasing
    std::vector<Real> pinned_masses;              // M_l for pinned_indices[l]
    Real M_total;

    size_t scheduled_count() const {
        return std::count_if(schedule.begin(), schedule.end(), [](auto& x) { return x.has_value(); });
    }
};

inline MultiplicityPlan build_plan(const TargetSpectrum& s, std::vector<Real> pinned = {}) {
    require_well_formed(s);
    if (!feasible(s)) throw InfeasibleSpectrum("spectrum violates t_i <= i at index " + std::to_string(feasibility_violations(s).front()));
    MultiplicityPlan p;
    p.n = s.n();
    p.m = s.m();
    p.T = *std::max_element(s.mults.begin(), s.mults.end());
    if (pinned.empty()) pinned.assign(p.m, Real(1));
    if (pinned.size() != p.m) throw ValidationError("pinned_masses: expected " + std::to_string(p.m) + " values");
    for (size_t l = 0; l < p.m; ++l)
        if (!pinned[l].is_finite() || pinned[l].sign() <= 0)
            throw ValidationError("pinned_masses[" + std::to_string(l + 1) + "] must be positive");

    for (size_t j = 1; j < p.T; ++j) {
        std::vector<size_t> Sj;
        for (size_t i = 0; i < p.m; ++i)
            if (s.mults[i] >= j + 1) Sj.push_back(i);
        p.q.push_back(Sj.size());
        p.S.push_back(std::move(Sj));
    }

    // block j fills chain indices 2+j+offset .. 1+j+offset+q_{j+1} with S_{j+1} in decreasing order,
    // offset = q_1 + ... + q_j; one index is skipped between consecutive blocks
    p.schedule.assign(p.n + 1, std::nullopt);
    size_t offset = 0;
    for (size_t j = 0; j + 1 < p.T; ++j) {
        const size_t qj = p.q[j];
        for (size_t l = 1; l <= qj; ++l) p.schedule[1 + j + offset + l] = p.S[j][qj - l];
        offset += qj;
    }

    p.pinned_indices.push_back(1);
    for (size_t i = 2; i <= p.n; ++i)
        if (!p.schedule[i]) p.pinned_indices.push_back(i);
    if (p.pinned_indices.size() != p.m) throw Error("build_plan: pinned index count mismatch");
    p.pinned_masses = std::move(pinned);
    p.M_total = Real(0);
    for (auto& M : p.pinned_masses) p.M_total += M;
    return p;
}

struct Strategy {
    enum Kind { A, B } kind;
    size_t block = 0;         // B: S-block l (0-based), lambda* drawn from S_{l+1}
    size_t lambda_index = 0;  // B: index into the spectrum's lambdas
    size_t pinned_slot = 0;   // A: which pinned mass M_l becomes m_{j+1}
};

//! Step type for recursion index j in [1, n-1]; it produces the parameters of chain index j+1.
inline Strategy strategy_for(const MultiplicityPlan& p, size_t j) {
    if (j < 1 || j + 1 > p.n) throw DimensionError("strategy_for: j out of range");
    const size_t i = j + 1;
    if (p.schedule[i]) {
        size_t block = 0, end = 0;
        for (size_t l = 0; l < p.q.size(); ++l) {
            end += 1 + p.q[l];  // last chain index of block l
            if (i <= end) { block = l; break; }
        }
        return {Strategy::B, block, *p.schedule[i], 0};
    }
    auto it = std::find(p.pinned_indices.begin(), p.pinned_indices.end(), i);
    return {Strategy::A, 0, 0, static_cast<size_t>(it - p.pinned_indices.begin())};
}

}  // namespace iep
