#pragma once

#include "iep/iep.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <vector>

namespace iep::testing {

// ascending coefficients, Real valued
using Coeffs = std::vector<Real>;

inline Coeffs from_roots(const std::vector<Real>& roots, const Real& lead = Real(1)) {
    Coeffs c{lead};
    for (const Real& r : roots) {
        Coeffs n(c.size() + 1, Real(0));
        for (size_t i = 0; i < c.size(); ++i) {
            n[i + 1] += c[i];
            n[i] -= r * c[i];
        }
        c = std::move(n);
    }
    return c;
}

inline Coeffs axpy(const Real& a, const Coeffs& x, const Coeffs& y) {
    Coeffs r(std::max(x.size(), y.size()), Real(0));
    for (size_t i = 0; i < x.size(); ++i) r[i] += a * x[i];
    for (size_t i = 0; i < y.size(); ++i) r[i] += y[i];
    return r;
}

inline Coeffs shift_up(const Coeffs& c) {
    Coeffs r{Real(0)};
    r.insert(r.end(), c.begin(), c.end());
    return r;
}

inline Real horner(const Coeffs& c, const Real& x) {
    Real r(0);
    for (size_t i = c.size(); i-- > 0;) r = r * x + c[i];
    return r;
}

// synthetic division by (x - r); returns quotient, remainder in `rem`
inline Coeffs deflate(const Coeffs& c, const Real& r, Real& rem) {
    const size_t d = c.size() - 1;
    Coeffs q(d, Real(0));
    Real acc(0);
    for (size_t i = d + 1; i-- > 0;) {
        acc = acc * r + c[i];
        if (i > 0) q[i - 1] = acc;
    }
    rem = acc;
    return q;
}

inline Real max_coeff(const Coeffs& c) {
    Real m(0);
    for (auto& x : c) m = max(m, abs(x));
    return m;
}

inline Real rel(const Real& a, const Real& b) { return abs(a - b) / max(abs(b), Real(1e-300)); }

inline TargetSpectrum spec(std::vector<double> l, std::vector<size_t> t) {
    TargetSpectrum s;
    for (double x : l) s.lambdas.emplace_back(x);
    s.mults = std::move(t);
    return s;
}

inline ChainSystem chain(std::vector<double> m, std::vector<double> k, std::vector<double> b) {
    ChainSystem c;
    for (double x : m) c.m.emplace_back(x);
    for (double x : k) c.k.emplace_back(x);
    for (double x : b) c.b.emplace_back(x);
    return c;
}

// dyadic rationals p/2^q with small numerators, so double inputs are exact
inline ChainSystem dyadic_chain(std::mt19937_64& rng, size_t n, bool allow_zero_b = true) {
    std::uniform_int_distribution<int> num(1, 64), den(0, 4);
    std::bernoulli_distribution zero(0.4);
    ChainSystem c;
    for (size_t j = 0; j < n; ++j) {
        c.m.emplace_back(std::ldexp(num(rng), -den(rng)));
        c.k.emplace_back(std::ldexp(num(rng), -den(rng)));
        c.b.emplace_back(allow_zero_b && zero(rng) ? 0.0 : std::ldexp(num(rng), -den(rng)));
    }
    return c;
}

inline TargetSpectrum random_feasible_spec(std::mt19937_64& rng, size_t n) {
    // random composition of n with t_i <= i, built by rejection
    std::uniform_real_distribution<double> u(std::log(0.1), std::log(10.0));
    while (true) {
        std::vector<size_t> t;
        size_t left = n;
        while (left > 0) {
            size_t cap = std::min(left, t.size() + 1);
            size_t v = std::uniform_int_distribution<size_t>(1, cap)(rng);
            t.push_back(v);
            left -= v;
        }
        std::vector<double> l;
        for (size_t i = 0; i < t.size(); ++i) l.push_back(std::exp(u(rng)));
        std::sort(l.begin(), l.end());
        bool distinct = true;
        for (size_t i = 1; i < l.size(); ++i)
            if (!(l[i] > l[i - 1] * (1 + 1e-6))) distinct = false;
        if (distinct) return spec(l, t);
    }
}

}  // namespace iep::testing
