#pragma once

#include <mpfr.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace iep {

namespace detail {
inline mpfr_prec_t& working_prec_ref() {
    thread_local mpfr_prec_t prec = 128;
    return prec;
}
}  // namespace detail

//! Precision (in mantissa bits) given to every freshly computed Real on this thread.
inline long working_precision() { return static_cast<long>(detail::working_prec_ref()); }

//! Sets the working precision for the lifetime of the guard.
class PrecisionScope {
public:
    explicit PrecisionScope(long bits) : saved_(detail::working_prec_ref()) {
        if (bits < MPFR_PREC_MIN || bits > MPFR_PREC_MAX) throw std::invalid_argument("precision out of range");
        detail::working_prec_ref() = static_cast<mpfr_prec_t>(bits);
    }
    ~PrecisionScope() { detail::working_prec_ref() = saved_; }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    mpfr_prec_t saved_;
};

// Copies keep the source precision; arithmetic results get the working precision.
class Real {
public:
    Real() { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set_zero(v_, 1); }
    Real(int x) { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set_si(v_, x, MPFR_RNDN); }
    Real(long x) { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set_si(v_, x, MPFR_RNDN); }
    Real(unsigned long x) { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set_ui(v_, x, MPFR_RNDN); }
    Real(double x) { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set_d(v_, x, MPFR_RNDN); }
    explicit Real(mpfr_srcptr x) { mpfr_init2(v_, detail::working_prec_ref()); mpfr_set(v_, x, MPFR_RNDN); }

    Real(const Real& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Real(Real&& o) noexcept {
        std::memcpy(v_, o.v_, sizeof(mpfr_t));
        o.v_->_mpfr_d = nullptr;
    }
    Real& operator=(const Real& o) {
        if (this == &o) return *this;
        if (!v_->_mpfr_d) mpfr_init2(v_, mpfr_get_prec(o.v_));
        else mpfr_set_prec(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        if (this != &o) std::swap(*v_, *o.v_);
        return *this;
    }
    ~Real() {
        if (v_->_mpfr_d) mpfr_clear(v_);
    }

    //! Parses a decimal string at the working precision; throws on junk.
    static Real parse(std::string_view s) {
        Real r;
        std::string buf(s);
        char* end = nullptr;
        if (!buf.empty()) mpfr_strtofr(r.v_, buf.c_str(), &end, 10, MPFR_RNDN);
        if (buf.empty() || end != buf.c_str() + buf.size() || !r.is_finite())
            throw std::invalid_argument("not a decimal number: '" + buf + "'");
        return r;
    }

    //! Same value rounded to the working precision.
    Real rounded() const { return Real(v_); }

    mpfr_srcptr get() const { return v_; }
    mpfr_ptr get() { return v_; }
    long precision() const { return static_cast<long>(mpfr_get_prec(v_)); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    int sign() const { return mpfr_sgn(v_); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    //! floor(log2|x|) for non-zero finite x.
    long exponent2() const { return static_cast<long>(mpfr_get_exp(v_)) - 1; }

    //! Exact decimal value in scientific form; reads back bit-exactly at any precision that holds its digits.
    std::string to_string() const {
        if (mpfr_nan_p(v_)) return "nan";
        if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
        if (mpfr_zero_p(v_)) return "0";
        // v = z * 2^e exactly; with e < 0 this is z * 5^-e * 10^e
        mpz_t z;
        mpz_init(z);
        long e = static_cast<long>(mpfr_get_z_2exp(z, v_));
        unsigned long tz = mpz_scan1(z, 0);
        mpz_fdiv_q_2exp(z, z, tz);
        e += static_cast<long>(tz);
        long ten = 0;
        if (e >= 0) {
            mpz_mul_2exp(z, z, static_cast<unsigned long>(e));
        } else {
            mpz_t f;
            mpz_init(f);
            mpz_ui_pow_ui(f, 5, static_cast<unsigned long>(-e));
            mpz_mul(z, z, f);
            mpz_clear(f);
            ten = e;
        }
        char* raw = mpz_get_str(nullptr, 10, z);
        std::string m(raw);
        void (*freefunc)(void*, size_t);
        mp_get_memory_functions(nullptr, nullptr, &freefunc);
        freefunc(raw, std::strlen(raw) + 1);
        mpz_clear(z);
        std::string out;
        if (m[0] == '-') { out = "-"; m.erase(0, 1); }
        long ex = ten + static_cast<long>(m.size()) - 1;
        while (m.size() > 1 && m.back() == '0') m.pop_back();
        out += m[0];
        if (m.size() > 1) { out += '.'; out.append(m, 1); }
        if (ex != 0) out += "e" + std::to_string(ex);
        return out;
    }

    Real operator-() const { Real r; mpfr_neg(r.v_, v_, MPFR_RNDN); return r; }

    Real& operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }

    friend Real operator+(const Real& a, const Real& b) { Real r; mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator-(const Real& a, const Real& b) { Real r; mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator*(const Real& a, const Real& b) { Real r; mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
    friend Real operator/(const Real& a, const Real& b) { Real r; mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }

    friend int compare(const Real& a, const Real& b) { return mpfr_cmp(a.v_, b.v_); }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }

    friend std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.to_string(); }

private:
    mpfr_t v_;
};

inline Real abs(const Real& x) { Real r; mpfr_abs(r.get(), x.get(), MPFR_RNDN); return r; }
inline Real sqrt(const Real& x) { Real r; mpfr_sqrt(r.get(), x.get(), MPFR_RNDN); return r; }
inline Real cbrt(const Real& x) { Real r; mpfr_cbrt(r.get(), x.get(), MPFR_RNDN); return r; }
inline Real log2(const Real& x) { Real r; mpfr_log2(r.get(), x.get(), MPFR_RNDN); return r; }
inline Real exp2(const Real& x) { Real r; mpfr_exp2(r.get(), x.get(), MPFR_RNDN); return r; }
inline Real pow(const Real& x, long e) { Real r; mpfr_pow_si(r.get(), x.get(), e, MPFR_RNDN); return r; }
inline Real pow(const Real& x, const Real& e) { Real r; mpfr_pow(r.get(), x.get(), e.get(), MPFR_RNDN); return r; }
inline Real ldexp(const Real& x, long e) { Real r; mpfr_mul_2si(r.get(), x.get(), e, MPFR_RNDN); return r; }
inline Real pow2(long e) { Real r(1); mpfr_mul_2si(r.get(), r.get(), e, MPFR_RNDN); return r; }
inline const Real& min(const Real& a, const Real& b) { return b < a ? b : a; }
inline const Real& max(const Real& a, const Real& b) { return a < b ? b : a; }
inline int sgn(const Real& x) { return x.sign(); }

}  // namespace iep
