#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>

namespace moran {

using Int = mpz_class;
using Rat = mpq_class;

inline Int to_int(std::int64_t v) {
    Int r;
    if (v >= 0) {
        mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    } else {
        std::uint64_t m = static_cast<std::uint64_t>(-(v + 1)) + 1;
        mpz_import(r.get_mpz_t(), 1, 1, sizeof(m), 0, 0, &m);
        r = -r;
    }
    return r;
}

inline Int to_int_u(std::uint64_t v) {
    Int r;
    mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return r;
}

// Requires 0 <= v < 2^64.
inline std::uint64_t to_u64(const Int& v) {
    std::uint64_t out = 0;
    size_t count = 0;
    mpz_export(&out, &count, 1, sizeof(out), 0, 0, v.get_mpz_t());
    return count ? out : 0;
}

inline bool fits_u64(const Int& v) { return sgn(v) >= 0 && mpz_sizeinbase(v.get_mpz_t(), 2) <= 64; }

// Least non-negative residue.
inline Int mod_nonneg(const Int& a, const Int& m) {
    Int r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

inline Int pow_int(const Int& base, unsigned long e) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

inline Int powm(const Int& base, const Int& e, const Int& m) {
    Int r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
    return r;
}

// Natural log of a positive integer, relative error near 1e-16.
inline double log_int(const Int& v) {
    long exp = 0;
    double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

inline double log_rat(const Rat& v) { return log_int(v.get_num()) - log_int(v.get_den()); }

inline std::string dec(const Int& v) { return v.get_str(10); }

// Largest t with b^t <= v, for v >= 1.
inline unsigned long floor_log(const Int& v, unsigned long b) {
    if (v < 1) return 0;
    unsigned long t = static_cast<unsigned long>(log_int(v) / std::log(static_cast<double>(b)));
    Int bb = b;
    while (t > 0 && pow_int(bb, t) > v) --t;
    while (pow_int(bb, t + 1) <= v) ++t;
    return t;
}

}  // namespace moran
