#pragma once

// Slow, obviously-correct reference implementations.

#include "moran/bigint.hpp"

#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

inline moran::Rat ratio(const moran::Int& a, const moran::Int& b) {
    moran::Rat r(a, b);
    r.canonicalize();
    return r;
}

inline std::uint64_t order(std::uint64_t a, std::uint64_t n) {
    std::uint64_t x = a % n, m = 1;
    while (x != 1 % n) {
        x = x * a % n;
        ++m;
        if (m > n) return 0;
    }
    return m;
}

inline std::uint64_t phi(std::uint64_t n) {
    std::uint64_t c = 0;
    for (std::uint64_t k = 1; k <= n; ++k)
        if (std::gcd(k, n) == 1) ++c;
    return c;
}

inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Greedy div/mod, least significant first.
inline std::vector<std::uint32_t> digits(moran::Int v, const std::vector<std::uint64_t>& bases, std::size_t len) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < len; ++i) {
        moran::Int q = v / moran::Int(static_cast<unsigned long>(bases[i]));
        moran::Int r = v - q * moran::Int(static_cast<unsigned long>(bases[i]));
        out.push_back(static_cast<std::uint32_t>(r.get_ui()));
        v = q;
    }
    return out;
}

// sum over every digit string of prod w * exp(-2 pi i xi x), for levels with digits {0,1}.
inline double binary_transform(const moran::Int& xi, const std::vector<std::uint64_t>& bases, double omega) {
    const std::size_t L = bases.size();
    std::complex<long double> acc = 0;
    const long double two_pi = 6.283185307179586476925286766559L;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << L); ++mask) {
        moran::Int P = 1;
        moran::Rat x = 0;
        long double w = 1;
        for (std::size_t n = 0; n < L; ++n) {
            P *= static_cast<unsigned long>(bases[n]);
            int d = (mask >> n) & 1;
            w *= d ? 1 - omega : omega;
            if (d) x += moran::Rat(1) / moran::Rat(P);
        }
        moran::Rat t = moran::Rat(xi) * x;
        moran::Int fl;
        mpz_fdiv_q(fl.get_mpz_t(), t.get_num_mpz_t(), t.get_den_mpz_t());
        moran::Rat f = t - moran::Rat(fl);
        long double th = two_pi * static_cast<long double>(f.get_d());
        acc += w * std::complex<long double>(std::cos(th), -std::sin(th));
    }
    return static_cast<double>(std::abs(acc));
}

}  // namespace oracle
