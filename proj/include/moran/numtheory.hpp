#pragma once

#include "moran/bigint.hpp"
#include "moran/radix.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace moran {

struct Factorization {
    std::vector<std::pair<std::uint64_t, unsigned>> factors;  // primes strictly increasing

    Int value() const;
    bool empty() const { return factors.empty(); }
    std::uint64_t largest_prime() const { return factors.empty() ? 1 : factors.back().first; }
    unsigned exponent_of(std::uint64_t p) const;
};

// Trial division; intended for b, h and small moduli.
Factorization factorize(std::uint64_t n);

std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b);
Int euler_phi(const Factorization& f);

std::uint64_t multiplicative_order(std::uint64_t a, std::uint64_t n);
Int prime_power_order(std::uint64_t a, std::uint64_t p, unsigned j);
Int order_by_crt(std::uint64_t a, const Factorization& f);

// Largest k with p^k | a^{ord_p a} - 1, for any odd prime p not dividing a.
unsigned lifting_exponent(std::uint64_t a, std::uint64_t p);
unsigned k_of(std::uint64_t b, std::uint64_t q);

struct Weights {
    Rat C{1, 2};
    Rat D{1, 2};
};

struct BaseContext {
    std::uint64_t b = 2;
    std::int64_t h = 1;
    PrimeSchedule schedule;
    std::size_t r0_prime = 1;
    std::uint64_t n0 = 1;
    Int Q = 1;
    std::vector<std::int64_t> k;  // k[r-1] = k_r
    std::vector<std::int64_t> j;  // j[r-1] = j_r
    std::size_t r0_second = 1;
    std::size_t r0 = 1;
    Weights weights;
    double gamma = 0;
    double alpha = 0;
    double C1 = 0;
    Rat C_tilde;  // rational upper approximation of 2*C1
    double A = 0;
    double B = 0;
    std::uint64_t R = 0;
    std::uint64_t r1 = 0;

    std::size_t count() const { return schedule.count(); }
    bool has_free_block() const { return r0 < count(); }

    // Exponent of q_r in Q (0 for r > r0').
    unsigned q_valuation(std::size_t r) const;

    // Factorization of (M_1...M_n)/Q for a digit-prefix length n.
    Factorization prefix_modulus(std::uint64_t n) const;

    // ord of b modulo (M_1...M_n)/Q.
    Int prefix_order(std::uint64_t n) const;

    // q_{c+1}^{j_{c+1}} ... q_d^{j_d}.
    Int free_volume(std::size_t c, std::size_t d) const;
    std::int64_t free_digits(std::size_t c, std::size_t d) const;
};

BaseContext build_context(std::uint64_t b, std::int64_t h, const PrimeSchedule& s, Weights w = {});

struct OrdRatio {
    Int lhs;
    Int rhs;
    Int J;
    bool J_integral = false;
};

// Both sides of ord_{N_{s+1}/Q}(b) = q_{s+1}^{j_{s+1}} ord_{N_s q_{s+1}^{k_{s+1}}/Q}(b)
// and the quotient J at r = s + 1.
OrdRatio ord_ratio_check(const BaseContext& ctx, std::size_t s_index);

double alpha_constant();
double stirling_C1();
Rat c_tilde_rational();
std::uint64_t smallest_R();

}  // namespace moran
