#pragma once

#include "moran/bigint.hpp"
#include "moran/fourier.hpp"
#include "moran/numtheory.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace moran {

inline constexpr std::uint64_t kEnumerationGuard = 10'000'000;

// 0-based digit positions L_s + k_{s+1}, ..., L_{s+1} - 1 for c <= s < d.
std::vector<std::uint64_t> pi_positions(const BaseContext& ctx, std::size_t c, std::size_t d);

// h b^n - h b^m reduced mod M_1...M_N (non-negative), by modular exponentiation.
Int difference_residue(const BaseContext& ctx, std::uint64_t n, std::uint64_t m, const Int& modulus);

// First N_digits mixed-radix digits of h b^n - h b^m. Intervals are discrete and closed throughout.
std::vector<std::uint32_t> phi_map(std::uint64_t n, std::uint64_t m, std::size_t N_digits, const MoranSystem& sys,
                                   const BaseContext& ctx);

// Digits of phi at the free positions of blocks c < s + 1 <= d.
std::vector<std::uint32_t> pi_map(std::uint64_t n, std::uint64_t m, std::size_t c, std::size_t d,
                                  const MoranSystem& sys, const BaseContext& ctx);

struct PartitionCertificate {
    std::uint64_t I_start = 0;
    std::uint64_t length = 0;
    std::uint64_t m = 0;
    std::size_t r = 0;
    std::uint64_t J = 0;
    std::uint64_t class_size = 0;
    std::vector<std::uint64_t> class_sizes;
    std::vector<std::vector<std::uint64_t>> classes;  // kept when length <= 2e6
    bool ok = false;
};

// m defaults to n0 - 1.
PartitionCertificate verify_partition(std::uint64_t I_start, const BaseContext& ctx, const MoranSystem& sys,
                                      std::size_t r, std::optional<std::uint64_t> m = std::nullopt,
                                      unsigned workers = 1);

struct FiberTable {
    std::size_t s = 0;
    std::uint64_t I_start = 0;
    std::uint64_t length = 0;
    std::uint64_t q_pow_j = 0;                 // q_{s+1}^{j_{s+1}}
    std::vector<std::uint64_t> fiber_x;        // #(Pi_{r0,s}^{-1}{x} cap I), indexed by x
    std::vector<std::uint64_t> fiber_xy;       // #(Pi_{r0,s+1}^{-1}{(x,y)} cap I)
    std::vector<std::uint64_t> image_size;     // j = 0..ell_{s+1}
    std::vector<std::uint64_t> expected_image; // ord_{N_s q^j / Q}(b)
    std::vector<bool> injective;               // on the first window of that length
    bool ok = false;
};

FiberTable fiber_counts(std::uint64_t I_start, std::uint64_t length, const BaseContext& ctx, const MoranSystem& sys,
                        std::size_t s, std::optional<std::uint64_t> m = std::nullopt);

// #B_k for k = 0..u over a well-distributed set for Pi_{r0,r}.
std::vector<std::uint64_t> classify_Bk(const std::vector<std::uint64_t>& Lambda, const BaseContext& ctx,
                                       const MoranSystem& sys, std::size_t r,
                                       std::optional<std::uint64_t> m = std::nullopt);

// binom(u,k) * volume * (1/2)^k * (2/3)^(u-k).
Rat C_bound_raw(std::uint64_t k, std::uint64_t u, const Int& volume);
Rat C_bound(std::uint64_t k, std::uint64_t u, const BaseContext& ctx, const MoranSystem& sys, std::size_t r);

// C(k) < C(k+1) iff 7k < 3u - 4, for every 0 <= k < u.
bool crossover_matches(std::uint64_t u);

struct LargeUCheck {
    std::uint64_t u = 6000;
    Rat lhs;  // C(floor(u/6)) / volume
    Rat rhs;  // C_tilde * u * alpha^u
    double log10_lhs = 0;
    double log10_rhs = 0;
    bool holds = false;
};

// Exact check at u = 6000, where alpha^u is rational.
LargeUCheck check_large_u(const Rat& C_tilde);

void write_histogram_csv(std::ostream& os, const std::vector<std::uint64_t>& hist, const BaseContext& ctx,
                         std::size_t r);

}  // namespace moran
