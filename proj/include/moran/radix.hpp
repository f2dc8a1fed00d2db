#pragma once

#include "moran/bigint.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moran {

bool is_prime_u64(std::uint64_t n);
std::uint64_t next_prime_at_least(std::uint64_t n);

enum class ScheduleVariant { NthPrimeFrom7, CubeWindow };

std::string variant_name(ScheduleVariant v);
ScheduleVariant parse_variant(const std::string& s);

// q_r, ell_r are stored 0-based: q[0] = q_1.
struct PrimeSchedule {
    unsigned d = 1;
    ScheduleVariant variant = ScheduleVariant::NthPrimeFrom7;
    std::uint64_t offset = 0;
    std::vector<std::uint64_t> q;
    std::vector<std::uint64_t> ell;
    std::vector<std::uint64_t> L;  // L[s] = ell_1 + ... + ell_s, L[0] = 0
    std::vector<Int> N;            // N[r] = q_1^ell_1 ... q_r^ell_r, N[0] = 1

    // Validates the primes and multiplicities and fills L, N.
    static PrimeSchedule make(unsigned d, ScheduleVariant v, std::uint64_t offset,
                              std::vector<std::uint64_t> q, std::vector<std::uint64_t> ell);

    std::size_t count() const { return q.size(); }
    std::uint64_t levels() const { return L.back(); }
    bool deviates_from_paper_constant() const { return variant == ScheduleVariant::CubeWindow; }

    // (s, j) with n = L_s + j + 1; n is 1-based.
    std::pair<std::size_t, std::uint64_t> block_of(std::uint64_t n) const;
};

std::vector<std::uint64_t> default_ell(unsigned d, std::size_t count);

PrimeSchedule build_schedule(unsigned d, std::size_t count, ScheduleVariant variant,
                             std::uint64_t offset = 0,
                             std::optional<std::vector<std::uint64_t>> ell = std::nullopt);

PrimeSchedule schedule_from_primes(const std::vector<std::uint64_t>& q,
                                   const std::vector<std::uint64_t>& ell, unsigned d = 1);

// M_n for 1-based n.
std::uint64_t base_at(const PrimeSchedule& s, std::uint64_t n);

// Flat list M_1..M_levels.
std::vector<std::uint64_t> bases_of(const PrimeSchedule& s);

// Digit index i uses base bases[i] (= M_{i+1}).
struct MixedRadixDigits {
    std::vector<std::uint32_t> digits;
    std::vector<std::uint64_t> bases;

    Int value() const;
};

// Digits of N; length is `length` if given (padding with zeros), otherwise trimmed.
MixedRadixDigits to_digits(const Int& N, const std::vector<std::uint64_t>& bases,
                           std::optional<std::size_t> length = std::nullopt);
MixedRadixDigits to_digits(const Int& N, const PrimeSchedule& s,
                           std::optional<std::size_t> length = std::nullopt);

Int from_digits(const std::vector<std::uint32_t>& digits, const std::vector<std::uint64_t>& bases);

// a == b mod M_1...M_n.
bool digits_congruent(const Int& a, const Int& b, std::size_t n, const std::vector<std::uint64_t>& bases);
bool digits_congruent(const Int& a, const Int& b, std::size_t n, const PrimeSchedule& s);

// Prefix products P[n] = M_1...M_n, P[0] = 1.
std::vector<Int> prefix_products(const std::vector<std::uint64_t>& bases);

// Smallest C with q_n <= C n^2 over the schedule.
double quadratic_growth_constant(const PrimeSchedule& s);

}  // namespace moran
