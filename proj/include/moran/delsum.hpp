#pragma once

#include "moran/bigint.hpp"
#include "moran/fourier.hpp"
#include "moran/numtheory.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace moran {

// h (b^n - b^m), exactly.
Int frequency(std::int64_t h, std::uint64_t b, std::uint64_t n, std::uint64_t m);

struct DelBlock {
    std::size_t r = 0;   // N in (N_{r-1}, N_r]
    double sum = 0;
};

struct DelReport {
    std::uint64_t N_max = 0;
    double partial_sum = 0;
    double radius = 0;
    std::vector<double> increments;  // increments[N-1] = Delta_N
    std::vector<double> cumulative;
    std::vector<double> radii;       // certified radius of cumulative[N-1]
    double diagonal = 0;             // sum of 1/N^2
    double upper = 0;                // sum over m < n < N of |mu^|/N^3
    double full_direct = 0;          // ordered triple loop over all (m, n)
    double decomposition_gap = 0;    // |full_direct - (diagonal + 2 upper)|
    std::vector<DelBlock> blocks;
    std::size_t distinct_frequencies = 0;
};

// Sum over N <= N_max of N^-3 sum_{m,n < N} |mu^(h(b^n - b^m))|, with a certified radius <= eps.
DelReport del_partial(const MoranSystem& sys, std::uint64_t b, std::int64_t h, std::uint64_t N_max, double eps,
                      unsigned workers = 1);

struct BlockRow {
    std::size_t r = 0;
    std::uint64_t N_r = 0;
    std::uint64_t m = 0;
    std::uint64_t terms = 0;
    double block_sum = 0;       // upper end of the certified interval
    double paper_bound = 0;     // 2 A N_r exp(-B (j_{r0+1} + ... + j_r))
    bool asymptotic_regime_only = true;
};

inline constexpr std::uint64_t kBlockGuard = 10'000'000;

// Rows for every r in [r_lo, r_hi] and every m in m_grid.
std::vector<BlockRow> block_trend(const MoranSystem& sys, std::uint64_t b, std::int64_t h, std::size_t r_lo,
                                  std::size_t r_hi, const std::vector<std::uint64_t>& m_grid, double eps = 1e-9,
                                  unsigned workers = 1);

void write_del_csv(std::ostream& os, const DelReport& rep);
void write_blocks_csv(std::ostream& os, const std::vector<BlockRow>& rows);

}  // namespace moran
