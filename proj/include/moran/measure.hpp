#pragma once

#include "moran/bigint.hpp"
#include "moran/fourier.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace moran {

// splitmix64 keyed by (seed, counter): state seed + (counter + 1) * golden, then the finalizer.
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter);

struct SamplePoint {
    std::vector<std::uint32_t> digits;
    Rat value;
    std::size_t depth = 0;
    std::uint64_t seed = 0;
};

// Draws digit n from level n with u64 thresholds ceil(cumulative weight * 2^64).
class DigitSampler {
public:
    explicit DigitSampler(const MoranSystem& sys);

    SamplePoint sample(std::uint64_t seed, std::size_t depth) const;
    const MoranSystem& system() const { return *sys_; }

private:
    const MoranSystem* sys_;
    std::vector<std::vector<unsigned __int128>> thresholds_;
};

SamplePoint sample_point(const MoranSystem& sys, std::uint64_t seed, std::size_t depth);

// Point i uses seed ^ i.
std::vector<SamplePoint> sample_batch(const MoranSystem& sys, std::uint64_t seed, std::size_t count,
                                      std::size_t depth, unsigned workers = 1);

inline constexpr unsigned kDefaultGuard = 8;

struct BaseDigits {
    std::vector<std::uint8_t> digits;  // digit k = floor(b^{k+1} x) mod b, k < count
    std::size_t trusted_count = 0;
};

// scale defaults to the reduced denominator of x; trusted_count = min(count, floor(log_b scale) - guard).
BaseDigits base_digits(const Rat& x, unsigned b, std::size_t count, unsigned guard = kDefaultGuard,
                       std::optional<Int> scale = std::nullopt);

struct NormalityReport {
    unsigned base = 2;
    std::size_t trusted_digit_count = 0;
    std::vector<std::uint64_t> counts;
    std::vector<Rat> frequencies;
    double max_deviation = 0;
    double discrepancy = 0;  // max over a = 1..64 of |#{k : {b^k x} < a/64}/T - a/64|
    bool periodic = true;    // rational input
    std::uint64_t period = 0;  // 0 when not computed
};

NormalityReport normality_report(const Rat& x, unsigned b, unsigned guard = kDefaultGuard,
                                 std::optional<Int> scale = std::nullopt);
std::vector<NormalityReport> normality_report(const Rat& x, const std::vector<unsigned>& bases,
                                              unsigned guard = kDefaultGuard,
                                              std::optional<Int> scale = std::nullopt);

enum class UniquenessMode { Auto, StepI, StepIII };

struct UniquenessVerdict {
    UniquenessMode mode = UniquenessMode::StepI;
    Rat interval_lo;  // the open interval is (interval_lo, 1)
    std::vector<std::size_t> multipliers;  // t with k_j = M_1...M_t
    std::size_t checked = 0;
    bool pass = true;
    std::optional<std::size_t> first_violation_j;
};

const char* mode_name(UniquenessMode m);

// Checks {k_j x} outside the interval for every k_j = M_1...M_t with t <= j_max.
UniquenessVerdict uniqueness_avoidance(const Rat& x, const MoranSystem& sys, std::size_t j_max,
                                       UniquenessMode mode = UniquenessMode::Auto);

void write_normality_csv(std::ostream& os, const std::vector<std::uint64_t>& seeds, std::size_t depth,
                         const std::vector<std::vector<NormalityReport>>& reports);
void write_uniqueness_csv(std::ostream& os, const std::vector<std::uint64_t>& seeds, std::size_t j_max,
                          const std::vector<UniquenessVerdict>& verdicts);

}  // namespace moran
