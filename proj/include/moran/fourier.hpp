#pragma once

#include "moran/bigint.hpp"
#include "moran/numtheory.hpp"
#include "moran/radix.hpp"

#include <iosfwd>
#include <vector>

namespace moran {

// One level of a Moran system: digits (sorted, distinct) with probability weights.
struct Level {
    enum class Shape { Explicit, Uniform, HalfEndpoints };

    std::uint64_t base = 0;
    std::vector<std::uint32_t> digits;
    Shape shape = Shape::Uniform;
    std::vector<Rat> explicit_weights;

    std::size_t size() const { return digits.size(); }
    Rat weight(std::size_t idx) const;
    long double weight_ld(std::size_t idx) const;
    bool contains(std::uint32_t d) const;
    // Index of d in digits, or npos.
    std::size_t index_of(std::uint32_t d) const;
    // Variance of the digit distribution.
    double variance() const;
    // True when digits are exactly {0, 1, ..., c}.
    bool is_prefix() const { return !digits.empty() && digits.back() + 1 == digits.size(); }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

class MoranSystem {
public:
    MoranSystem() = default;

    // Digits {0,1} with weight omega on 0 and 1 - omega on 1 at every level.
    static MoranSystem binary(const PrimeSchedule& s, const Rat& omega);
    static MoranSystem binary(const PrimeSchedule& s, const std::vector<Rat>& omega_per_level);
    static MoranSystem from_levels(const PrimeSchedule& s, std::vector<Level> levels);

    const PrimeSchedule& schedule() const { return schedule_; }
    const std::vector<std::uint64_t>& bases() const { return bases_; }
    // prefix()[n] = M_1...M_n.
    const std::vector<Int>& prefix() const { return prefix_; }
    std::size_t levels() const { return levels_.size(); }
    // 1-based level access.
    const Level& level(std::size_t n) const { return levels_.at(n - 1); }

    bool is_binary() const { return binary_; }
    const Rat& inf_omega() const { return inf_omega_; }
    const Rat& sup_omega() const { return sup_omega_; }
    double max_variance() const { return max_variance_; }
    // sup_n max D_n / M_n.
    Rat max_digit_ratio() const;

private:
    PrimeSchedule schedule_;
    std::vector<std::uint64_t> bases_;
    std::vector<Int> prefix_;
    std::vector<Level> levels_;
    bool binary_ = false;
    Rat inf_omega_{0}, sup_omega_{0};
    double max_variance_ = 0;

    void finish();
};

struct MaskValue {
    long double value = 0;
    long double radius = 0;
};

// |sum_d w_d e^{-2 pi i d t}| at 1-based level n; t is reduced mod 1 exactly first.
MaskValue mask_modulus(std::size_t level_n, const Rat& t, const MoranSystem& sys);

struct CertifiedModulus {
    double lo = 1;
    double hi = 1;
    std::size_t truncation_level = 0;
    double tail_bound_log = 0;

    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

CertifiedModulus mu_hat_modulus(const Int& xi, const MoranSystem& sys, double eps);

std::vector<CertifiedModulus> mu_hat_batch(const std::vector<Int>& xis, const MoranSystem& sys, double eps,
                                           unsigned workers = 1);

struct DecayBound {
    std::size_t w = 0;
    double bound = 1;
    double gamma = 1;
    bool emitted = true;
};

// Middle-third window [floor(q/3), 2 floor(q/3)] for base q.
inline std::uint32_t window_lo(std::uint64_t q) { return static_cast<std::uint32_t>(q / 3); }
inline std::uint32_t window_hi(std::uint64_t q) { return static_cast<std::uint32_t>(2 * (q / 3)); }

// Number of schedule digit positions of |xi| inside the middle-third window.
std::size_t middle_third_count(const Int& xi, const MoranSystem& sys);

DecayBound digit_decay_bound(const Int& xi, const MoranSystem& sys, const BaseContext& ctx);

// sup of |M_n| over a 1024-point grid of [1/6, 5/6], maximised over levels.
double sharper_grid_sup(const MoranSystem& sys);

void write_fourier_csv(std::ostream& os, const std::vector<Int>& xis, const std::vector<CertifiedModulus>& mods,
                       const std::vector<DecayBound>& decay);

// Rigorous-enough long double value of a/b for 0 <= a < b: absolute error below 4 ulp.
long double ratio_ld(const Int& a, const Int& b);

}  // namespace moran
