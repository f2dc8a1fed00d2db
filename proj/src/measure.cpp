#include "moran/measure.hpp"

#include "moran/errors.hpp"
#include "moran/kernels.hpp"
#include "moran/numtheory.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

namespace moran {

namespace {

using u128 = unsigned __int128;

// Splits [0, count) over workers; fn(i) must only touch slot i.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, count))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

DigitSampler::DigitSampler(const MoranSystem& sys) : sys_(&sys) {
    const Int two64 = pow_int(Int(2), 64);
    thresholds_.reserve(sys.levels());
    for (std::size_t n = 1; n <= sys.levels(); ++n) {
        const Level& lv = sys.level(n);
        std::vector<u128> t;
        Rat cum = 0;
        for (std::size_t k = 0; k + 1 < lv.size(); ++k) {
            cum += lv.weight(k);
            Rat scaled = cum * Rat(two64);
            Int c;
            mpz_cdiv_q(c.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
            t.push_back(c >= two64 ? (u128(1) << 64) : u128(to_u64(c)));
        }
        thresholds_.push_back(std::move(t));
    }
}

SamplePoint DigitSampler::sample(std::uint64_t seed, std::size_t depth) const {
    if (depth > sys_->levels()) fail(Errc::ScheduleTooShort, "depth exceeds schedule levels");
    SamplePoint p;
    p.seed = seed;
    p.depth = depth;
    p.digits.reserve(depth);
    Int num = 0;
    for (std::size_t n = 0; n < depth; ++n) {
        const u128 u = splitmix64(seed, n);
        const auto& t = thresholds_[n];
        std::size_t k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), u) - t.begin());
        const std::uint32_t d = sys_->level(n + 1).digits[k];
        p.digits.push_back(d);
        num = num * static_cast<unsigned long>(sys_->bases()[n]) + d;
    }
    p.value = Rat(num, sys_->prefix()[depth]);
    p.value.canonicalize();
    return p;
}

SamplePoint sample_point(const MoranSystem& sys, std::uint64_t seed, std::size_t depth) {
    return DigitSampler(sys).sample(seed, depth);
}

std::vector<SamplePoint> sample_batch(const MoranSystem& sys, std::uint64_t seed, std::size_t count,
                                      std::size_t depth, unsigned workers) {
    if (depth > sys.levels()) fail(Errc::ScheduleTooShort, "depth exceeds schedule levels");
    DigitSampler s(sys);
    std::vector<SamplePoint> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = s.sample(seed ^ i, depth); });
    return out;
}

BaseDigits base_digits(const Rat& x, unsigned b, std::size_t count, unsigned guard, std::optional<Int> scale) {
    if (b < 2 || b > 36) fail(Errc::InvalidParameter, "base must lie in [2, 36]");
    if (x < 0 || x >= 1) fail(Errc::InvalidParameter, "need 0 <= x < 1");
    BaseDigits out;
    const Int s = scale.value_or(x.get_den());
    const long fl = s >= 1 ? static_cast<long>(floor_log(s, b)) : 0;
    out.trusted_count = static_cast<std::size_t>(std::max(0L, std::min<long>(static_cast<long>(count), fl - static_cast<long>(guard))));
    out.digits.assign(count, 0);
    if (count == 0 || sgn(x.get_num()) == 0) return out;
    Int q = x.get_num() * pow_int(Int(b), count);
    mpz_fdiv_q(q.get_mpz_t(), q.get_mpz_t(), x.get_den_mpz_t());
    const std::string str = q.get_str(static_cast<int>(b));
    const std::size_t pad = count - str.size();
    for (std::size_t i = 0; i < str.size(); ++i) {
        char c = str[i];
        out.digits[pad + i] = static_cast<std::uint8_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return out;
}

NormalityReport normality_report(const Rat& x, unsigned b, unsigned guard, std::optional<Int> scale) {
    NormalityReport rep;
    rep.base = b;
    const Int s = scale.value_or(x.get_den());
    const std::size_t want = s >= 1 ? floor_log(s, b) : 0;
    BaseDigits bd = base_digits(x, b, want, guard, s);
    const std::size_t T = bd.trusted_count;
    rep.trusted_digit_count = T;
    rep.counts.assign(b, 0);
    kernels::histogram_u8(bd.digits.data(), T, b, rep.counts.data());
    rep.frequencies.assign(b, Rat(0));
    const double inv_b = 1.0 / b;
    for (unsigned d = 0; d < b; ++d) {
        if (T) {
            rep.frequencies[d] = Rat(to_int_u(rep.counts[d]), to_int_u(T));
            rep.frequencies[d].canonicalize();
        }
        rep.max_deviation = std::max(rep.max_deviation, std::fabs(rep.frequencies[d].get_d() - inv_b));
    }

    // Orbit {b^k x} binned into 64 cells by exact remainders.
    std::vector<std::uint8_t> bins(T);
    const Int& den = x.get_den();
    Int rem = x.get_num(), cell;
    for (std::size_t k = 0; k < T; ++k) {
        cell = rem * 64;
        mpz_fdiv_q(cell.get_mpz_t(), cell.get_mpz_t(), den.get_mpz_t());
        bins[k] = static_cast<std::uint8_t>(cell.get_ui());
        rem *= b;
        mpz_fdiv_r(rem.get_mpz_t(), rem.get_mpz_t(), den.get_mpz_t());
    }
    std::vector<std::uint64_t> h(64, 0);
    kernels::histogram_u8(bins.data(), T, 64, h.data());
    if (T) {
        std::uint64_t below = 0;
        for (unsigned a = 1; a <= 64; ++a) {
            below += h[a - 1];
            rep.discrepancy = std::max(rep.discrepancy, std::fabs(static_cast<double>(below) / T - a / 64.0));
        }
    }

    Int d = den;
    Int g;
    for (;;) {
        mpz_gcd_ui(g.get_mpz_t(), d.get_mpz_t(), b);
        if (g == 1) break;
        d /= g;
    }
    if (d == 1) rep.period = 1;
    else if (mpz_sizeinbase(d.get_mpz_t(), 2) <= 32) rep.period = multiplicative_order(b % to_u64(d), to_u64(d));
    return rep;
}

std::vector<NormalityReport> normality_report(const Rat& x, const std::vector<unsigned>& bases, unsigned guard,
                                              std::optional<Int> scale) {
    std::vector<NormalityReport> out;
    for (unsigned b : bases) out.push_back(normality_report(x, b, guard, scale));
    return out;
}

const char* mode_name(UniquenessMode m) {
    switch (m) {
        case UniquenessMode::Auto: return "auto";
        case UniquenessMode::StepI: return "step-I";
        case UniquenessMode::StepIII: return "step-III";
    }
    return "?";
}

UniquenessVerdict uniqueness_avoidance(const Rat& x, const MoranSystem& sys, std::size_t j_max, UniquenessMode mode) {
    if (x < 0 || x >= 1) fail(Errc::InvalidParameter, "need 0 <= x < 1");
    const auto& P = sys.prefix();
    const std::size_t levels = sys.levels();

    // x must have a finite expansion within the schedule, with digits in the support.
    Int rem = x.get_num(), d;
    for (std::size_t n = 1; n <= levels; ++n) {
        rem *= static_cast<unsigned long>(sys.bases()[n - 1]);
        mpz_fdiv_qr(d.get_mpz_t(), rem.get_mpz_t(), rem.get_mpz_t(), x.get_den_mpz_t());
        if (!sys.level(n).contains(static_cast<std::uint32_t>(d.get_ui())))
            fail(Errc::NotInSupport, "digit " + dec(d) + " at level " + std::to_string(n) + " is not in the digit set");
    }
    if (sgn(rem) != 0) fail(Errc::NotInSupport, "expansion of x does not terminate within the schedule");

    Rat L = 0;
    for (std::size_t n = 1; n <= levels; ++n) {
        Rat ratio(sys.level(n).digits.back(), sys.bases()[n - 1]);
        ratio.canonicalize();
        L = std::max(L, ratio);
    }
    if (mode == UniquenessMode::Auto) mode = 2 * L < 1 ? UniquenessMode::StepI : UniquenessMode::StepIII;

    UniquenessVerdict v;
    v.mode = mode;
    const std::size_t tmax = std::min(j_max, levels);
    if (mode == UniquenessMode::StepI) {
        v.interval_lo = 2 * L;
        if (v.interval_lo >= 1) fail(Errc::InvalidInterval, "2L >= 1 leaves an empty interval");
        for (std::size_t t = 1; t <= tmax; ++t) v.multipliers.push_back(t);
    } else {
        Rat c = 0;
        bool any = false;
        for (std::size_t n = 1; n <= levels; ++n) {
            Rat ratio(sys.level(n).digits.back(), sys.bases()[n - 1]);
            ratio.canonicalize();
            if (6 * ratio < 5) {
                c = std::max(c, ratio);
                any = true;
                if (n - 1 <= tmax) v.multipliers.push_back(n - 1);
            }
        }
        if (!any) fail(Errc::InvalidInterval, "no level with (a_n + 1)/M_n < 5/6");
        v.interval_lo = c + Rat(1, 6);
        if (v.interval_lo >= 1) fail(Errc::InvalidInterval, "c + 1/6 >= 1 leaves an empty interval");
    }
    v.interval_lo.canonicalize();
    const Int& den = x.get_den();
    const Rat lo = v.interval_lo;
    for (std::size_t j = 0; j < v.multipliers.size(); ++j) {
        Int r = x.get_num() * P[v.multipliers[j]];
        mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), den.get_mpz_t());
        Rat frac(r, den);
        frac.canonicalize();
        ++v.checked;
        if (frac > lo) {
            v.pass = false;
            v.first_violation_j = j + 1;
            break;
        }
    }
    return v;
}

void write_normality_csv(std::ostream& os, const std::vector<std::uint64_t>& seeds, std::size_t depth,
                         const std::vector<std::vector<NormalityReport>>& reports) {
    os << "seed,depth,base,trusted_digits,max_deviation,discrepancy\n" << std::setprecision(10);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto& r : reports[i])
            os << seeds[i] << ',' << depth << ',' << r.base << ',' << r.trusted_digit_count << ','
               << r.max_deviation << ',' << r.discrepancy << '\n';
    }
}

void write_uniqueness_csv(std::ostream& os, const std::vector<std::uint64_t>& seeds, std::size_t j_max,
                          const std::vector<UniquenessVerdict>& verdicts) {
    os << "seed,j_max,verdict,first_violation_j\n";
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto& v = verdicts[i];
        os << seeds[i] << ',' << j_max << ',' << (v.pass ? "PASS" : "FAIL") << ',';
        if (v.first_violation_j) os << *v.first_violation_j;
        os << '\n';
    }
}

}  // namespace moran
