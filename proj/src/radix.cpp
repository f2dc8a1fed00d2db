#include "moran/radix.hpp"

#include "moran/errors.hpp"

#include <cmath>

namespace moran {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

u64 checked_pow(u64 base, unsigned e) {
    u64 r = 1;
    for (unsigned i = 0; i < e; ++i) {
        if (r > (u64{1} << 40) / base) fail(Errc::InvalidParameter, "level multiplicity overflows");
        r *= base;
    }
    return r;
}

}  // namespace

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    static const u64 small[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (u64 p : small) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : small) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

u64 next_prime_at_least(u64 n) {
    while (!is_prime_u64(n)) ++n;
    return n;
}

std::string variant_name(ScheduleVariant v) {
    return v == ScheduleVariant::NthPrimeFrom7 ? "nth-prime-from-7" : "cube-window";
}

ScheduleVariant parse_variant(const std::string& s) {
    if (s == "nth-prime-from-7") return ScheduleVariant::NthPrimeFrom7;
    if (s == "cube-window") return ScheduleVariant::CubeWindow;
    fail(Errc::InvalidParameter, "unknown schedule variant '" + s + "'");
}

PrimeSchedule PrimeSchedule::make(unsigned d, ScheduleVariant v, u64 offset, std::vector<u64> q,
                                  std::vector<u64> ell) {
    if (d == 0) fail(Errc::InvalidParameter, "growth exponent d must be positive");
    if (q.empty()) fail(Errc::InvalidParameter, "empty schedule");
    if (q.size() != ell.size()) fail(Errc::InvalidParameter, "q and ell lengths differ");
    if (q[0] < 7) fail(Errc::InvalidParameter, "q_1 must be at least 7");
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!is_prime_u64(q[i])) fail(Errc::InvalidParameter, "q_" + std::to_string(i + 1) + " is not prime");
        if (i > 0 && q[i] <= q[i - 1]) fail(Errc::InvalidParameter, "q must be strictly increasing");
        if (ell[i] == 0) fail(Errc::InvalidParameter, "ell entries must be positive");
    }
    PrimeSchedule s;
    s.d = d;
    s.variant = v;
    s.offset = offset;
    s.q = std::move(q);
    s.ell = std::move(ell);
    s.L.assign(1, 0);
    s.N.assign(1, Int(1));
    for (std::size_t i = 0; i < s.q.size(); ++i) {
        s.L.push_back(s.L.back() + s.ell[i]);
        s.N.push_back(s.N.back() * pow_int(to_int_u(s.q[i]), static_cast<unsigned long>(s.ell[i])));
    }
    return s;
}

std::pair<std::size_t, u64> PrimeSchedule::block_of(u64 n) const {
    if (n == 0 || n > levels()) fail(Errc::OutOfRange, "level " + std::to_string(n) + " outside schedule");
    std::size_t lo = 0, hi = q.size();
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (L[mid] < n) lo = mid;
        else hi = mid;
    }
    return {lo, n - L[lo] - 1};
}

std::vector<u64> default_ell(unsigned d, std::size_t count) {
    std::vector<u64> ell(count);
    for (std::size_t r = 1; r <= count; ++r) ell[r - 1] = checked_pow(r, d);
    return ell;
}

PrimeSchedule build_schedule(unsigned d, std::size_t count, ScheduleVariant variant, u64 offset,
                             std::optional<std::vector<u64>> ell) {
    if (count == 0) fail(Errc::InvalidParameter, "count must be at least 1");
    if (d == 0) fail(Errc::InvalidParameter, "growth exponent d must be positive");
    std::vector<u64> q;
    q.reserve(count);
    if (variant == ScheduleVariant::NthPrimeFrom7) {
        u64 p = 7;
        for (std::size_t i = 0; i < count; ++i) {
            p = next_prime_at_least(p);
            q.push_back(p);
            ++p;
        }
    } else {
        if (offset == 0) fail(Errc::InvalidParameter, "cube-window offset must be at least 1");
        for (std::size_t n = 1; n <= count; ++n) {
            u64 a = n + offset, b = a + 1;
            if (b > 2000000) fail(Errc::InvalidParameter, "cube window too large");
            u64 lo = a * a * a, hi = b * b * b;
            u64 p = lo;
            while (p <= hi && !is_prime_u64(p)) ++p;
            if (p > hi) fail(Errc::NoPrimeInWindow, "no prime in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            q.push_back(p);
        }
    }
    std::vector<u64> e = ell ? *ell : default_ell(d, count);
    return PrimeSchedule::make(d, variant, variant == ScheduleVariant::CubeWindow ? offset : 0, std::move(q),
                               std::move(e));
}

PrimeSchedule schedule_from_primes(const std::vector<u64>& q, const std::vector<u64>& ell, unsigned d) {
    return PrimeSchedule::make(d, ScheduleVariant::NthPrimeFrom7, 0, q, ell);
}

u64 base_at(const PrimeSchedule& s, u64 n) { return s.q[s.block_of(n).first]; }

std::vector<u64> bases_of(const PrimeSchedule& s) {
    std::vector<u64> out;
    out.reserve(s.levels());
    for (std::size_t i = 0; i < s.count(); ++i) out.insert(out.end(), s.ell[i], s.q[i]);
    return out;
}

Int MixedRadixDigits::value() const { return from_digits(digits, bases); }

MixedRadixDigits to_digits(const Int& N, const std::vector<u64>& bases, std::optional<std::size_t> length) {
    if (sgn(N) < 0) fail(Errc::InvalidParameter, "negative integer has no digit expansion");
    MixedRadixDigits out;
    out.bases = bases;
    Int rest = N, q;
    std::size_t i = 0;
    const std::size_t want = length.value_or(0);
    while (sgn(rest) != 0 || i < want) {
        if (i >= bases.size()) {
            if (sgn(rest) != 0) fail(Errc::ScheduleTooShort, "integer exceeds M_1...M_n for the available bases");
            fail(Errc::ScheduleTooShort, "requested digit length exceeds the schedule");
        }
        unsigned long r = mpz_fdiv_q_ui(q.get_mpz_t(), rest.get_mpz_t(), bases[i]);
        out.digits.push_back(static_cast<std::uint32_t>(r));
        rest.swap(q);
        ++i;
    }
    if (length && out.digits.size() > *length) {
        for (std::size_t k = *length; k < out.digits.size(); ++k) {
            if (out.digits[k] != 0) fail(Errc::ScheduleTooShort, "integer needs more digits than requested");
        }
        out.digits.resize(*length);
    }
    return out;
}

MixedRadixDigits to_digits(const Int& N, const PrimeSchedule& s, std::optional<std::size_t> length) {
    return to_digits(N, bases_of(s), length);
}

Int from_digits(const std::vector<std::uint32_t>& digits, const std::vector<u64>& bases) {
    Int v = 0;
    for (std::size_t i = digits.size(); i-- > 0;) {
        v *= to_int_u(bases.at(i));
        v += digits[i];
    }
    return v;
}

bool digits_congruent(const Int& a, const Int& b, std::size_t n, const std::vector<u64>& bases) {
    if (n > bases.size()) fail(Errc::OutOfRange, "n exceeds available bases");
    Int m = 1;
    for (std::size_t i = 0; i < n; ++i) m *= to_int_u(bases[i]);
    return mod_nonneg(a - b, m) == 0;
}

bool digits_congruent(const Int& a, const Int& b, std::size_t n, const PrimeSchedule& s) {
    return digits_congruent(a, b, n, bases_of(s));
}

std::vector<Int> prefix_products(const std::vector<u64>& bases) {
    std::vector<Int> P(bases.size() + 1);
    P[0] = 1;
    for (std::size_t i = 0; i < bases.size(); ++i) P[i + 1] = P[i] * to_int_u(bases[i]);
    return P;
}

double quadratic_growth_constant(const PrimeSchedule& s) {
    double c = 0;
    for (std::size_t n = 1; n <= s.count(); ++n) {
        c = std::max(c, static_cast<double>(s.q[n - 1]) / (static_cast<double>(n) * static_cast<double>(n)));
    }
    return c;
}

}  // namespace moran
