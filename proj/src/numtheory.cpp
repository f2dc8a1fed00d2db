#include "moran/numtheory.hpp"

#include "moran/errors.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace moran {

namespace {

using u64 = std::uint64_t;

Int ipow(u64 p, unsigned long e) { return pow_int(to_int_u(p), e); }

bool is_one_mod(u64 a, const Int& e, const Int& m) { return powm(to_int_u(a), e, m) == 1; }

// Order of a modulo m given a known multiple of it and the primes dividing that multiple.
Int descend(u64 a, const Int& m, Int multiple, const std::vector<u64>& primes) {
    for (u64 r : primes) {
        Int rr = to_int_u(r);
        while (mpz_divisible_p(multiple.get_mpz_t(), rr.get_mpz_t())) {
            Int cand = multiple / rr;
            if (!is_one_mod(a, cand, m)) break;
            multiple = cand;
        }
    }
    return multiple;
}

Int two_power_order(u64 a, unsigned e) {
    Int m = ipow(2, e);
    if (e == 1) return 1;
    return descend(a, m, ipow(2, e - 1), {2});
}

}  // namespace

Int Factorization::value() const {
    Int v = 1;
    for (auto [p, e] : factors) v *= ipow(p, e);
    return v;
}

unsigned Factorization::exponent_of(u64 p) const {
    for (auto [q, e] : factors) {
        if (q == p) return e;
    }
    return 0;
}

Factorization factorize(u64 n) {
    if (n == 0) fail(Errc::InvalidParameter, "cannot factor 0");
    Factorization f;
    auto take = [&](u64 p) {
        unsigned e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        if (e) f.factors.emplace_back(p, e);
    };
    take(2);
    for (u64 p = 3; p <= n / p; p += 2) take(p);
    if (n > 1) f.factors.emplace_back(n, 1);
    return f;
}

u64 gcd_u64(u64 a, u64 b) {
    while (b) {
        u64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Int euler_phi(const Factorization& f) {
    Int v = 1;
    for (auto [p, e] : f.factors) v *= (p - 1) * ipow(p, e - 1);
    return v;
}

u64 multiplicative_order(u64 a, u64 n) {
    if (n < 2) fail(Errc::InvalidParameter, "modulus must be at least 2");
    if (gcd_u64(a % n, n) != 1) fail(Errc::NotCoprime, "gcd(a, n) != 1");
    Factorization fn = factorize(n);
    Int phi = euler_phi(fn);
    std::vector<u64> primes;
    for (auto [p, e] : fn.factors) {
        if (e > 1) primes.push_back(p);
        for (auto [r, er] : factorize(p - 1).factors) primes.push_back(r);
    }
    std::sort(primes.begin(), primes.end());
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
    return to_u64(descend(a, to_int_u(n), phi, primes));
}

unsigned lifting_exponent(u64 a, u64 p) {
    if (p == 2) fail(Errc::EvenPrime, "lifting exponent needs an odd prime");
    if (a % p == 0) fail(Errc::NotCoprime, "p divides a");
    Int d = to_int_u(multiplicative_order(a, p));
    unsigned k = 1;
    while (is_one_mod(a, d, ipow(p, k + 1))) ++k;
    return k;
}

Int prime_power_order(u64 a, u64 p, unsigned j) {
    if (p == 2) fail(Errc::EvenPrime, "p = 2 is excluded");
    if (!is_prime_u64(p)) fail(Errc::InvalidParameter, "p is not prime");
    if (j == 0) fail(Errc::InvalidParameter, "j must be positive");
    if (a % p == 0) fail(Errc::NotCoprime, "p divides a");
    Int d = to_int_u(multiplicative_order(a, p));
    unsigned k = lifting_exponent(a, p);
    if (j <= k) return d;
    return d * ipow(p, j - k);
}

Int order_by_crt(u64 a, const Factorization& f) {
    Int out = 1;
    for (auto [p, e] : f.factors) {
        if (a % p == 0) fail(Errc::NotCoprime, "gcd(a, n) != 1");
        Int part = p == 2 ? two_power_order(a, e) : prime_power_order(a, p, e);
        mpz_lcm(out.get_mpz_t(), out.get_mpz_t(), part.get_mpz_t());
    }
    return out;
}

unsigned k_of(u64 b, u64 q) {
    if (q < 7 || !is_prime_u64(q)) fail(Errc::InvalidParameter, "q must be a prime >= 7");
    if (b < 2) fail(Errc::InvalidParameter, "b must be at least 2");
    return lifting_exponent(b, q);
}

double alpha_constant() {
    long double la = std::log(6000.0L / 999.0L) / 6 + 5 * std::log(6.0L / 5.0L) / 6 + std::log(0.5L) / 6 +
                     5 * std::log(2.0L / 3.0L) / 6;
    return static_cast<double>(std::exp(la));
}

double stirling_C1() { return static_cast<double>(std::exp(1.0L / 12) / std::sqrt(std::acos(-1.0L))); }

Rat c_tilde_rational() {
    long double c = 2 * std::exp(1.0L / 12) / std::sqrt(std::acos(-1.0L));
    const long double scale = 1e12L;
    Int num = static_cast<unsigned long>(std::ceil(c * scale)) + 4;
    Rat r(num, Int(1000000000000UL));
    r.canonicalize();
    return r;
}

u64 smallest_R() {
    static std::once_flag once;
    static u64 cached = 0;
    std::call_once(once, [] {
        // x ln 1.001 - 2 ln x is increasing past its minimum near x = 2001.
        auto holds = [](u64 x) { return ipow(1001, x) >= Int(to_int_u(x) * to_int_u(x)) * ipow(1000, x); };
        u64 lo = 2001, hi = 2002;
        while (!holds(hi)) hi *= 2;
        while (hi - lo > 1) {
            u64 mid = lo + (hi - lo) / 2;
            if (holds(mid)) hi = mid;
            else lo = mid;
        }
        cached = hi;
    });
    return cached;
}

unsigned BaseContext::q_valuation(std::size_t r) const {
    Int qq = to_int_u(schedule.q[r - 1]);
    return static_cast<unsigned>(mpz_remove(Int().get_mpz_t(), Q.get_mpz_t(), qq.get_mpz_t()));
}

Factorization BaseContext::prefix_modulus(u64 n) const {
    if (n < schedule.L[r0_prime] || n > schedule.levels())
        fail(Errc::InvalidRange, "prefix length outside [L_{r0'}, levels]");
    Factorization f;
    for (std::size_t r = 1; r <= count(); ++r) {
        u64 lo = schedule.L[r - 1];
        if (n <= lo) break;
        u64 e = std::min<u64>(n, schedule.L[r]) - lo;
        if (r <= r0_prime) e -= q_valuation(r);
        if (e) f.factors.emplace_back(schedule.q[r - 1], static_cast<unsigned>(e));
    }
    return f;
}

Int BaseContext::prefix_order(u64 n) const { return order_by_crt(b, prefix_modulus(n)); }

Int BaseContext::free_volume(std::size_t c, std::size_t d) const {
    Int v = 1;
    for (std::size_t i = c + 1; i <= d; ++i) v *= ipow(schedule.q[i - 1], static_cast<unsigned long>(j[i - 1]));
    return v;
}

std::int64_t BaseContext::free_digits(std::size_t c, std::size_t d) const {
    std::int64_t u = 0;
    for (std::size_t i = c + 1; i <= d; ++i) u += j[i - 1];
    return u;
}

BaseContext build_context(u64 b, std::int64_t h, const PrimeSchedule& s, Weights w) {
    if (b < 2) fail(Errc::InvalidParameter, "b must be at least 2");
    if (h == 0) fail(Errc::InvalidParameter, "h must be non-zero");
    if (!(w.C > 0 && w.C <= w.D && w.D < 1)) fail(Errc::InvalidParameter, "weights need 0 < C <= D < 1");
    BaseContext ctx;
    ctx.b = b;
    ctx.h = h;
    ctx.schedule = s;
    ctx.weights = w;
    const u64 habs = h < 0 ? static_cast<u64>(-(h + 1)) + 1 : static_cast<u64>(h);
    Factorization fb = factorize(b), fh = factorize(habs);
    const u64 P = std::max(fb.largest_prime(), fh.largest_prime());

    std::size_t r0p = 0;
    for (std::size_t r = 1; r <= s.count(); ++r) {
        if (s.q[r - 1] >= P) {
            r0p = r;
            break;
        }
    }
    if (r0p == 0) fail(Errc::ScheduleTooShort, "no schedule prime reaches the largest prime factor of b and h");
    ctx.r0_prime = r0p;

    // v_p(h b^n) = v_p(h) + n v_p(b) grows until it reaches the exponent of p in N_{r0'}.
    u64 n0 = 1;
    for (std::size_t r = 1; r <= r0p; ++r) {
        u64 p = s.q[r - 1], e = s.ell[r - 1];
        u64 vb = fb.exponent_of(p), vh = fh.exponent_of(p);
        if (vb > 0 && vh < e) n0 = std::max<u64>(n0, (e - vh + vb - 1) / vb);
    }
    ctx.n0 = n0;
    Int Q = 1;
    for (std::size_t r = 1; r <= r0p; ++r) {
        u64 p = s.q[r - 1], e = s.ell[r - 1];
        u64 v = std::min<u64>(fh.exponent_of(p) + n0 * fb.exponent_of(p), e);
        Q *= ipow(p, v);
    }
    ctx.Q = Q;

    ctx.k.assign(s.count(), 0);
    ctx.j.assign(s.count(), 0);
    for (std::size_t r = 1; r <= s.count(); ++r) {
        if (r > r0p) ctx.k[r - 1] = k_of(b, s.q[r - 1]);
        ctx.j[r - 1] = static_cast<std::int64_t>(s.ell[r - 1]) - ctx.k[r - 1];
    }
    // Smallest r from which every remaining j stays positive.
    std::size_t r2 = s.count() + 1;
    while (r2 > 1 && ctx.j[r2 - 2] > 0) --r2;
    ctx.r0_second = r2;
    ctx.r0 = std::max(r0p, r2);

    ctx.gamma = std::sqrt(1.0 - Rat(w.C * (1 - w.D)).get_d());
    ctx.alpha = alpha_constant();
    ctx.C1 = stirling_C1();
    ctx.C_tilde = c_tilde_rational();
    ctx.A = std::max(ctx.C_tilde.get_d(), 1.0);
    ctx.B = -std::max(std::log(0.999), std::log(ctx.gamma) / 6);
    ctx.R = smallest_R();
    ctx.r1 = ctx.r0 + std::max<u64>(6000, ctx.R);
    return ctx;
}

OrdRatio ord_ratio_check(const BaseContext& ctx, std::size_t s) {
    if (s < ctx.r0 || s + 1 > ctx.count()) fail(Errc::OutOfRange, "s must satisfy r0 <= s < schedule length");
    const auto& L = ctx.schedule.L;
    OrdRatio out;
    out.lhs = ctx.prefix_order(L[s + 1]);
    out.rhs = ipow(ctx.schedule.q[s], static_cast<unsigned long>(ctx.j[s])) *
              ctx.prefix_order(L[s] + static_cast<u64>(ctx.k[s]));
    Int vol = ctx.free_volume(ctx.r0, s + 1);
    out.J_integral = mpz_divisible_p(out.lhs.get_mpz_t(), vol.get_mpz_t()) != 0;
    out.J = out.lhs / vol;
    return out;
}

}  // namespace moran
