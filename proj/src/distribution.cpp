#include "moran/distribution.hpp"

#include "moran/errors.hpp"

#include <algorithm>
#include <ostream>
#include <string>
#include <thread>

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

void check_system(const BaseContext& ctx, const MoranSystem& sys) {
    if (sys.bases() != bases_of(ctx.schedule)) fail(Errc::InvalidParameter, "system and context use different schedules");
}

u64 resolve_m(const BaseContext& ctx, std::optional<u64> m) {
    u64 mm = m.value_or(ctx.n0 - 1);
    if (mm + 1 < ctx.n0) fail(Errc::InvalidRange, "m must be at least n0 - 1");
    return mm;
}

// Sequential residues of h b^n - h b^m modulo P < 2^64.
struct Walker {
    u64 P, bmod, val, sub;

    Walker(const BaseContext& ctx, u64 P_, u64 n, u64 m) : P(P_) {
        bmod = ctx.b % P;
        u64 hmod = to_u64(mod_nonneg(to_int(ctx.h), to_int_u(P)));
        val = mulmod(hmod, powmod(bmod, n, P), P);
        sub = mulmod(hmod, powmod(bmod, m, P), P);
    }
    u64 x() const { return val >= sub ? val - sub : val + (P - sub); }
    void step() { val = mulmod(val, bmod, P); }
};

// Index of the digit tuple at fixed positions, read as a mixed-radix number.
struct Projector {
    std::vector<u64> div, base, weight;
    u64 volume = 1;

    Projector(const std::vector<u64>& positions, const MoranSystem& sys) {
        const auto& P = sys.prefix();
        for (u64 p : positions) {
            div.push_back(to_u64(P[p]));
            base.push_back(sys.bases()[p]);
            weight.push_back(volume);
            volume *= sys.bases()[p];
        }
    }
    u64 operator()(u64 x) const {
        u64 y = 0;
        for (std::size_t i = 0; i < div.size(); ++i) y += (x / div[i]) % base[i] * weight[i];
        return y;
    }
};

u64 checked_length(const Int& len) {
    if (len > kEnumerationGuard) fail(Errc::TooLarge, "interval length " + dec(len) + " exceeds the enumeration guard");
    return to_u64(len);
}

u64 checked_modulus(const MoranSystem& sys, u64 levels) {
    const Int& P = sys.prefix().at(levels);
    if (!fits_u64(P)) fail(Errc::TooLarge, "modulus M_1...M_n exceeds 64 bits");
    return to_u64(P);
}

std::vector<u64> residues(const BaseContext& ctx, u64 P, u64 start, u64 length, u64 m, unsigned workers) {
    std::vector<u64> out(length);
    workers = std::max(1u, workers);
    const u64 chunk = (length + workers - 1) / workers;
    auto run = [&](u64 from, u64 to) {
        if (from >= to) return;
        Walker w(ctx, P, start + from, m);
        for (u64 i = from; i < to; ++i) {
            out[i] = w.x();
            w.step();
        }
    };
    if (workers == 1) {
        run(0, length);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run, t * chunk, std::min<u64>(length, (t + 1) * chunk));
        for (auto& th : pool) th.join();
    }
    return out;
}

u64 distinct_count(std::vector<u64> v) {
    std::sort(v.begin(), v.end());
    return static_cast<u64>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<u64> pi_positions(const BaseContext& ctx, std::size_t c, std::size_t d) {
    if (c > d || d > ctx.count()) fail(Errc::InvalidRange, "need c <= d <= schedule length");
    std::vector<u64> pos;
    for (std::size_t s = c; s < d; ++s) {
        if (ctx.j[s] <= 0) fail(Errc::InvalidRange, "block " + std::to_string(s + 1) + " has no free digits");
        for (u64 p = ctx.schedule.L[s] + static_cast<u64>(ctx.k[s]); p < ctx.schedule.L[s + 1]; ++p) pos.push_back(p);
    }
    return pos;
}

Int difference_residue(const BaseContext& ctx, u64 n, u64 m, const Int& modulus) {
    Int B = to_int_u(ctx.b);
    Int v = to_int(ctx.h) * (powm(B, to_int_u(n), modulus) - powm(B, to_int_u(m), modulus));
    return mod_nonneg(v, modulus);
}

std::vector<std::uint32_t> phi_map(u64 n, u64 m, std::size_t N_digits, const MoranSystem& sys,
                                   const BaseContext& ctx) {
    check_system(ctx, sys);
    if (n <= m) fail(Errc::InvalidRange, "phi is defined on (m : infinity)");
    if (m + 1 < ctx.n0) fail(Errc::InvalidRange, "m must be at least n0 - 1");
    if (N_digits > sys.levels()) fail(Errc::ScheduleTooShort, "more digits than schedule levels");
    Int x = difference_residue(ctx, n, m, sys.prefix()[N_digits]);
    return to_digits(x, sys.bases(), N_digits).digits;
}

std::vector<std::uint32_t> pi_map(u64 n, u64 m, std::size_t c, std::size_t d, const MoranSystem& sys,
                                  const BaseContext& ctx) {
    if (c < ctx.r0 || c > d || d > ctx.count()) fail(Errc::InvalidRange, "need r0 <= c <= d <= schedule length");
    std::vector<u64> pos = pi_positions(ctx, c, d);
    std::vector<std::uint32_t> full = phi_map(n, m, ctx.schedule.L[d], sys, ctx);
    std::vector<std::uint32_t> out;
    for (u64 p : pos) out.push_back(full[p]);
    return out;
}

PartitionCertificate verify_partition(u64 I_start, const BaseContext& ctx, const MoranSystem& sys, std::size_t r,
                                      std::optional<u64> m_opt, unsigned workers) {
    check_system(ctx, sys);
    if (r < ctx.r0 + 1 || r > ctx.count()) fail(Errc::InvalidRange, "need r0 + 1 <= r <= schedule length");
    const u64 m = resolve_m(ctx, m_opt);
    if (I_start <= m) fail(Errc::InvalidRange, "interval must lie in (m : infinity)");
    const auto& L = ctx.schedule.L;
    const u64 length = checked_length(ctx.prefix_order(L[r]));
    const u64 P = checked_modulus(sys, L[r]);
    Projector proj(pi_positions(ctx, ctx.r0, r), sys);
    const u64 V = proj.volume;
    if (length % V != 0)
        fail(Errc::CounterexampleFound, "interval length " + std::to_string(length) + " not divisible by #Y = " + std::to_string(V));
    const u64 J = length / V;

    std::vector<u64> xs = residues(ctx, P, I_start, length, m, workers);
    std::vector<std::uint32_t> ys(length);
    for (u64 i = 0; i < length; ++i) ys[i] = static_cast<std::uint32_t>(proj(xs[i]));
    xs.clear();
    xs.shrink_to_fit();

    // Class t takes the t-th element of every fiber, in increasing order of n.
    std::vector<u64> seen(V, 0);
    std::vector<std::uint32_t> cls(length);
    for (u64 i = 0; i < length; ++i) {
        u64 c = seen[ys[i]]++;
        if (c >= J)
            fail(Errc::CounterexampleFound, "fiber of y=" + std::to_string(ys[i]) + " exceeds J at n=" + std::to_string(I_start + i));
        cls[i] = static_cast<std::uint32_t>(c);
    }
    for (u64 y = 0; y < V; ++y) {
        if (seen[y] != J) fail(Errc::CounterexampleFound, "fiber of y=" + std::to_string(y) + " has size " + std::to_string(seen[y]));
    }

    // Independent recheck: every class meets every y exactly once.
    std::vector<bool> hit(length, false);
    std::vector<u64> sizes(J, 0);
    for (u64 i = 0; i < length; ++i) {
        u64 slot = static_cast<u64>(cls[i]) * V + ys[i];
        if (hit[slot]) fail(Errc::CounterexampleFound, "class repeats a point of Y at n=" + std::to_string(I_start + i));
        hit[slot] = true;
        ++sizes[cls[i]];
    }
    PartitionCertificate cert;
    cert.I_start = I_start;
    cert.length = length;
    cert.m = m;
    cert.r = r;
    cert.J = J;
    cert.class_size = V;
    cert.class_sizes = sizes;
    cert.ok = std::all_of(sizes.begin(), sizes.end(), [&](u64 s) { return s == V; }) &&
              std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
    if (!cert.ok) fail(Errc::CounterexampleFound, "classes do not cover Y");
    if (length <= 2'000'000) {
        cert.classes.assign(J, {});
        for (auto& c : cert.classes) c.reserve(V);
        for (u64 i = 0; i < length; ++i) cert.classes[cls[i]].push_back(I_start + i);
    }
    return cert;
}

FiberTable fiber_counts(u64 I_start, u64 length, const BaseContext& ctx, const MoranSystem& sys, std::size_t s,
                        std::optional<u64> m_opt) {
    check_system(ctx, sys);
    if (s < ctx.r0 || s + 1 > ctx.count()) fail(Errc::InvalidRange, "need r0 <= s < schedule length");
    const u64 m = resolve_m(ctx, m_opt);
    if (I_start <= m) fail(Errc::InvalidRange, "interval must lie in (m : infinity)");
    const auto& L = ctx.schedule.L;
    const Int expected_len = ctx.prefix_order(L[s + 1]);
    if (expected_len != to_int_u(length))
        fail(Errc::TooLarge, "interval length must equal ord_{N_{s+1}/Q}(b) = " + dec(expected_len));
    checked_length(expected_len);
    const u64 P = checked_modulus(sys, L[s + 1]);
    Projector px(pi_positions(ctx, ctx.r0, s), sys);
    Projector py(pi_positions(ctx, s, s + 1), sys);
    const u64 Vx = px.volume, Vy = py.volume;
    if (Vx > kEnumerationGuard / Vy) fail(Errc::TooLarge, "#Y_{r0,s+1} exceeds the enumeration guard");

    FiberTable t;
    t.s = s;
    t.I_start = I_start;
    t.length = length;
    t.q_pow_j = Vy;
    t.fiber_x.assign(Vx, 0);
    t.fiber_xy.assign(Vx * Vy, 0);
    std::vector<u64> xs = residues(ctx, P, I_start, length, m, 1);
    for (u64 x : xs) {
        u64 a = px(x), b = py(x);
        ++t.fiber_x[a];
        ++t.fiber_xy[a * Vy + b];
    }
    for (u64 a = 0; a < Vx; ++a) {
        for (u64 b = 0; b < Vy; ++b) {
            u64 f = t.fiber_xy[a * Vy + b];
            u64 lhs = s == ctx.r0 ? length : t.fiber_x[a];
            if (lhs != Vy * f)
                fail(Errc::CounterexampleFound, "fiber identity fails at x=" + std::to_string(a) + ", y=" + std::to_string(b));
        }
    }
    for (u64 jj = 0; jj <= ctx.schedule.ell[s]; ++jj) {
        const u64 Pj = to_u64(sys.prefix()[L[s] + jj]);
        std::vector<u64> red(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) red[i] = xs[i] % Pj;
        const Int ord = ctx.prefix_order(L[s] + jj);
        const u64 W = to_u64(ord);
        t.image_size.push_back(distinct_count(red));
        t.expected_image.push_back(W);
        red.resize(std::min<u64>(W, red.size()));
        t.injective.push_back(W <= length && distinct_count(red) == W);
        if (t.image_size.back() != W || !t.injective.back())
            fail(Errc::CounterexampleFound, "image size or window injectivity fails at j=" + std::to_string(jj));
    }
    // Unique lift: prefixes of length L_s + k_{s+1} times free tuples y fill the image exactly once.
    const u64 img_k = t.image_size[static_cast<std::size_t>(ctx.k[s])];
    if (t.image_size.back() != length || img_k * Vy != length)
        fail(Errc::CounterexampleFound, "unique lift of (prefix, y) fails");
    t.ok = true;
    return t;
}

std::vector<u64> classify_Bk(const std::vector<u64>& Lambda, const BaseContext& ctx, const MoranSystem& sys,
                             std::size_t r, std::optional<u64> m_opt) {
    check_system(ctx, sys);
    if (r < ctx.r0 + 1 || r > ctx.count()) fail(Errc::InvalidRange, "need r0 + 1 <= r <= schedule length");
    const u64 m = resolve_m(ctx, m_opt);
    std::vector<u64> pos = pi_positions(ctx, ctx.r0, r);
    const Int& P = sys.prefix()[ctx.schedule.L[r]];
    const Int vol = ctx.free_volume(ctx.r0, r);
    if (to_int_u(Lambda.size()) != vol) fail(Errc::NotWellDistributed, "#Lambda differs from #Y");
    std::vector<u64> hist(pos.size() + 1, 0);
    std::vector<std::string> keys;
    keys.reserve(Lambda.size());
    for (u64 n : Lambda) {
        if (n <= m) fail(Errc::InvalidRange, "elements must lie in (m : infinity)");
        Int x = difference_residue(ctx, n, m, P);
        std::vector<std::uint32_t> dg = to_digits(x, sys.bases(), ctx.schedule.L[r]).digits;
        std::string key;
        std::size_t k = 0;
        for (u64 p : pos) {
            std::uint64_t q = sys.bases()[p];
            std::uint32_t d = dg[p];
            k += d >= window_lo(q) && d <= window_hi(q);
            key.append(std::to_string(d)).push_back(',');
        }
        ++hist[k];
        keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        fail(Errc::NotWellDistributed, "Pi is not injective on Lambda");
    return hist;
}

Rat C_bound_raw(u64 k, u64 u, const Int& volume) {
    if (k > u) fail(Errc::InvalidParameter, "need 0 <= k <= u");
    Int bin;
    mpz_bin_uiui(bin.get_mpz_t(), u, k);
    Rat out(bin * volume * pow_int(Int(2), u - k), pow_int(Int(2), k) * pow_int(Int(3), u - k));
    out.canonicalize();
    return out;
}

Rat C_bound(u64 k, u64 u, const BaseContext& ctx, const MoranSystem& sys, std::size_t r) {
    check_system(ctx, sys);
    if (r < ctx.r0 + 1 || r > ctx.count()) fail(Errc::InvalidRange, "need r0 + 1 <= r <= schedule length");
    if (static_cast<std::int64_t>(u) != ctx.free_digits(ctx.r0, r)) fail(Errc::InvalidParameter, "u differs from the free digit count");
    return C_bound_raw(k, u, ctx.free_volume(ctx.r0, r));
}

bool crossover_matches(u64 u) {
    for (u64 k = 0; k < u; ++k) {
        bool increasing = C_bound_raw(k, u, 1) < C_bound_raw(k + 1, u, 1);
        bool predicted = 7 * static_cast<std::int64_t>(k) < 3 * static_cast<std::int64_t>(u) - 4;
        if (increasing != predicted) return false;
    }
    return true;
}

LargeUCheck check_large_u(const Rat& C_tilde) {
    LargeUCheck c;
    const u64 u = 6000, k = u / 6;
    c.u = u;
    c.lhs = C_bound_raw(k, u, 1);
    // alpha^6000 = (6000/999)^1000 (6/5)^5000 (1/2)^1000 (2/3)^5000.
    Rat a(pow_int(Int(6000), 1000) * pow_int(Int(6), 5000) * pow_int(Int(2), 5000),
          pow_int(Int(999), 1000) * pow_int(Int(5), 5000) * pow_int(Int(2), 1000) * pow_int(Int(3), 5000));
    a.canonicalize();
    c.rhs = C_tilde * Rat(u) * a;
    c.log10_lhs = log_rat(c.lhs) / std::log(10.0);
    c.log10_rhs = log_rat(c.rhs) / std::log(10.0);
    c.holds = c.lhs <= c.rhs;
    return c;
}

void write_histogram_csv(std::ostream& os, const std::vector<u64>& hist, const BaseContext& ctx, std::size_t r) {
    const u64 u = static_cast<u64>(ctx.free_digits(ctx.r0, r));
    const Int vol = ctx.free_volume(ctx.r0, r);
    os << "k,count,C_k_num,C_k_den\n";
    for (u64 k = 0; k < hist.size(); ++k) {
        Rat C = C_bound_raw(k, u, vol);
        os << k << ',' << hist[k] << ',' << dec(C.get_num()) << ',' << dec(C.get_den()) << '\n';
    }
}

}  // namespace moran
