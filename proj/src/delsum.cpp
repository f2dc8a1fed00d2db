#include "moran/delsum.hpp"

#include "moran/errors.hpp"

#include <cfloat>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace moran {

namespace {

// Neumaier compensated sum.
struct Accum {
    double s = 0, c = 0;

    void add(double x) {
        double t = s + x;
        if (std::fabs(s) >= std::fabs(x)) c += (s - t) + x;
        else c += (x - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

}  // namespace

Int frequency(std::int64_t h, std::uint64_t b, std::uint64_t n, std::uint64_t m) {
    Int B = to_int_u(b);
    return to_int(h) * (pow_int(B, n) - pow_int(B, m));
}

DelReport del_partial(const MoranSystem& sys, std::uint64_t b, std::int64_t h, std::uint64_t N_max, double eps,
                      unsigned workers) {
    if (N_max < 1) fail(Errc::InvalidParameter, "N_max must be at least 1");
    if (b < 2) fail(Errc::InvalidParameter, "b must be at least 2");
    if (h == 0) fail(Errc::InvalidParameter, "h must be non-zero");
    if (!(eps > 0)) fail(Errc::InvalidParameter, "eps must be positive");
    double H = 0;
    for (std::uint64_t N = 1; N <= N_max; ++N) H += 1.0 / static_cast<double>(N);
    const double term_eps = eps / (2 * H);

    // Distinct |h(b^n - b^m)| for m < n < N_max.
    std::map<Int, std::size_t> slot_of;
    std::vector<Int> freqs;
    std::vector<std::size_t> pair_slot(N_max * N_max, 0);
    for (std::uint64_t n = 1; n < N_max; ++n) {
        for (std::uint64_t m = 0; m < n; ++m) {
            Int f = abs(frequency(h, b, n, m));
            auto [it, fresh] = slot_of.emplace(f, freqs.size());
            if (fresh) freqs.push_back(f);
            pair_slot[n * N_max + m] = it->second;
        }
    }
    std::vector<CertifiedModulus> vals = mu_hat_batch(freqs, sys, term_eps, workers);
    auto mid = [&](std::uint64_t n, std::uint64_t m) {
        if (n == m) return 1.0;
        if (n < m) std::swap(n, m);
        return vals[pair_slot[n * N_max + m]].mid();
    };
    auto half = [&](std::uint64_t n, std::uint64_t m) {
        if (n == m) return 0.0;
        if (n < m) std::swap(n, m);
        return 0.5 * vals[pair_slot[n * N_max + m]].width();
    };

    DelReport rep;
    rep.N_max = N_max;
    rep.distinct_frequencies = freqs.size();
    Accum total, diag, upper, direct, rad;
    for (std::uint64_t N = 1; N <= N_max; ++N) {
        const double N3 = std::pow(static_cast<double>(N), 3);
        Accum u, w;
        for (std::uint64_t n = 1; n < N; ++n) {
            for (std::uint64_t m = 0; m < n; ++m) {
                u.add(mid(n, m));
                w.add(half(n, m));
            }
        }
        const double inc = (static_cast<double>(N) + 2 * u.value()) / N3;
        rep.increments.push_back(inc);
        total.add(inc);
        diag.add(1.0 / (static_cast<double>(N) * static_cast<double>(N)));
        upper.add(u.value() / N3);
        rad.add(2 * w.value() / N3);
        Accum d;
        for (std::uint64_t m = 0; m < N; ++m) {
            for (std::uint64_t n = 0; n < N; ++n) d.add(mid(n, m));
        }
        direct.add(d.value() / N3);
        rep.cumulative.push_back(total.value());
        rep.radii.push_back(rad.value() + 8 * DBL_EPSILON * total.value());
    }
    rep.partial_sum = total.value();
    rep.radius = rep.radii.back();
    rep.diagonal = diag.value();
    rep.upper = upper.value();
    rep.full_direct = direct.value();
    rep.decomposition_gap = std::fabs(rep.full_direct - (rep.diagonal + 2 * rep.upper));

    const auto& Nr = sys.schedule().N;
    for (std::size_t r = 1; r < Nr.size(); ++r) {
        if (Nr[r - 1] >= to_int_u(N_max)) break;
        DelBlock blk;
        blk.r = r;
        Accum s;
        for (std::uint64_t N = to_u64(Nr[r - 1]) + 1; N <= N_max && to_int_u(N) <= Nr[r]; ++N) s.add(rep.increments[N - 1]);
        blk.sum = s.value();
        rep.blocks.push_back(blk);
    }
    return rep;
}

std::vector<BlockRow> block_trend(const MoranSystem& sys, std::uint64_t b, std::int64_t h, std::size_t r_lo,
                                  std::size_t r_hi, const std::vector<std::uint64_t>& m_grid, double eps,
                                  unsigned workers) {
    const PrimeSchedule& s = sys.schedule();
    if (r_lo < 1 || r_lo > r_hi || r_hi > s.count()) fail(Errc::InvalidRange, "need 1 <= r_lo <= r_hi <= schedule length");
    for (std::size_t r = r_lo; r <= r_hi; ++r) {
        if (s.N[r] > kBlockGuard) fail(Errc::TooLarge, "N_" + std::to_string(r) + " exceeds the block guard");
    }
    BaseContext ctx = build_context(b, h, s);
    std::vector<BlockRow> rows;
    for (std::size_t r = r_lo; r <= r_hi; ++r) {
        const std::uint64_t Nr = to_u64(s.N[r]);
        const double u = r > ctx.r0 ? static_cast<double>(ctx.free_digits(ctx.r0, r)) : 0.0;
        for (std::uint64_t m : m_grid) {
            BlockRow row;
            row.r = r;
            row.N_r = Nr;
            row.m = m;
            row.paper_bound = 2 * ctx.A * static_cast<double>(Nr) * std::exp(-ctx.B * u);
            if (m + 1 < Nr) {
                std::vector<Int> xs;
                for (std::uint64_t n = m + 1; n < Nr; ++n) xs.push_back(frequency(h, b, n, m));
                std::vector<CertifiedModulus> v = mu_hat_batch(xs, sys, eps, workers);
                Accum acc;
                for (const auto& c : v) acc.add(c.hi);
                row.terms = xs.size();
                row.block_sum = acc.value() * (1 + 4 * DBL_EPSILON);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_del_csv(std::ostream& os, const DelReport& rep) {
    os << "N,increment,cumulative,radius\n" << std::setprecision(17);
    for (std::size_t i = 0; i < rep.increments.size(); ++i)
        os << i + 1 << ',' << rep.increments[i] << ',' << rep.cumulative[i] << ',' << rep.radii[i] << '\n';
}

void write_blocks_csv(std::ostream& os, const std::vector<BlockRow>& rows) {
    os << "r,m,block_sum,paper_bound_with_derived_constants,regime\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.r << ',' << r.m << ',' << r.block_sum << ',' << r.paper_bound << ','
           << (r.asymptotic_regime_only ? "asymptotic-regime-only" : "valid") << '\n';
}

}  // namespace moran
