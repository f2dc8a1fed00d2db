#include "moran/dimension.hpp"

#include "moran/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

namespace moran {

namespace {

const double kLn2 = std::log(2.0);

Rat pow_rat(const Rat& a, unsigned long e) {
    Rat out(pow_int(a.get_num(), e), pow_int(a.get_den(), e));
    out.canonicalize();
    return out;
}

std::vector<std::uint32_t> iota_digits(std::uint32_t from, std::uint32_t to, std::uint32_t step) {
    std::vector<std::uint32_t> v;
    for (std::uint32_t d = from; d <= to; d += step) v.push_back(d);
    return v;
}

}  // namespace

double log_H(double c, double lambda) {
    if (!(lambda > std::exp(1.0))) return 0;
    return c * std::pow(lambda / std::log(lambda), 0.25);
}

GaugeFunction GaugeFunction::power(const Rat& s) {
    if (s <= 0 || s > 1) fail(Errc::InvalidParameter, "power gauge needs 0 < s <= 1");
    GaugeFunction g;
    g.kind = Kind::Power;
    g.s = s;
    g.label = "r^" + s.get_str();
    return g;
}

GaugeFunction GaugeFunction::r_log_power(double c) {
    GaugeFunction g;
    g.kind = Kind::RLogPower;
    g.c = c;
    g.label = "r*log(1/r)^" + std::to_string(c);
    return g;
}

GaugeFunction GaugeFunction::r_times_H(double c) {
    GaugeFunction g;
    g.kind = Kind::RH;
    g.c = c;
    g.label = "r*H_" + std::to_string(c);
    return g;
}

GaugeFunction GaugeFunction::from_log_g(std::function<double(double)> log_g, std::string label) {
    GaugeFunction g;
    g.kind = Kind::Custom;
    g.custom = std::move(log_g);
    g.label = std::move(label);
    return g;
}

double GaugeFunction::log_g(double lambda) const {
    switch (kind) {
        case Kind::Power: return (1 - s.get_d()) * lambda;
        case Kind::RLogPower: return c * std::log(lambda);
        case Kind::RH: return log_H(c, lambda);
        case Kind::Custom: return custom(lambda);
    }
    return 0;
}

GaugeFunction GaugeFunction::h_adjusted(double cH) const {
    GaugeFunction base = *this;
    return from_log_g([base, cH](double l) { return base.log_g(l) - log_H(cH, l); }, label + "/H_" + std::to_string(cH));
}

std::size_t h_of_r(const Rat& r, const std::vector<Int>& prefix) {
    if (r <= 0 || r >= 1) fail(Errc::InvalidParameter, "need 0 < r < 1");
    if (prefix.size() < 2 || r * prefix[1] > 1) fail(Errc::OutOfRange, "r exceeds 1/M_1");
    // Largest h with r P_h <= 1; P_{h+1} must exist.
    std::size_t lo = 1, hi = prefix.size() - 1;
    if (r * prefix[hi] <= 1) fail(Errc::ScheduleTooShort, "schedule does not reach 1/r");
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (r * prefix[mid] <= 1) lo = mid;
        else hi = mid;
    }
    return lo;
}

std::size_t h_of_r(const Rat& r, const MoranSystem& sys) { return h_of_r(r, sys.prefix()); }

bool SparseSet::contains(std::size_t n) const { return std::binary_search(indices.begin(), indices.end(), n); }

std::size_t SparseSet::count_upto(std::size_t level) const {
    return static_cast<std::size_t>(std::upper_bound(indices.begin(), indices.end(), level) - indices.begin());
}

SparseSet sparse_index_set(const GaugeFunction& g, const MoranSystem& sys, std::size_t depth) {
    const auto& P = sys.prefix();
    if (depth < 2 || depth > sys.levels()) fail(Errc::InvalidParameter, "depth must lie in [2, levels]");
    const double lam_min = log_int(P[1]);
    const double lam_max = log_int(P[depth]);

    // g -> infinity on the decade grid: the upper half of the decade values strictly increases.
    std::vector<double> dec;
    for (int k = 1; k * std::log(10.0) <= lam_max; ++k) dec.push_back(g.log_g(k * std::log(10.0)));
    if (dec.size() < 2) fail(Errc::GaugeTooSmall, "decade grid too short to see g grow");
    for (std::size_t i = dec.size() / 2; i + 1 < dec.size(); ++i) {
        if (!(dec[i + 1] > dec[i])) fail(Errc::GaugeTooSmall, "g is not increasing on the decade grid");
    }

    // Envelope inf{g(t) : t <= r}, sampled on a geometric lambda grid past lam_max.
    const std::size_t G = 4096;
    const double lam_cap = 2 * lam_max + 10;
    std::vector<double> lam(G), suffix(G);
    for (std::size_t i = 0; i < G; ++i) lam[i] = lam_min * std::pow(lam_cap / lam_min, static_cast<double>(i) / (G - 1));
    for (std::size_t i = G; i-- > 0;) suffix[i] = std::min(g.log_g(lam[i]), i + 1 < G ? suffix[i + 1] : std::numeric_limits<double>::infinity());
    auto env = [&](double l) {
        std::size_t i = static_cast<std::size_t>(std::upper_bound(lam.begin(), lam.end(), l) - lam.begin());
        double v = g.log_g(l);
        return i < G ? std::min(v, suffix[i]) : v;
    };
    auto h_of_lambda = [&](double l) {
        std::size_t h = 0;
        while (h + 1 < P.size() && log_int(P[h + 1]) <= l) ++h;
        return h;
    };

    SparseSet out;
    std::size_t last_h = 0;
    for (unsigned k = 1; k < 62; ++k) {
        const std::uint64_t nk = std::uint64_t(1) << (k + 1);
        const double T = std::log(static_cast<double>(nk));
        if (env(lam_max) < T) break;
        double lo = lam_min, hi = lam_max;
        if (env(lo) >= T) {
            hi = lo;
        } else {
            while (hi - lo > std::ldexp(std::max(1.0, hi), -40)) {
                double mid = 0.5 * (lo + hi);
                if (env(mid) >= T) hi = mid;
                else lo = mid;
            }
        }
        const std::size_t h = h_of_lambda(hi);
        if (!out.indices.empty() && h <= last_h) continue;
        if (h + 1 > depth) break;
        last_h = h;
        out.indices.push_back(h + 1);
        out.lambda_k.push_back(hi);
        out.n_k.push_back(nk);
    }
    if (out.indices.empty()) fail(Errc::GaugeTooSmall, "g never reaches n_1 = 4 within the schedule depth");

    // Certificate on r <= r_1: cell tops 1/P_n, just above 1/P_{n+1}, and 1/(2 P_n).
    out.certified = true;
    out.worst_margin = std::numeric_limits<double>::infinity();
    const double lam1 = out.lambda_k.front();
    for (std::size_t n = 1; n + 1 < depth; ++n) {
        const Int next = to_int_u(sys.bases()[n]);
        for (const Int& t : {Int(1), Int(2), Int(next - 1)}) {
            Rat r(1, P[n] * t);
            r.canonicalize();
            const double l = log_int(P[n] * t);
            if (l < lam1) continue;
            const std::size_t h = h_of_r(r, P);
            if (h + 1 > depth) continue;
            const double margin = g.log_g(l) - static_cast<double>(out.count_upto(h + 1)) * kLn2;
            out.grid.push_back(r);
            out.worst_margin = std::min(out.worst_margin, margin);
            if (!(margin >= 0)) out.certified = false;
        }
    }
    return out;
}

const char* variant_name(ConvolvedVariant v) {
    switch (v) {
        case ConvolvedVariant::DimOne: return "dim-one";
        case ConvolvedVariant::Gauge: return "gauge";
        case ConvolvedVariant::Extreme: return "extreme";
    }
    return "?";
}

ConvolvedSystem build_convolved(const MoranSystem& mu, ConvolvedVariant variant, const std::optional<GaugeFunction>& gauge,
                                double cH, std::optional<std::size_t> depth) {
    if (!mu.is_binary()) fail(Errc::InvalidParameter, "the base system must use digits {0,1}");
    ConvolvedSystem cs;
    cs.variant = variant;
    const std::size_t L = mu.levels();
    cs.in_N.assign(L, variant == ConvolvedVariant::DimOne);
    if (variant != ConvolvedVariant::DimOne) {
        if (!gauge) fail(Errc::InvalidParameter, "gauge variants need a gauge function");
        GaugeFunction g = variant == ConvolvedVariant::Extreme ? gauge->h_adjusted(cH) : *gauge;
        cs.sparse = sparse_index_set(g, mu, depth.value_or(L));
        for (std::size_t n : cs.sparse->indices) cs.in_N[n - 1] = true;
    }
    std::vector<Level> lam_levels, eta_levels;
    for (std::size_t n = 1; n <= L; ++n) {
        const std::uint32_t M = static_cast<std::uint32_t>(mu.bases()[n - 1]);
        std::vector<std::uint32_t> E;
        if (cs.in_N[n - 1]) E = iota_digits(0, 2 * (M / 4), 2);
        else if (variant == ConvolvedVariant::Gauge) E = iota_digits(0, M - 2, 1);
        else E = iota_digits(0, M - 3, 2);

        const Level& D = mu.level(n);
        std::vector<Rat> w(M, Rat(0));
        std::vector<unsigned> ways(M, 0);
        for (std::size_t i = 0; i < D.size(); ++i) {
            for (std::uint32_t e : E) {
                const std::uint32_t f = D.digits[i] + e;
                if (f >= M) fail(Errc::InvalidParameter, "D + E leaves {0, ..., M_n - 1}");
                w[f] += D.weight(i) / static_cast<unsigned long>(E.size());
                ++ways[f];
            }
        }
        std::vector<std::uint32_t> F;
        std::vector<Rat> fw;
        bool unique = true;
        for (std::uint32_t f = 0; f < M; ++f) {
            if (!ways[f]) continue;
            F.push_back(f);
            w[f].canonicalize();
            fw.push_back(w[f]);
            unique = unique && ways[f] == 1;
        }

        Level lam;
        lam.base = M;
        lam.digits = F;
        const bool half = D.weight(0) == Rat(1, 2);
        if (half && unique) lam.shape = Level::Shape::Uniform;
        else if (half && E.size() >= 2 && E[1] == 1) lam.shape = Level::Shape::HalfEndpoints;
        else {
            lam.shape = Level::Shape::Explicit;
            lam.explicit_weights = fw;
        }
        Level eta;
        eta.base = M;
        eta.digits = F;
        eta.shape = Level::Shape::Uniform;
        lam_levels.push_back(std::move(lam));
        eta_levels.push_back(std::move(eta));
        cs.E.push_back(std::move(E));
        cs.F.push_back(std::move(F));
        cs.unique_sums.push_back(unique);
    }
    cs.lambda = MoranSystem::from_levels(mu.schedule(), std::move(lam_levels));
    cs.eta = MoranSystem::from_levels(mu.schedule(), std::move(eta_levels));
    return cs;
}

Int admissible_upto(const Int& K, std::size_t n, const ConvolvedSystem& cs) {
    if (sgn(K) < 0) return 0;
    const auto& P = cs.eta.prefix();
    std::vector<Int> suffix(n + 1, 1);  // suffix[i] = #F_{i+1} ... #F_n
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * static_cast<unsigned long>(cs.F[i].size());
    if (K >= P[n]) return suffix[0];
    std::vector<std::uint32_t> dg(n);
    Int rest = K;
    for (std::size_t i = n; i-- > 0;) dg[i] = static_cast<std::uint32_t>(mpz_fdiv_q_ui(rest.get_mpz_t(), rest.get_mpz_t(), cs.eta.bases()[i]));
    Int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& F = cs.F[i];
        const auto below = static_cast<unsigned long>(std::lower_bound(F.begin(), F.end(), dg[i]) - F.begin());
        total += suffix[i + 1] * below;
        if (!std::binary_search(F.begin(), F.end(), dg[i])) return total;
    }
    return total + 1;
}

BallMeasure ball_measure(const Rat& x, const Rat& r, const ConvolvedSystem& cs) {
    if (x < 0 || x > 1) fail(Errc::OutOfRange, "x must lie in [0, 1]");
    BallMeasure bm;
    bm.h = h_of_r(r, cs.eta.prefix());
    bm.level = bm.h + 1;
    const Int& P = cs.eta.prefix()[bm.level];
    Rat a = (x - r) * P, b = (x + r) * P;
    Int lo, hi;
    mpz_cdiv_q(lo.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    lo -= 1;
    mpz_fdiv_q(hi.get_mpz_t(), b.get_num_mpz_t(), b.get_den_mpz_t());
    if (lo < 0) lo = 0;
    if (hi > P - 1) hi = P - 1;
    bm.count = hi >= lo ? admissible_upto(hi, bm.level, cs) - admissible_upto(lo - 1, bm.level, cs) : Int(0);
    Rat rp = r * P;
    Int fl;
    mpz_fdiv_q(fl.get_mpz_t(), rp.get_num_mpz_t(), rp.get_den_mpz_t());
    bm.count_bound = 2 * (fl + 1);
    Int den = 1;
    for (std::size_t k = 0; k < bm.level; ++k) den *= static_cast<unsigned long>(cs.F[k].size());
    bm.per_interval = Rat(1, den);
    bm.value = Rat(bm.count, den);
    bm.value.canonicalize();
    Rat xp = x * P;
    Int k;
    mpz_fdiv_q(k.get_mpz_t(), xp.get_num_mpz_t(), xp.get_den_mpz_t());
    if (k > P - 1) k = P - 1;
    const bool admissible = admissible_upto(k, bm.level, cs) != admissible_upto(k - 1, bm.level, cs);
    bm.containing = admissible ? bm.per_interval : Rat(0);
    return bm;
}

std::vector<MassRow> mass_distribution(const ConvolvedSystem& cs, const std::vector<SamplePoint>& points,
                                       const std::vector<Rat>& r_grid, const GaugeFunction& phi, const Rat& C,
                                       unsigned workers) {
    if (C <= 0) fail(Errc::InvalidParameter, "constant must be positive");
    std::vector<MassRow> rows(points.size() * r_grid.size());
    auto one = [&](std::size_t idx) {
        const SamplePoint& p = points[idx / r_grid.size()];
        const Rat& r = r_grid[idx % r_grid.size()];
        BallMeasure bm = ball_measure(p.value, r, cs);
        MassRow& row = rows[idx];
        row.seed = p.seed;
        row.r = r;
        row.h = bm.h;
        row.ball = bm.value;
        const double lam = -log_rat(r);
        row.phi = std::exp(phi.log_phi(lam));
        const double lb = sgn(bm.value) ? log_rat(bm.value) : -std::numeric_limits<double>::infinity();
        const double rhs = log_rat(C) + phi.log_phi(lam);
        row.ratio = std::exp(lb - rhs);
        if (phi.kind == GaugeFunction::Kind::Power) {
            // ball^q <= C^q r^p with s = p/q.
            const unsigned long p_ = phi.s.get_num().get_ui(), q_ = phi.s.get_den().get_ui();
            row.exact = true;
            row.ok = pow_rat(bm.value, q_) <= pow_rat(C, q_) * pow_rat(r, p_);
        } else {
            row.ok = lb + 1e-9 * (1 + std::fabs(rhs)) <= rhs;
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) one(i);
        return rows;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < rows.size(); i += workers) one(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

LocalDimSeries local_dim_series(const SamplePoint& x, const MoranSystem& lambda, std::size_t depth, std::size_t burn_in) {
    if (depth > x.digits.size() || depth > lambda.levels()) fail(Errc::ScheduleTooShort, "depth exceeds the sample or schedule");
    LocalDimSeries s;
    long double num = 0, den = 0;
    s.final_min = std::numeric_limits<double>::quiet_NaN();
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= depth; ++n) {
        const Level& lv = lambda.level(n);
        const std::size_t i = lv.index_of(x.digits[n - 1]);
        if (i == Level::npos) fail(Errc::NotInSupport, "sample digit outside the digit set");
        num -= std::log(lv.weight_ld(i));
        den += std::log(static_cast<long double>(lambda.bases()[n - 1]));
        const double t = static_cast<double>(num / den);
        s.terms.push_back(t);
        if (n >= burn_in) {
            run = std::min(run, t);
            s.running_min.push_back(run);
            s.final_min = run;
        } else {
            s.running_min.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return s;
}

HRateReport h_rate_report(const MoranSystem& sys, const std::vector<Rat>& r_grid) {
    HRateReport rep;
    rep.cube_window = sys.schedule().variant == ScheduleVariant::CubeWindow;
    rep.band_lo = std::numeric_limits<double>::infinity();
    rep.band_hi = -std::numeric_limits<double>::infinity();
    for (const Rat& r : r_grid) {
        HRateRow row;
        row.r = r;
        row.h = h_of_r(r, sys);
        const double l = -log_rat(r);
        row.ratio = static_cast<double>(row.h) / l;
        row.band = std::log(l) > 0 ? row.h * std::log(l) / l : std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(row.band)) {
            rep.band_lo = std::min(rep.band_lo, row.band);
            rep.band_hi = std::max(rep.band_hi, row.band);
        }
        rep.rows.push_back(row);
    }
    // h_i / log a_i > h_{i+1} / log a_{i+1}  <=>  a_{i+1}^{h_i} > a_i^{h_{i+1}}, a = 1/r.
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
        Rat a0 = 1 / rep.rows[i].r, a1 = 1 / rep.rows[i + 1].r;
        if (!(pow_rat(a1, rep.rows[i].h) > pow_rat(a0, rep.rows[i + 1].h))) rep.strictly_decreasing = false;
    }
    return rep;
}

void write_mass_csv(std::ostream& os, const std::vector<MassRow>& rows) {
    os << "x_seed,r_num,r_den,h_r,ball_measure_num,ball_measure_den,phi_r,ratio\n" << std::setprecision(12);
    for (const auto& r : rows)
        os << r.seed << ',' << dec(r.r.get_num()) << ',' << dec(r.r.get_den()) << ',' << r.h << ','
           << dec(r.ball.get_num()) << ',' << dec(r.ball.get_den()) << ',' << r.phi << ',' << r.ratio << '\n';
}

void write_local_dim_csv(std::ostream& os, const LocalDimSeries& s) {
    os << "n,term,running_min\n" << std::setprecision(12);
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
        os << i + 1 << ',' << s.terms[i] << ',';
        if (!std::isnan(s.running_min[i])) os << s.running_min[i];
        os << '\n';
    }
}

void write_h_rate_csv(std::ostream& os, const HRateReport& rep) {
    os << "r_num,r_den,h_r,h_over_log,band\n" << std::setprecision(12);
    for (const auto& r : rep.rows) {
        os << dec(r.r.get_num()) << ',' << dec(r.r.get_den()) << ',' << r.h << ',' << r.ratio << ',';
        if (!std::isnan(r.band)) os << r.band;
        os << '\n';
    }
}

}  // namespace moran
