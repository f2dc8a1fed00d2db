#include "moran/fourier.hpp"

#include "moran/errors.hpp"
#include "moran/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace moran {

namespace {

constexpr long double kTwoPi = 6.283185307179586476925286766559005768L;
const long double kUlp = std::numeric_limits<long double>::epsilon();

bool same_structure(const Level& a, const Level& b) {
    return a.digits == b.digits && a.shape == b.shape && a.explicit_weights == b.explicit_weights;
}

// |M| at the residue r / P, with d r reduced mod P exactly for every digit d.
MaskValue mask_at(const Level& lv, const Int& r, const Int& P) {
    long double re = 0, im = 0, err = 0;
    const long double ratio_err = 4 * kUlp;
    const long double trig_err = kTwoPi * ratio_err + 8 * kUlp;
    Int dr;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        const std::uint32_t d = lv.digits[i];
        long double f = 0;
        if (d != 0 && sgn(r) != 0) {
            dr = r * d;
            mpz_fdiv_r(dr.get_mpz_t(), dr.get_mpz_t(), P.get_mpz_t());
            f = ratio_ld(dr, P);
        }
        const long double w = lv.weight_ld(i);
        const long double th = kTwoPi * f;
        re += w * std::cos(th);
        im -= w * std::sin(th);
        err += w * trig_err + ratio_err + 2 * kUlp;
    }
    MaskValue out;
    out.value = std::hypot(re, im);
    out.radius = 1.5L * err + 2 * kUlp;
    return out;
}

double round_down(long double v) {
    if (v <= 0) return 0;
    return static_cast<double>(v * (1 - 2 * static_cast<long double>(std::numeric_limits<double>::epsilon())));
}

double round_up(long double v) {
    double out = static_cast<double>(v * (1 + 2 * static_cast<long double>(std::numeric_limits<double>::epsilon())));
    return std::min(out, 1.0);
}

}  // namespace

Rat Level::weight(std::size_t idx) const {
    const std::size_t n = digits.size();
    switch (shape) {
        case Shape::Uniform: return Rat(1, static_cast<unsigned long>(n));
        case Shape::HalfEndpoints:
            if (idx == 0 || idx + 1 == n) return Rat(1, 2 * static_cast<unsigned long>(n - 1));
            return Rat(1, static_cast<unsigned long>(n - 1));
        case Shape::Explicit: return explicit_weights.at(idx);
    }
    return Rat(0);
}

long double Level::weight_ld(std::size_t idx) const {
    const long double n = static_cast<long double>(digits.size());
    switch (shape) {
        case Shape::Uniform: return 1.0L / n;
        case Shape::HalfEndpoints:
            if (idx == 0 || idx + 1 == digits.size()) return 1.0L / (2 * (n - 1));
            return 1.0L / (n - 1);
        case Shape::Explicit: {
            const Rat& w = explicit_weights.at(idx);
            if (w == 1) return 1.0L;
            return ratio_ld(w.get_num(), w.get_den());
        }
    }
    return 0;
}

bool Level::contains(std::uint32_t d) const { return index_of(d) != npos; }

std::size_t Level::index_of(std::uint32_t d) const {
    auto it = std::lower_bound(digits.begin(), digits.end(), d);
    if (it == digits.end() || *it != d) return npos;
    return static_cast<std::size_t>(it - digits.begin());
}

double Level::variance() const {
    long double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        long double w = weight_ld(i), d = digits[i];
        m1 += w * d;
        m2 += w * d * d;
    }
    return static_cast<double>(std::max(0.0L, m2 - m1 * m1));
}

MoranSystem MoranSystem::binary(const PrimeSchedule& s, const Rat& omega) {
    return binary(s, std::vector<Rat>(s.levels(), omega));
}

MoranSystem MoranSystem::binary(const PrimeSchedule& s, const std::vector<Rat>& omega) {
    if (omega.size() != s.levels()) fail(Errc::InvalidParameter, "one weight per level is required");
    std::vector<std::uint64_t> b = bases_of(s);
    std::vector<Level> lv(s.levels());
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (!(omega[i] > 0 && omega[i] < 1)) fail(Errc::InvalidParameter, "binary weights need 0 < omega < 1");
        lv[i].base = b[i];
        lv[i].digits = {0, 1};
        lv[i].shape = Level::Shape::Explicit;
        lv[i].explicit_weights = {omega[i], 1 - omega[i]};
    }
    return from_levels(s, std::move(lv));
}

MoranSystem MoranSystem::from_levels(const PrimeSchedule& s, std::vector<Level> levels) {
    if (levels.size() != s.levels()) fail(Errc::InvalidParameter, "one digit set per schedule level is required");
    std::vector<std::uint64_t> b = bases_of(s);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        Level& lv = levels[i];
        if (lv.base == 0) lv.base = b[i];
        if (lv.base != b[i]) fail(Errc::InvalidParameter, "level base differs from schedule");
        if (lv.digits.empty()) fail(Errc::InvalidParameter, "empty digit set");
        for (std::size_t k = 0; k < lv.digits.size(); ++k) {
            if (lv.digits[k] >= lv.base) fail(Errc::InvalidParameter, "digit not below its base");
            if (k && lv.digits[k] <= lv.digits[k - 1]) fail(Errc::InvalidParameter, "digits must be strictly increasing");
        }
        if (lv.shape == Level::Shape::HalfEndpoints && lv.digits.size() < 2)
            fail(Errc::InvalidParameter, "endpoint weights need two digits");
        if (lv.shape == Level::Shape::Explicit) {
            if (lv.explicit_weights.size() != lv.digits.size()) fail(Errc::InvalidParameter, "weight count mismatch");
            Rat sum = 0;
            for (Rat& w : lv.explicit_weights) {
                w.canonicalize();
                if (w <= 0) fail(Errc::InvalidParameter, "weights must be positive");
                sum += w;
            }
            if (sum != 1) fail(Errc::InvalidParameter, "weights must sum to 1");
        }
    }
    MoranSystem sys;
    sys.schedule_ = s;
    sys.bases_ = std::move(b);
    sys.levels_ = std::move(levels);
    sys.finish();
    return sys;
}

void MoranSystem::finish() {
    prefix_ = prefix_products(bases_);
    binary_ = true;
    max_variance_ = 0;
    for (const Level& lv : levels_) {
        max_variance_ = std::max(max_variance_, lv.variance());
        if (!(lv.digits == std::vector<std::uint32_t>{0, 1})) binary_ = false;
    }
    if (binary_) {
        inf_omega_ = levels_[0].weight(0);
        sup_omega_ = inf_omega_;
        for (const Level& lv : levels_) {
            Rat w = lv.weight(0);
            if (w < inf_omega_) inf_omega_ = w;
            if (w > sup_omega_) sup_omega_ = w;
        }
    }
}

Rat MoranSystem::max_digit_ratio() const {
    Rat best = 0;
    for (const Level& lv : levels_) {
        Rat r(lv.digits.back(), static_cast<unsigned long>(lv.base));
        r.canonicalize();
        if (r > best) best = r;
    }
    return best;
}

long double ratio_ld(const Int& a, const Int& b) {
    const std::size_t bits = mpz_sizeinbase(b.get_mpz_t(), 2);
    if (bits <= 64) return static_cast<long double>(to_u64(a)) / static_cast<long double>(to_u64(b));
    Int A, B;
    mpz_tdiv_q_2exp(A.get_mpz_t(), a.get_mpz_t(), bits - 64);
    mpz_tdiv_q_2exp(B.get_mpz_t(), b.get_mpz_t(), bits - 64);
    return static_cast<long double>(to_u64(A)) / static_cast<long double>(to_u64(B));
}

MaskValue mask_modulus(std::size_t n, const Rat& t, const MoranSystem& sys) {
    if (n == 0 || n > sys.levels()) fail(Errc::OutOfRange, "level outside the system");
    Int r = mod_nonneg(t.get_num(), t.get_den());
    return mask_at(sys.level(n), r, t.get_den());
}

CertifiedModulus mu_hat_modulus(const Int& xi, const MoranSystem& sys, double eps) {
    if (!(eps > 0)) fail(Errc::InvalidParameter, "eps must be positive");
    CertifiedModulus out;
    if (sgn(xi) == 0) return out;
    const Int X = abs(xi);
    const auto& P = sys.prefix();
    const auto& M = sys.bases();
    const long double pi2 = kTwoPi * kTwoPi / 4;
    const long double s2 = sys.max_variance();
    const long double logX = log_int(X);
    long double lo = 1, hi = 1;
    Int r;
    for (std::size_t n = 0;; ++n) {
        // Tail over levels n+1, n+2, ...: each factor is at least exp(-8 pi^2 s2 t^2) while
        // 4 pi^2 s2 t^2 <= 1/2, and t shrinks by a factor 7 or more per level.
        const long double next = n < sys.levels() ? static_cast<long double>(M[n]) : 7.0L;
        const long double lt = logX - log_int(P[n]) - std::log(next);
        const long double t2 = std::exp(2 * lt);
        if (4 * pi2 * s2 * t2 <= 0.5L) {
            const long double tail = -8 * pi2 * s2 * t2 * (49.0L / 48.0L) * (1 + 1e-9L);
            const long double lo_tot = lo * std::exp(tail);
            if (hi - lo_tot <= eps * (1 - 1e-9)) {
                out.lo = round_down(lo_tot);
                out.hi = round_up(hi);
                out.truncation_level = n;
                out.tail_bound_log = static_cast<double>(tail);
                return out;
            }
        }
        if (hi <= eps * (1 - 1e-9)) {
            out.lo = 0;
            out.hi = round_up(hi);
            out.truncation_level = n;
            out.tail_bound_log = -std::numeric_limits<double>::infinity();
            return out;
        }
        if (n == sys.levels()) break;
        mpz_fdiv_r(r.get_mpz_t(), X.get_mpz_t(), P[n + 1].get_mpz_t());
        MaskValue mv = mask_at(sys.level(n + 1), r, P[n + 1]);
        lo *= std::max(0.0L, mv.value - mv.radius) * (1 - 2 * kUlp);
        hi = std::min(1.0L, hi * std::min(1.0L, mv.value + mv.radius) * (1 + 2 * kUlp));
    }
    fail(Errc::TailNotCertifiable, "schedule exhausted before the interval width reached eps");
}

std::vector<CertifiedModulus> mu_hat_batch(const std::vector<Int>& xis, const MoranSystem& sys, double eps,
                                           unsigned workers) {
    std::vector<CertifiedModulus> out(xis.size());
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, xis.size()))));
    if (workers == 1) {
        for (std::size_t i = 0; i < xis.size(); ++i) out[i] = mu_hat_modulus(xis[i], sys, eps);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < xis.size(); i += workers) out[i] = mu_hat_modulus(xis[i], sys, eps);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::size_t middle_third_count(const Int& xi, const MoranSystem& sys) {
    const auto& M = sys.bases();
    Int X = mod_nonneg(abs(xi), sys.prefix().back());
    MixedRadixDigits dg = to_digits(X, M, M.size());
    std::size_t w = 0, i = 0;
    while (i < M.size()) {
        std::size_t j = i;
        while (j < M.size() && M[j] == M[i]) ++j;
        w += kernels::count_in_range(dg.digits.data() + i, j - i, window_lo(M[i]), window_hi(M[i]));
        i = j;
    }
    return w;
}

double sharper_grid_sup(const MoranSystem& sys) {
    double best = 0;
    const Level* prev = nullptr;
    for (std::size_t n = 1; n <= sys.levels(); ++n) {
        const Level& lv = sys.level(n);
        if (prev && same_structure(*prev, lv)) continue;
        prev = &lv;
        for (int i = 0; i < 1024; ++i) {
            long double t = 1.0L / 6 + (2.0L / 3) * i / 1023;
            long double re = 0, im = 0;
            for (std::size_t k = 0; k < lv.size(); ++k) {
                long double th = kTwoPi * lv.digits[k] * t;
                re += lv.weight_ld(k) * std::cos(th);
                im -= lv.weight_ld(k) * std::sin(th);
            }
            best = std::max(best, static_cast<double>(std::hypot(re, im)));
        }
    }
    return best;
}

DecayBound digit_decay_bound(const Int& xi, const MoranSystem& sys, const BaseContext& ctx) {
    DecayBound out;
    if (sys.is_binary()) {
        if (sys.inf_omega() >= ctx.weights.C && sys.sup_omega() <= ctx.weights.D) {
            out.gamma = ctx.gamma;
        } else {
            out.gamma = std::sqrt(1.0 - Rat(sys.inf_omega() * (1 - sys.sup_omega())).get_d());
        }
    } else {
        out.gamma = sharper_grid_sup(sys);
        if (!(out.gamma < 1)) {
            out.emitted = false;
            out.gamma = 1;
        }
    }
    out.w = middle_third_count(xi, sys);
    out.bound = std::pow(out.gamma, static_cast<double>(out.w));
    return out;
}

void write_fourier_csv(std::ostream& os, const std::vector<Int>& xis, const std::vector<CertifiedModulus>& mods,
                       const std::vector<DecayBound>& decay) {
    os << "xi,lo,hi,truncation_level,w,gamma_pow_w\n";
    os.precision(17);
    for (std::size_t i = 0; i < xis.size(); ++i) {
        os << dec(xis[i]) << ',' << mods[i].lo << ',' << mods[i].hi << ',' << mods[i].truncation_level << ',';
        if (i < decay.size() && decay[i].emitted) os << decay[i].w << ',' << decay[i].bound;
        else os << ",";
        os << '\n';
    }
}

}  // namespace moran
