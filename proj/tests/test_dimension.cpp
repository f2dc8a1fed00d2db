#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moran/dimension.hpp"
#include "moran/errors.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace moran;

namespace {

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::InvalidParameter;
}

MoranSystem binary(std::size_t count, const Rat& w = Rat(1, 2)) {
    return MoranSystem::binary(build_schedule(1, count, ScheduleVariant::NthPrimeFrom7), w);
}

// Level-n intervals [k/P, (k+1)/P] with admissible digits that meet [x - r, x + r], by enumeration.
std::uint64_t brute_count(const Rat& x, const Rat& r, std::size_t n, const ConvolvedSystem& cs) {
    const Int& P = cs.eta.prefix()[n];
    std::uint64_t c = 0;
    for (std::uint64_t k = 0; k < to_u64(P); ++k) {
        std::uint64_t rest = k;
        bool ok = true;
        for (std::size_t i = n; i-- > 0;) {
            const auto d = static_cast<std::uint32_t>(rest % cs.eta.bases()[i]);
            rest /= cs.eta.bases()[i];
            ok = ok && std::binary_search(cs.F[i].begin(), cs.F[i].end(), d);
        }
        if (!ok) continue;
        Rat a(to_int_u(k), P), b(to_int_u(k + 1), P);
        a.canonicalize();
        b.canonicalize();
        if (b >= x - r && a <= x + r) ++c;
    }
    return c;
}

}  // namespace

TEST_CASE("h_of_r examples") {
    auto s = schedule_from_primes({7, 11}, {2, 1});  // bases 7, 7, 11
    auto sys = MoranSystem::binary(s, Rat(1, 2));
    CHECK(h_of_r(Rat(1, 100), sys) == 2);
    CHECK(h_of_r(Rat(1, 7), sys) == 1);
    CHECK(h_of_r(Rat(1, 49), sys) == 2);
    CHECK(h_of_r(Rat(1, 50), sys) == 2);
    CHECK(code_of([&] { h_of_r(Rat(1, 2), sys); }) == Errc::OutOfRange);
    CHECK(code_of([&] { h_of_r(Rat(1, 539), sys); }) == Errc::ScheduleTooShort);
}

TEST_CASE("h_of_r sandwich on random rationals") {
    auto sys = binary(6);
    const auto& P = sys.prefix();
    std::mt19937_64 rng(61);
    for (int it = 0; it < 2000; ++it) {
        Rat r(1 + rng() % 1000, to_int_u(7 + rng() % 100000000));
        r.canonicalize();
        if (r > Rat(1, 7)) continue;
        const std::size_t h = h_of_r(r, sys);
        REQUIRE(Rat(1) / Rat(P[h + 1]) < r);
        REQUIRE(r <= Rat(1) / Rat(P[h]));
    }
}

TEST_CASE("dim-one construction") {
    auto mu = binary(8);
    auto cs = build_convolved(mu, ConvolvedVariant::DimOne);
    REQUIRE(cs.levels() == mu.levels());
    CHECK(cs.E[0] == std::vector<std::uint32_t>{0, 2});
    CHECK(cs.F[0] == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK(cs.lambda.level(1).weight(0) == Rat(1, 4));
    CHECK(cs.lambda.level(1).weight(3) == Rat(1, 4));
    for (std::size_t n = 1; n <= cs.levels(); ++n) {
        const std::uint64_t M = mu.bases()[n - 1];
        REQUIRE(cs.in_N[n - 1]);
        REQUIRE(cs.unique_sums[n - 1]);
        REQUIRE(cs.E[n - 1].back() == 2 * (M / 4));
        // (a_n + 1)/M_n <= 1/2 + 1/7 < 5/6
        const Rat ratio = oracle::ratio(cs.F[n - 1].back(), M);
        REQUIRE(ratio <= Rat(1, 2) + Rat(1, 7));
        REQUIRE(ratio < Rat(5, 6));
        Rat sum = 0;
        for (std::size_t i = 0; i < cs.F[n - 1].size(); ++i) sum += cs.lambda.level(n).weight(i);
        REQUIRE(sum == 1);
    }
}

TEST_CASE("gauge construction off the sparse set") {
    auto mu = binary(8);
    auto cs = build_convolved(mu, ConvolvedVariant::Gauge, GaugeFunction::r_log_power(1));
    REQUIRE(cs.sparse.has_value());
    bool saw_eleven = false;
    for (std::size_t n = 1; n <= cs.levels(); ++n) {
        const std::uint64_t M = mu.bases()[n - 1];
        const Level& lv = cs.lambda.level(n);
        Rat sum = 0;
        for (std::size_t i = 0; i < lv.size(); ++i) sum += lv.weight(i);
        REQUIRE(sum == 1);
        if (cs.in_N[n - 1]) {
            REQUIRE(cs.E[n - 1].back() == 2 * (M / 4));
            REQUIRE(cs.unique_sums[n - 1]);
            continue;
        }
        REQUIRE(cs.F[n - 1].size() == M);
        REQUIRE(lv.weight(0) == Rat(1, 2 * (M - 1)));
        REQUIRE(lv.weight(M - 1) == Rat(1, 2 * (M - 1)));
        for (std::uint32_t d = 1; d + 1 < M; ++d) REQUIRE(lv.weight(d) == Rat(1, M - 1));
        // Direct convolution of (1/2, 1/2) on {0,1} with uniform on {0..M-2}.
        for (std::uint32_t f = 0; f < M; ++f) {
            Rat w = 0;
            if (f <= M - 2) w += Rat(1, 2 * (M - 1));
            if (f >= 1) w += Rat(1, 2 * (M - 1));
            REQUIRE(lv.weight(f) == w);
        }
        if (M == 11) {
            saw_eleven = true;
            CHECK(lv.weight(0) == Rat(1, 20));
            CHECK(lv.weight(5) == Rat(1, 10));
        }
    }
    CHECK(saw_eleven);
}

TEST_CASE("extreme construction") {
    auto mu = MoranSystem::binary(build_schedule(1, 4, ScheduleVariant::CubeWindow, 3), Rat(1, 2));
    auto cs = build_convolved(mu, ConvolvedVariant::Extreme, GaugeFunction::r_log_power(2), 0.1);
    for (std::size_t n = 1; n <= cs.levels(); ++n) {
        const std::uint64_t M = mu.bases()[n - 1];
        REQUIRE(cs.unique_sums[n - 1]);
        if (!cs.in_N[n - 1]) {
            REQUIRE(cs.E[n - 1].back() == M - 3);
            REQUIRE(cs.F[n - 1].back() == M - 2);
        }
    }
}

TEST_CASE("convolution support decomposes uniquely where claimed") {
    auto mu = binary(10);
    for (auto v : {ConvolvedVariant::DimOne, ConvolvedVariant::Gauge}) {
        auto cs = build_convolved(mu, v, GaugeFunction::r_log_power(1));
        for (std::size_t n = 1; n <= cs.levels(); ++n) {
            std::map<std::uint32_t, int> ways;
            for (std::uint32_t d : {0u, 1u})
                for (auto e : cs.E[n - 1]) ++ways[d + e];
            std::vector<std::uint32_t> F;
            bool unique = true;
            for (auto [f, c] : ways) {
                F.push_back(f);
                unique = unique && c == 1;
            }
            REQUIRE(F == cs.F[n - 1]);
            REQUIRE(unique == cs.unique_sums[n - 1]);
            if (cs.in_N[n - 1]) REQUIRE(unique);
        }
    }
    CHECK_THROWS_AS(build_convolved(mu, ConvolvedVariant::Gauge), Error);
}

TEST_CASE("sparse index sets") {
    auto mu = binary(12);
    auto lg = sparse_index_set(GaugeFunction::r_log_power(1), mu, mu.levels());
    CHECK(lg.certified);
    CHECK(lg.worst_margin >= 0);
    CHECK(lg.indices.size() >= 2);
    CHECK(lg.indices.size() < mu.levels() / 4);
    for (std::size_t i = 1; i < lg.indices.size(); ++i) CHECK(lg.indices[i] > lg.indices[i - 1]);

    auto ex = sparse_index_set(GaugeFunction::from_log_g([](double l) { return std::exp(l) * std::log(2.0); }, "2^(1/r)"),
                               mu, mu.levels());
    CHECK(ex.certified);
    // Faster growth reaches every threshold at a smaller radius-index.
    CHECK(ex.indices.front() <= lg.indices.front());
    CHECK(ex.lambda_k.front() <= lg.lambda_k.front());

    CHECK(code_of([&] { sparse_index_set(GaugeFunction::from_log_g([](double) { return 3.0; }, "bounded"), mu, 20); }) ==
          Errc::GaugeTooSmall);
    CHECK(code_of([&] { build_convolved(mu, ConvolvedVariant::Gauge, GaugeFunction::power(Rat(1))); }) ==
          Errc::GaugeTooSmall);
}

TEST_CASE("sparse set certificate re-checked independently") {
    auto mu = binary(14);
    for (double c : {1.0, 2.0, 0.5}) {
        auto S = sparse_index_set(GaugeFunction::r_log_power(c), mu, mu.levels());
        REQUIRE(S.certified);
        // 2^{#A_r} <= g(r) on every listed grid point, with A_r = [1 : h(r)+1] cap N.
        for (const Rat& r : S.grid) {
            const std::size_t h = h_of_r(r, mu);
            std::size_t A = 0;
            for (auto n : S.indices) A += n <= h + 1;
            REQUIRE(static_cast<double>(A) * std::log(2.0) <= c * std::log(-log_rat(r)) + 1e-12);
        }
    }
}

TEST_CASE("admissible counts against enumeration") {
    auto mu = MoranSystem::binary(schedule_from_primes({7, 11, 13}, {1, 1, 1}), Rat(1, 2));
    auto cs = build_convolved(mu, ConvolvedVariant::DimOne);
    for (std::size_t n = 1; n <= 3; ++n) {
        const std::uint64_t P = to_u64(cs.eta.prefix()[n]);
        std::uint64_t running = 0;
        for (std::uint64_t k = 0; k < P; ++k) {
            std::uint64_t rest = k;
            bool ok = true;
            for (std::size_t i = n; i-- > 0;) {
                ok = ok && std::binary_search(cs.F[i].begin(), cs.F[i].end(), static_cast<std::uint32_t>(rest % cs.eta.bases()[i]));
                rest /= cs.eta.bases()[i];
            }
            running += ok;
            REQUIRE(admissible_upto(to_int_u(k), n, cs) == running);
        }
        REQUIRE(admissible_upto(-1, n, cs) == 0);
        REQUIRE(admissible_upto(to_int_u(P + 5), n, cs) == running);
    }
}

TEST_CASE("ball measure") {
    auto mu = MoranSystem::binary(schedule_from_primes({7, 11, 13, 17}, {1, 1, 1, 1}), Rat(1, 2));
    auto cs = build_convolved(mu, ConvolvedVariant::DimOne);
    std::mt19937_64 rng(62);
    for (int it = 0; it < 400; ++it) {
        const std::size_t depth = 4;
        Int num = 0;
        for (std::size_t n = 0; n < depth; ++n) {
            const auto& F = cs.F[n];
            num = num * static_cast<unsigned long>(cs.eta.bases()[n]) + F[rng() % F.size()];
        }
        Rat x(num, cs.eta.prefix()[depth]);
        x.canonicalize();
        const std::size_t h = 1 + rng() % 2;
        const Int& P = cs.eta.prefix()[h + 1];
        // r in (1/P_{h+1}, 1/P_h].
        Rat r = Rat(1) / Rat(P) + oracle::ratio(1 + rng() % 1000, 1000) * (Rat(1) / Rat(cs.eta.prefix()[h]) - Rat(1) / Rat(P));
        r.canonicalize();
        auto bm = ball_measure(x, r, cs);
        REQUIRE(bm.h == h);
        REQUIRE(bm.count == brute_count(x, r, h + 1, cs));
        const Rat twice = 2 * r * P;
        Int fl2 = twice.get_num() / twice.get_den();
        REQUIRE(bm.count <= fl2 + 2);
        REQUIRE(bm.count <= bm.count_bound + 1);
        REQUIRE(bm.value >= bm.containing);
        REQUIRE(bm.containing == bm.per_interval);
        REQUIRE(bm.value == Rat(bm.count) * bm.per_interval);
        REQUIRE(bm.value <= 4 * r * P * bm.per_interval);

        // A ball slightly wider than one interval meets at most 4 of them.
        Rat r1 = (Rat(1) / Rat(P)) * Rat(P + 1, P);
        auto b1 = ball_measure(x, r1, cs);
        REQUIRE(b1.h == h);
        REQUIRE(b1.value <= 4 * b1.per_interval);
    }
    CHECK(code_of([&] { ball_measure(Rat(3, 2), Rat(1, 100), cs); }) == Errc::OutOfRange);
}

TEST_CASE("mass distribution on the dim-one and gauge systems") {
    auto mu = binary(14);
    auto d1 = build_convolved(mu, ConvolvedVariant::DimOne);
    auto pts = sample_batch(d1.eta, 5, 8, 60);
    std::vector<Rat> grid;
    for (int k = 3; k <= 120; k += 9) grid.push_back(Rat(1) / Rat(pow_int(2, k)));
    auto rows = mass_distribution(d1, pts, grid, GaugeFunction::power(Rat(1, 2)), Rat(8));
    for (const auto& row : rows) {
        REQUIRE(row.exact);
        REQUIRE(row.ok);
        // eta(B)^2 <= 64 r, re-checked.
        REQUIRE(row.ball * row.ball <= 64 * row.r);
    }
    auto g = build_convolved(mu, ConvolvedVariant::Gauge, GaugeFunction::r_log_power(1));
    auto gp = sample_batch(g.eta, 6, 8, 60);
    auto grows = mass_distribution(g, gp, grid, GaugeFunction::r_log_power(1), Rat(4), 3);
    for (const auto& row : grows) {
        REQUIRE_FALSE(row.exact);
        REQUIRE(row.ok);
        REQUIRE(row.ratio <= 1.0);
    }
    std::ostringstream os;
    write_mass_csv(os, grows);
    CHECK(os.str().rfind("x_seed,r_num,r_den,h_r,ball_measure_num,ball_measure_den,phi_r,ratio\n", 0) == 0);
}

TEST_CASE("Fourier domination") {
    auto mu = binary(9);
    auto cs = build_convolved(mu, ConvolvedVariant::DimOne);
    auto gs = build_convolved(mu, ConvolvedVariant::Gauge, GaugeFunction::r_log_power(1));
    std::mt19937_64 rng(63);
    for (int it = 0; it < 300; ++it) {
        Int xi = (to_int_u(rng()) << 64) + to_int_u(rng());
        auto m = mu_hat_modulus(xi, mu, 1e-10);
        REQUIRE(mu_hat_modulus(xi, cs.lambda, 1e-10).lo <= m.hi);
        REQUIRE(mu_hat_modulus(xi, gs.lambda, 1e-10).lo <= m.hi);
    }
}

TEST_CASE("local dimension series") {
    auto s = schedule_from_primes({7, 11}, {1, 1});
    std::vector<Level> one;
    for (auto M : bases_of(s)) one.push_back(Level{M, {0}, Level::Shape::Uniform, {}});
    auto point = MoranSystem::from_levels(s, one);
    auto p0 = sample_point(point, 1, 2);
    auto z = local_dim_series(p0, point, 2, 1);
    CHECK(z.terms == std::vector<double>{0.0, 0.0});
    CHECK(z.final_min == 0);

    auto mu = binary(10);
    auto cs = build_convolved(mu, ConvolvedVariant::DimOne);
    auto p = sample_point(cs.lambda, 9, cs.levels());
    auto series = local_dim_series(p, cs.lambda, cs.levels(), 20);
    double num = 0, den = 0;
    for (std::size_t n = 1; n <= cs.levels(); ++n) {
        num += std::log(static_cast<double>(cs.F[n - 1].size()));
        den += std::log(static_cast<double>(mu.bases()[n - 1]));
        REQUIRE(std::abs(series.terms[n - 1] - num / den) < 1e-12);
        if (n < 20) REQUIRE(std::isnan(series.running_min[n - 1]));
        else REQUIRE(series.running_min[n - 1] <= series.terms[n - 1]);
    }
    std::ostringstream os;
    write_local_dim_csv(os, series);
    CHECK(os.str().rfind("n,term,running_min\n1,", 0) == 0);

    auto big = sample_point(mu, 3, mu.levels());
    CHECK_THROWS_AS(local_dim_series(big, cs.lambda, mu.levels() + 1), Error);
}

TEST_CASE("h rate report") {
    auto mu = binary(10);
    std::vector<Rat> grid;
    for (std::size_t k = 1; k <= 30; ++k) grid.push_back(Rat(1) / Rat(mu.prefix()[k]));
    auto rep = h_rate_report(mu, grid);
    CHECK(rep.strictly_decreasing);
    CHECK_FALSE(rep.cube_window);
    for (std::size_t k = 1; k <= 30; ++k) CHECK(rep.rows[k - 1].h == k);
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) CHECK(rep.rows[i].ratio > rep.rows[i + 1].ratio);

    auto single = h_rate_report(mu, {Rat(1, 100)});
    CHECK(single.rows.size() == 1);
    CHECK(single.strictly_decreasing);

    auto cw = MoranSystem::binary(build_schedule(1, 4, ScheduleVariant::CubeWindow, 3), Rat(1, 2));
    std::vector<Rat> g2;
    for (std::size_t k = 1; k <= cw.levels() - 1; ++k) g2.push_back(Rat(1) / Rat(cw.prefix()[k]));
    auto band = h_rate_report(cw, g2);
    CHECK(band.cube_window);
    CHECK(std::isfinite(band.band_lo));
    CHECK(band.band_lo > 0);
    CHECK(band.band_hi < 2);
    std::ostringstream os;
    write_h_rate_csv(os, band);
    CHECK(os.str().rfind("r_num,r_den,h_r,h_over_log,band\n", 0) == 0);
}

TEST_CASE("gauge functions") {
    auto p = GaugeFunction::power(Rat(1, 2));
    CHECK(std::abs(p.log_phi(10) + 5) < 1e-12);
    auto l = GaugeFunction::r_log_power(1);
    CHECK(std::abs(l.log_g(std::exp(2.0)) - 2) < 1e-12);
    CHECK(log_H(1, 1.0) == 0);
    CHECK(std::abs(log_H(2, 100) - 2 * std::pow(100 / std::log(100.0), 0.25)) < 1e-12);
    auto adj = l.h_adjusted(0.5);
    CHECK(std::abs(adj.log_g(100) - (std::log(100.0) - log_H(0.5, 100))) < 1e-12);
    CHECK_THROWS_AS(GaugeFunction::power(Rat(0)), Error);
}
