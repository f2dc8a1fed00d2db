#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moran/errors.hpp"
#include "moran/measure.hpp"

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

}  // namespace

TEST_CASE("counter-based generator test vectors") {
    CHECK(splitmix64(0, 0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(0, 1) == 0x6e789e6aa1b965f4ULL);
    CHECK(splitmix64(0, 2) == 0x06c45d188009454fULL);
    CHECK(splitmix64(42, 0) == 0xbdd732262feb6e95ULL);
    CHECK(splitmix64(42, 7) == 0xccf635ee9e9e2fa4ULL);
    CHECK(splitmix64(~0ULL, 3) == 0x6d1db36ccba982d2ULL);
}

TEST_CASE("sample examples") {
    auto s = schedule_from_primes({7, 11}, {1, 1});
    std::vector<Level> zero;
    for (auto M : bases_of(s)) zero.push_back(Level{M, {0}, Level::Shape::Uniform, {}});
    auto point = MoranSystem::from_levels(s, zero);
    auto p = sample_point(point, 99, 2);
    CHECK(p.value == 0);
    CHECK(p.digits == std::vector<std::uint32_t>{0, 0});

    auto sys = binary(6);
    auto a = sample_point(sys, 1234, 15), b = sample_point(sys, 1234, 15);
    CHECK(a.digits == b.digits);
    CHECK(a.value == b.value);
    CHECK(a.seed == 1234);
    CHECK(a.depth == 15);
    CHECK(code_of([&] { sample_point(sys, 0, sys.levels() + 1); }) == Errc::ScheduleTooShort);

    // digits (1, 1) over bases 7, 11.
    Rat v = Rat(1, 7) + Rat(1, 77);
    CHECK(v == Rat(12, 77));
}

TEST_CASE("sampled points: support, exact value, denominator") {
    for (Rat w : {Rat(1, 2), Rat(1, 5)}) {
        auto sys = binary(8, w);
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const std::size_t depth = 1 + seed % sys.levels();
            auto p = sample_point(sys, seed, depth);
            REQUIRE(p.digits.size() == depth);
            Rat v = 0;
            for (std::size_t n = 1; n <= depth; ++n) {
                REQUIRE(sys.level(n).contains(p.digits[n - 1]));
                v += Rat(p.digits[n - 1]) / Rat(sys.prefix()[n]);
            }
            REQUIRE(v == p.value);
            REQUIRE(p.value >= 0);
            REQUIRE(p.value < 1);
            REQUIRE(sys.prefix()[depth] % p.value.get_den() == 0);
        }
    }
}

TEST_CASE("digit draws follow the weights") {
    auto sys = binary(20, Rat(1, 3));
    std::size_t zeros = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto p = sample_point(sys, seed, sys.levels());
        for (auto d : p.digits) zeros += d == 0;
        total += p.digits.size();
    }
    const double f = static_cast<double>(zeros) / total;
    CHECK(std::abs(f - 1.0 / 3) < 0.01);
}

TEST_CASE("batch seeds are seed xor index, independent of workers") {
    auto sys = binary(6);
    auto a = sample_batch(sys, 77, 40, 12, 1), b = sample_batch(sys, 77, 40, 12, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].value == b[i].value);
        REQUIRE(a[i].seed == (77 ^ i));
        REQUIRE(a[i].digits == sample_point(sys, 77 ^ i, 12).digits);
    }
}

TEST_CASE("base digit examples") {
    auto h = base_digits(Rat(1, 2), 2, 5, 0, Int(1) << 20);
    CHECK(h.digits == std::vector<std::uint8_t>{1, 0, 0, 0, 0});
    auto d = base_digits(Rat(12, 77), 10, 4);
    CHECK(d.digits == std::vector<std::uint8_t>{1, 5, 5, 8});
    CHECK(d.trusted_count == 0);  // floor(log10 77) - 8 < 0
    auto t = base_digits(Rat(1, 3), 3, 4, 0, Int(81));
    CHECK(t.digits == std::vector<std::uint8_t>{1, 0, 0, 0});
    CHECK(t.trusted_count == 4);
    auto c = base_digits(Rat(1, 7), 10, 12, 8, to_int_u(1000000000000ULL));
    CHECK(c.trusted_count == 4);
    CHECK(c.digits == std::vector<std::uint8_t>{1, 4, 2, 8, 5, 7, 1, 4, 2, 8, 5, 7});
    auto x = base_digits(Rat(35, 36), 36, 2, 0, Int(36 * 36));
    CHECK(x.digits == std::vector<std::uint8_t>{35, 0});
    CHECK(code_of([] { base_digits(Rat(1), 2, 3); }) == Errc::InvalidParameter);
}

TEST_CASE("normality report examples") {
    // 1/3 = 0.010101... in base 2.
    auto r = normality_report(Rat(1, 3), 2, 0, Int(1) << 40);
    CHECK(r.trusted_digit_count == 40);
    CHECK(r.frequencies[0] == Rat(1, 2));
    CHECK(r.frequencies[1] == Rat(1, 2));
    CHECK(r.max_deviation == 0);
    CHECK(r.periodic);
    CHECK(r.period == 2);

    for (unsigned b : {2u, 3u, 10u}) {
        auto z = normality_report(Rat(0), b, 8, Int(1) << 100);
        CHECK(z.trusted_digit_count > 0);
        CHECK(z.counts[0] == z.trusted_digit_count);
        CHECK(std::abs(z.max_deviation - (b - 1.0) / b) < 1e-15);
        CHECK(z.period == 1);
    }
}

TEST_CASE("normality report: frequencies sum to one, independent counts") {
    auto sys = binary(20);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = sample_point(sys, seed, sys.levels());
        for (unsigned b : {2u, 3u, 10u}) {
            auto r = normality_report(p.value, b, 8, sys.prefix()[p.depth]);
            Rat sum = 0;
            for (auto& f : r.frequencies) sum += f;
            REQUIRE(sum == 1);
            REQUIRE(r.trusted_digit_count + 8 == floor_log(sys.prefix()[p.depth], b));
            // Long division digit by digit.
            std::vector<std::uint64_t> counts(b, 0);
            Int num = p.value.get_num();
            const Int& den = p.value.get_den();
            std::vector<std::uint64_t> bins(64, 0);
            for (std::size_t k = 0; k < r.trusted_digit_count; ++k) {
                Int cell = num * 64 / den;
                ++bins[cell.get_ui()];
                num *= b;
                Int d = num / den;
                num -= d * den;
                ++counts[d.get_ui()];
            }
            REQUIRE(counts == r.counts);
            double disc = 0;
            std::uint64_t below = 0;
            for (unsigned a = 1; a <= 64; ++a) {
                below += bins[a - 1];
                disc = std::max(disc, std::fabs(static_cast<double>(below) / r.trusted_digit_count - a / 64.0));
            }
            REQUIRE(disc == r.discrepancy);
        }
    }
}

TEST_CASE("truncation honesty") {
    auto sys = binary(16);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto p = sample_point(sys, seed * 7919 + 1, sys.levels());
        const Int& P = sys.prefix()[p.depth];
        const Rat y = p.value + Rat(1) / Rat(P);
        if (y >= 1) continue;
        for (unsigned b : {2u, 3u, 10u}) {
            const std::size_t count = floor_log(P, b);
            auto a = base_digits(p.value, b, count, 8, P), c = base_digits(y, b, count, 8, P);
            REQUIRE(a.trusted_count == c.trusted_count);
            const bool same = std::equal(a.digits.begin(), a.digits.begin() + a.trusted_count, c.digits.begin());
            CHECK_MESSAGE(same, "seed " << p.seed << " base " << b);
        }
    }
}

TEST_CASE("honesty breaks only through carry chains longer than the guard") {
    auto sys = binary(16);
    std::size_t breaks = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto p = sample_point(sys, seed * 7919 + 1, sys.levels());
        const Int& P = sys.prefix()[p.depth];
        const Rat y = p.value + Rat(1) / Rat(P);
        if (y >= 1) continue;
        for (unsigned b : {2u, 3u, 10u}) {
            const std::size_t count = floor_log(P, b);
            auto a = base_digits(p.value, b, count, 8, P), c = base_digits(y, b, count, 8, P);
            if (std::equal(a.digits.begin(), a.digits.begin() + a.trusted_count, c.digits.begin())) continue;
            ++breaks;
            // x sits just below a b-adic boundary: every guard digit of x is b - 1.
            for (std::size_t k = a.trusted_count; k < a.trusted_count + 8; ++k) REQUIRE(a.digits[k] == b - 1);
        }
    }
    // Each sample breaks with probability below b^-8.
    CHECK(breaks <= 10);
}

TEST_CASE("uniqueness examples") {
    auto s = schedule_from_primes({7, 11}, {1, 1});
    auto sys = MoranSystem::binary(s, Rat(1, 2));
    auto v = uniqueness_avoidance(Rat(12, 77), sys, 1);
    CHECK(v.mode == UniquenessMode::StepI);
    CHECK(v.interval_lo == Rat(2, 7));
    CHECK(v.pass);
    CHECK(v.checked == 1);
    CHECK(code_of([&] { uniqueness_avoidance(Rat(6, 7), sys, 1); }) == Errc::NotInSupport);
    CHECK(code_of([&] { uniqueness_avoidance(Rat(1, 3), sys, 1); }) == Errc::NotInSupport);

    // 2L >= 1 under Step I.
    std::vector<Level> wide;
    for (auto M : bases_of(s)) wide.push_back(Level{M, {0, 4}, Level::Shape::Uniform, {}});
    auto w = MoranSystem::from_levels(s, wide);
    CHECK(code_of([&] { uniqueness_avoidance(Rat(0), w, 2, UniquenessMode::StepI); }) == Errc::InvalidInterval);
    // Every level has (a + 1)/M >= 5/6.
    std::vector<Level> full;
    for (auto M : bases_of(s)) {
        Level lv{M, {}, Level::Shape::Uniform, {}};
        for (std::uint32_t d = 0; d < M; ++d) lv.digits.push_back(d);
        full.push_back(lv);
    }
    auto f = MoranSystem::from_levels(s, full);
    CHECK(code_of([&] { uniqueness_avoidance(Rat(0), f, 2); }) == Errc::InvalidInterval);
}

TEST_CASE("uniqueness: exact fractional parts") {
    auto sys = binary(8);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        auto p = sample_point(sys, seed, sys.levels());
        auto v = uniqueness_avoidance(p.value, sys, p.depth - 1);
        REQUIRE(v.pass);
        REQUIRE(v.checked == p.depth - 1);
        for (std::size_t t = 1; t < p.depth; ++t) {
            Rat k = Rat(sys.prefix()[t]) * p.value;
            Int fl = k.get_num() / k.get_den();
            Rat fr = k - Rat(fl);
            REQUIRE(fr <= Rat(2, 7));
        }
    }
    // Step III: only levels with (a + 1)/M < 5/6 enter c and the multipliers.
    auto s = schedule_from_primes({7, 11}, {1, 1});
    Level full{11, {}, Level::Shape::Uniform, {}};
    for (std::uint32_t d = 0; d < 11; ++d) full.digits.push_back(d);
    auto mixed = MoranSystem::from_levels(s, {Level{7, {0, 1}, Level::Shape::Uniform, {}}, full});
    auto v = uniqueness_avoidance(Rat(3, 11), mixed, 5);
    CHECK(v.mode == UniquenessMode::StepIII);
    CHECK(v.interval_lo == Rat(13, 42));
    CHECK(v.multipliers == std::vector<std::size_t>{0});
    CHECK(v.pass);
    CHECK(code_of([&] { uniqueness_avoidance(Rat(3, 11), mixed, 5, UniquenessMode::StepI); }) ==
          Errc::InvalidInterval);
}

TEST_CASE("report CSVs") {
    std::ostringstream a, b;
    auto r = normality_report(Rat(1, 3), std::vector<unsigned>{2, 3}, 0, Int(1) << 20);
    write_normality_csv(a, {5}, 10, {r});
    CHECK(a.str().rfind("seed,depth,base,trusted_digits,max_deviation,discrepancy\n5,10,2,20,0,", 0) == 0);
    UniquenessVerdict v;
    v.pass = false;
    v.first_violation_j = 3;
    write_uniqueness_csv(b, {9, 10}, 4, {v, UniquenessVerdict{}});
    CHECK(b.str() == "seed,j_max,verdict,first_violation_j\n9,4,FAIL,3\n10,4,PASS,\n");
}
