#include "moran/delsum.hpp"
#include "moran/dimension.hpp"
#include "moran/distribution.hpp"
#include "moran/errors.hpp"
#include "moran/fourier.hpp"
#include "moran/measure.hpp"
#include "moran/numtheory.hpp"
#include "moran/radix.hpp"
#include "moran/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace moran;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Allowed keys per section; anything else is a config error.
const std::map<std::string, std::set<std::string>> kSchema = {
    {"", {"schedule", "system", "context", "workers", "seed", "output", "fourier", "del", "partition", "normality",
          "uniqueness", "dimension"}},
    {"schedule", {"d", "variant", "count", "offset", "ell", "q"}},
    {"system", {"omega"}},
    {"context", {"b", "h"}},
    {"output", {"dir"}},
    {"fourier", {"xi", "random", "eps"}},
    {"del", {"N_max", "eps", "blocks"}},
    {"del.blocks", {"r_lo", "r_hi", "m", "eps"}},
    {"partition", {"r", "I_start", "m", "fiber_s"}},
    {"normality", {"samples", "depth", "bases", "guard", "threshold"}},
    {"uniqueness", {"samples", "depth", "system", "j_max"}},
    {"dimension", {"variant", "gauge", "constant", "samples", "depth", "r_grid", "r_grid_pow2", "cH", "burn_in",
                   "h_rate_k"}},
    {"dimension.gauge", {"kind", "s", "c"}},
};

void check_keys(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("section '" + path + "' must be an object");
    const auto& allowed = kSchema.at(path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + (path.empty() ? "" : path + ".") + it.key() + "'");
        const std::string sub = path.empty() ? it.key() : path + "." + it.key();
        if (kSchema.count(sub)) check_keys(it.value(), sub);
    }
}

template <class T>
T get(const json& j, const char* key, T def) {
    if (!j.contains(key) || j[key].is_null()) return def;
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
}

Rat parse_rat(const std::string& s) {
    Rat r;
    if (r.set_str(s, 10) != 0) throw ConfigError("not a rational: '" + s + "'");
    if (r.get_den() == 0) throw ConfigError("zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
}

struct Run {
    json cfg;
    std::string hash;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    fs::path out;

    json section(const char* name) const { return cfg.contains(name) ? cfg[name] : json::object(); }

    PrimeSchedule schedule() const {
        json s = section("schedule");
        const unsigned d = get<unsigned>(s, "d", 1);
        if (s.contains("q")) {
            auto q = get<std::vector<std::uint64_t>>(s, "q", {});
            auto ell = get<std::vector<std::uint64_t>>(s, "ell", std::vector<std::uint64_t>(q.size(), 1));
            return schedule_from_primes(q, ell, d);
        }
        std::optional<std::vector<std::uint64_t>> ell;
        if (s.contains("ell")) ell = get<std::vector<std::uint64_t>>(s, "ell", {});
        return build_schedule(d, get<std::size_t>(s, "count", 6),
                              parse_variant(get<std::string>(s, "variant", "nth-prime-from-7")),
                              get<std::uint64_t>(s, "offset", 0), ell);
    }

    MoranSystem system(const PrimeSchedule& s) const {
        return MoranSystem::binary(s, parse_rat(get<std::string>(section("system"), "omega", "1/2")));
    }

    std::vector<std::uint64_t> bs() const { return get<std::vector<std::uint64_t>>(section("context"), "b", {2}); }
    std::vector<std::int64_t> hs() const { return get<std::vector<std::int64_t>>(section("context"), "h", {1}); }

    std::string header() const {
        return std::string("# moran ") + MORAN_VERSION + " config " + hash + " seed " + std::to_string(seed) + "\n";
    }

    json stamp(json j) const {
        j["version"] = MORAN_VERSION;
        j["config_hash"] = hash;
        j["seed"] = seed;
        return j;
    }

    void write(const std::string& name, const std::string& body) const {
        fs::create_directories(out);
        std::ofstream f(out / name, std::ios::binary);
        f << body;
        if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    }

    void write_csv(const std::string& name, const std::string& body) const { write(name, header() + body); }
    void write_json(const std::string& name, const json& j) const { write(name, stamp(j).dump(2) + "\n"); }
};

int cmd_schedule(const Run& run) {
    PrimeSchedule s = run.schedule();
    std::ostringstream os;
    if (s.deviates_from_paper_constant()) os << "# offset deviates from paper constant\n";
    os << "n,M_n,r,N_r,L_r\n";
    for (std::uint64_t n = 1; n <= s.levels(); ++n) {
        auto [blk, j] = s.block_of(n);
        (void)j;
        os << n << ',' << base_at(s, n) << ',' << blk + 1 << ',' << dec(s.N[blk + 1]) << ',' << s.L[blk + 1] << '\n';
    }
    run.write_csv("schedule.csv", os.str());
    json j = schedule_to_json(s);
    j["deviates_from_paper_constant"] = s.deviates_from_paper_constant();
    run.write_json("schedule.json", j);
    std::cout << os.str();
    return 0;
}

int cmd_context(const Run& run) {
    PrimeSchedule s = run.schedule();
    json arr = json::array();
    for (auto b : run.bs()) {
        for (auto h : run.hs()) {
            BaseContext ctx = build_context(b, h, s);
            json c = context_to_json(ctx);
            json checks = json::array();
            for (std::size_t i = ctx.r0; i < ctx.count(); ++i) {
                OrdRatio o = ord_ratio_check(ctx, i);
                checks.push_back({{"s", i}, {"lhs", dec(o.lhs)}, {"rhs", dec(o.rhs)}, {"J", dec(o.J)},
                                  {"equal", o.lhs == o.rhs}, {"J_integral", o.J_integral}});
                if (o.lhs != o.rhs || !o.J_integral) fail(Errc::CounterexampleFound, "order recursion fails at s=" + std::to_string(i));
            }
            c["order_recursion"] = checks;
            arr.push_back(c);
        }
    }
    json out = {{"contexts", arr}};
    run.write_json("context.json", out);
    std::cout << run.stamp(out).dump(2) << '\n';
    return 0;
}

int cmd_fourier(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem sys = run.system(s);
    json f = run.section("fourier");
    const double eps = get<double>(f, "eps", 1e-9);
    std::vector<Int> xis;
    for (const auto& x : get<std::vector<std::string>>(f, "xi", {})) xis.emplace_back(x);
    const std::size_t nrand = get<std::size_t>(f, "random", 0);
    const Int cap = s.N[std::min<std::size_t>(3, s.count())];
    for (std::size_t i = 0; i < nrand; ++i) {
        Int v = to_int_u(splitmix64(run.seed, 2 * i)) * pow_int(Int(2), 64) + to_int_u(splitmix64(run.seed, 2 * i + 1));
        xis.push_back(mod_nonneg(v, cap));
    }
    std::vector<CertifiedModulus> mods = mu_hat_batch(xis, sys, eps, run.workers);
    BaseContext ctx = build_context(run.bs().front(), run.hs().front(), s);
    std::vector<DecayBound> decay;
    for (const Int& x : xis) decay.push_back(digit_decay_bound(x, sys, ctx));
    std::ostringstream os;
    write_fourier_csv(os, xis, mods, decay);
    run.write_csv("fourier.csv", os.str());
    run.write_json("fourier.json", {{"count", xis.size()}, {"eps", eps}});
    return 0;
}

int cmd_del(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem sys = run.system(s);
    json d = run.section("del");
    const auto b = run.bs().front();
    const auto h = run.hs().front();
    DelReport rep = del_partial(sys, b, h, get<std::uint64_t>(d, "N_max", 10), get<double>(d, "eps", 1e-9), run.workers);
    std::ostringstream os;
    write_del_csv(os, rep);
    run.write_csv("del.csv", os.str());
    json j = {{"N_max", rep.N_max},         {"partial_sum", rep.partial_sum}, {"radius", rep.radius},
              {"diagonal", rep.diagonal},   {"upper", rep.upper},             {"full_direct", rep.full_direct},
              {"decomposition_gap", rep.decomposition_gap}};
    if (d.contains("blocks")) {
        json bl = d["blocks"];
        auto rows = block_trend(sys, b, h, get<std::size_t>(bl, "r_lo", 1), get<std::size_t>(bl, "r_hi", 1),
                                get<std::vector<std::uint64_t>>(bl, "m", {0}), get<double>(bl, "eps", 1e-9), run.workers);
        std::ostringstream bs;
        write_blocks_csv(bs, rows);
        run.write_csv("blocks.csv", bs.str());
    }
    run.write_json("del.json", j);
    std::cout.precision(17);
    std::cout << "partial_sum " << rep.partial_sum << " radius " << rep.radius << '\n';
    return 0;
}

int cmd_partition(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem sys = run.system(s);
    json p = run.section("partition");
    BaseContext ctx = build_context(run.bs().front(), run.hs().front(), s);
    std::optional<std::uint64_t> m;
    if (p.contains("m") && !p["m"].is_null()) m = get<std::uint64_t>(p, "m", 0);
    const std::size_t r = get<std::size_t>(p, "r", ctx.r0 + 1);
    const std::uint64_t start = get<std::uint64_t>(p, "I_start", m.value_or(ctx.n0 - 1) + 1);
    PartitionCertificate cert = verify_partition(start, ctx, sys, r, m, run.workers);
    json j = certificate_to_json(cert);

    // #B_k <= C(k) on every class.
    const std::uint64_t u = static_cast<std::uint64_t>(ctx.free_digits(ctx.r0, r));
    bool bk_ok = true;
    std::vector<std::uint64_t> first;
    for (const auto& cls : cert.classes) {
        auto hist = classify_Bk(cls, ctx, sys, r, m);
        if (first.empty()) first = hist;
        for (std::uint64_t k = 0; k <= u; ++k) bk_ok = bk_ok && Rat(to_int_u(hist[k])) <= C_bound(k, u, ctx, sys, r);
    }
    j["Bk_bound_ok"] = bk_ok;
    if (!first.empty()) {
        std::ostringstream os;
        write_histogram_csv(os, first, ctx, r);
        run.write_csv("histogram.csv", os.str());
    }
    if (p.contains("fiber_s")) {
        const std::size_t fs_ = get<std::size_t>(p, "fiber_s", ctx.r0);
        FiberTable t = fiber_counts(start, to_u64(ctx.prefix_order(ctx.schedule.L[fs_ + 1])), ctx, sys, fs_, m);
        j["fibers"] = {{"s", t.s}, {"q_pow_j", t.q_pow_j}, {"image_size", t.image_size}, {"ok", t.ok}};
    }
    run.write_json("partition.json", j);
    std::cout << run.stamp(j).dump(2) << '\n';
    if (!bk_ok) fail(Errc::CounterexampleFound, "#B_k exceeds C(k)");
    return 0;
}

int cmd_normality(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem sys = run.system(s);
    json n = run.section("normality");
    const std::size_t count = get<std::size_t>(n, "samples", 0);
    const std::size_t depth = get<std::size_t>(n, "depth", sys.levels());
    const auto bases = get<std::vector<unsigned>>(n, "bases", {2, 3, 10});
    const unsigned guard = get<unsigned>(n, "guard", kDefaultGuard);
    const double threshold = get<double>(n, "threshold", 0.05);
    auto pts = sample_batch(sys, run.seed, count, depth, run.workers);
    std::vector<std::vector<NormalityReport>> reps(pts.size());
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        reps[i] = normality_report(pts[i].value, bases, guard, sys.prefix()[depth]);
        seeds.push_back(pts[i].seed);
    }
    std::ostringstream os;
    write_normality_csv(os, seeds, depth, reps);
    run.write_csv("normality.csv", os.str());
    json frac = json::object();
    for (std::size_t bi = 0; bi < bases.size(); ++bi) {
        std::size_t good = 0;
        for (const auto& r : reps) good += r[bi].max_deviation <= threshold;
        frac[std::to_string(bases[bi])] = reps.empty() ? 0.0 : static_cast<double>(good) / reps.size();
    }
    run.write_json("normality.json", {{"samples", count}, {"depth", depth}, {"threshold", threshold}, {"fraction_within", frac}});
    return 0;
}

std::optional<ConvolvedSystem> convolved_from(const json& d, const MoranSystem& mu) {
    const std::string v = get<std::string>(d, "variant", "dim-one");
    ConvolvedVariant var;
    if (v == "dim-one") var = ConvolvedVariant::DimOne;
    else if (v == "gauge") var = ConvolvedVariant::Gauge;
    else if (v == "extreme") var = ConvolvedVariant::Extreme;
    else throw ConfigError("unknown dimension variant '" + v + "'");
    std::optional<GaugeFunction> g;
    if (d.contains("gauge")) {
        json gj = d["gauge"];
        const std::string kind = get<std::string>(gj, "kind", "power");
        if (kind == "power") g = GaugeFunction::power(parse_rat(get<std::string>(gj, "s", "1/2")));
        else if (kind == "r_log_power") g = GaugeFunction::r_log_power(get<double>(gj, "c", 1.0));
        else if (kind == "r_times_H") g = GaugeFunction::r_times_H(get<double>(gj, "c", 1.0));
        else throw ConfigError("unknown gauge kind '" + kind + "'");
    }
    return build_convolved(mu, var, g, get<double>(d, "cH", 0.0));
}

int cmd_uniqueness(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem mu = run.system(s);
    json u = run.section("uniqueness");
    const std::string which = get<std::string>(u, "system", "step-I");
    std::optional<ConvolvedSystem> cs;
    if (which != "step-I") {
        json d = run.section("dimension");
        d["variant"] = which;
        cs = convolved_from(d, mu);
    }
    const MoranSystem& sys = cs ? cs->lambda : mu;
    const std::size_t count = get<std::size_t>(u, "samples", 0);
    const std::size_t depth = get<std::size_t>(u, "depth", sys.levels());
    const std::size_t j_max = get<std::size_t>(u, "j_max", depth ? depth - 1 : 0);
    auto pts = sample_batch(sys, run.seed, count, depth, run.workers);
    std::vector<UniquenessVerdict> verdicts;
    std::vector<std::uint64_t> seeds;
    std::size_t pass = 0;
    for (const auto& p : pts) {
        verdicts.push_back(uniqueness_avoidance(p.value, sys, j_max));
        seeds.push_back(p.seed);
        pass += verdicts.back().pass;
    }
    std::ostringstream os;
    write_uniqueness_csv(os, seeds, j_max, verdicts);
    run.write_csv("uniqueness.csv", os.str());
    json j = {{"samples", count}, {"pass", pass}, {"system", which}};
    if (!verdicts.empty()) j["interval_lo"] = verdicts.front().interval_lo.get_str();
    run.write_json("uniqueness.json", j);
    std::cout << run.stamp(j).dump(2) << '\n';
    if (pass != count) fail(Errc::CounterexampleFound, "a sample meets the interval");
    return 0;
}

int cmd_dimension(const Run& run) {
    PrimeSchedule s = run.schedule();
    MoranSystem mu = run.system(s);
    json d = run.section("dimension");
    ConvolvedSystem cs = *convolved_from(d, mu);
    const std::size_t count = get<std::size_t>(d, "samples", 8);
    const std::size_t depth = get<std::size_t>(d, "depth", cs.levels());
    std::vector<Rat> grid;
    for (const auto& r : get<std::vector<std::string>>(d, "r_grid", {})) grid.push_back(parse_rat(r));
    for (auto e : get<std::vector<unsigned long>>(d, "r_grid_pow2", {})) grid.emplace_back(Int(1), pow_int(Int(2), e));
    for (auto& r : grid) r.canonicalize();
    GaugeFunction phi = GaugeFunction::power(Rat(1, 2));
    if (d.contains("gauge")) {
        json gj = d["gauge"];
        const std::string kind = get<std::string>(gj, "kind", "power");
        if (kind == "power") phi = GaugeFunction::power(parse_rat(get<std::string>(gj, "s", "1/2")));
        else if (kind == "r_log_power") phi = GaugeFunction::r_log_power(get<double>(gj, "c", 1.0));
        else phi = GaugeFunction::r_times_H(get<double>(gj, "c", 1.0));
    }
    const Rat C = parse_rat(get<std::string>(d, "constant", cs.variant == ConvolvedVariant::DimOne ? "8" : "4"));
    auto pts = sample_batch(cs.lambda, run.seed, count, depth, run.workers);
    auto rows = mass_distribution(cs, pts, grid, phi, C, run.workers);
    std::ostringstream os;
    write_mass_csv(os, rows);
    run.write_csv("mass.csv", os.str());
    bool ok = true;
    double sup = 0;
    for (const auto& r : rows) {
        ok = ok && r.ok;
        sup = std::max(sup, r.ratio);
    }
    json j = {{"variant", variant_name(cs.variant)}, {"rows", rows.size()}, {"sup_ratio", sup}, {"all_within", ok}};
    if (cs.sparse) j["sparse_set"] = {{"indices", cs.sparse->indices}, {"certified", cs.sparse->certified}};
    if (!pts.empty()) {
        auto series = local_dim_series(pts.front(), cs.lambda, depth, get<std::size_t>(d, "burn_in", kDefaultBurnIn));
        std::ostringstream ls;
        write_local_dim_csv(ls, series);
        run.write_csv("local_dim.csv", ls.str());
        j["local_dim_running_min"] = series.final_min;
    }
    const std::size_t kmax = std::min<std::size_t>(get<std::size_t>(d, "h_rate_k", 30), mu.levels() - 1);
    std::vector<Rat> hg;
    for (std::size_t k = 1; k <= kmax; ++k) hg.emplace_back(Int(1), mu.prefix()[k]);
    HRateReport hr = h_rate_report(mu, hg);
    std::ostringstream hs;
    write_h_rate_csv(hs, hr);
    run.write_csv("h_rate.csv", hs.str());
    j["h_rate_strictly_decreasing"] = hr.strictly_decreasing;
    run.write_json("dimension.json", j);
    std::cout << run.stamp(j).dump(2) << '\n';
    return 0;
}

int exit_code(Errc c) {
    switch (c) {
        case Errc::CounterexampleFound: return 4;
        case Errc::TooLarge: return 5;
        default: return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moran-set normality and uniqueness toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "64-bit seed");
    app.add_option("--workers", workers, "worker threads");
    app.set_version_flag("--version", std::string(MORAN_VERSION));
    const std::vector<std::pair<std::string, int (*)(const Run&)>> cmds = {
        {"schedule", cmd_schedule},     {"context", cmd_context},       {"fourier", cmd_fourier},
        {"del", cmd_del},               {"partition", cmd_partition},   {"normality", cmd_normality},
        {"uniqueness", cmd_uniqueness}, {"dimension", cmd_dimension},
    };
    for (const auto& c : cmds) app.add_subcommand(c.first, "run " + c.first);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Run run;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot open config '" + config_path + "'");
            try {
                run.cfg = json::parse(f);
            } catch (const json::exception& e) {
                throw ConfigError(std::string("config parse: ") + e.what());
            }
        } else {
            run.cfg = json::object();
        }
        check_keys(run.cfg, "");
        if (seed) run.cfg["seed"] = *seed;
        if (workers) run.cfg["workers"] = *workers;
        run.seed = get<std::uint64_t>(run.cfg, "seed", 0);
        unsigned w = get<unsigned>(run.cfg, "workers", 0);
        if (!w) {
            const char* env = std::getenv("MORAN_WORKERS");
            w = env ? static_cast<unsigned>(std::strtoul(env, nullptr, 10)) : 1;
        }
        run.workers = std::max(1u, w);
        json outcfg = run.section("output");
        std::string dir = out_dir;
        if (dir.empty()) dir = get<std::string>(outcfg, "dir", "");
        if (dir.empty()) {
            const char* env = std::getenv("MORAN_OUT_DIR");
            dir = env ? env : "moran_out";
        }
        run.out = dir;
        // Output location and worker count stay out of the hash.
        json hashed = run.cfg;
        hashed.erase("output");
        hashed.erase("workers");
        run.hash = config_hash(hashed);
        for (const auto& c : cmds) {
            if (app.got_subcommand(c.first)) return c.second(run);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
