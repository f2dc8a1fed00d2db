#include "moran/serialize.hpp"

#include "moran/errors.hpp"

#include <cstdio>

namespace moran {

json schedule_to_json(const PrimeSchedule& s) {
    json j;
    j["d"] = s.d;
    j["variant"] = variant_name(s.variant);
    j["offset"] = s.offset;
    j["q"] = s.q;
    j["ell"] = s.ell;
    j["L"] = s.L;
    json N = json::array();
    for (const Int& v : s.N) N.push_back(dec(v));
    j["N"] = N;
    return j;
}

PrimeSchedule schedule_from_json(const json& j) {
    try {
        PrimeSchedule s = PrimeSchedule::make(j.at("d").get<unsigned>(), parse_variant(j.at("variant").get<std::string>()),
                                              j.value("offset", std::uint64_t{0}), j.at("q").get<std::vector<std::uint64_t>>(),
                                              j.at("ell").get<std::vector<std::uint64_t>>());
        if (j.contains("L") && j["L"].get<std::vector<std::uint64_t>>() != s.L)
            fail(Errc::InvalidParameter, "stored L disagrees with q and ell");
        if (j.contains("N")) {
            const auto& N = j["N"];
            if (N.size() != s.N.size()) fail(Errc::InvalidParameter, "stored N has the wrong length");
            for (std::size_t i = 0; i < N.size(); ++i) {
                if (Int(N[i].get<std::string>()) != s.N[i]) fail(Errc::InvalidParameter, "stored N disagrees with q and ell");
            }
        }
        return s;
    } catch (const json::exception& e) {
        fail(Errc::InvalidParameter, std::string("schedule json: ") + e.what());
    }
}

json context_to_json(const BaseContext& ctx) {
    json j;
    j["b"] = ctx.b;
    j["h"] = ctx.h;
    j["r0_prime"] = ctx.r0_prime;
    j["n0"] = ctx.n0;
    j["Q"] = dec(ctx.Q);
    j["k"] = ctx.k;
    j["j"] = ctx.j;
    j["r0"] = ctx.r0;
    j["gamma"] = ctx.gamma;
    j["alpha"] = ctx.alpha;
    j["C1"] = ctx.C1;
    j["C_tilde"] = ctx.C_tilde.get_str();
    j["A"] = ctx.A;
    j["B"] = ctx.B;
    j["R"] = ctx.R;
    j["r1"] = ctx.r1;
    j["has_free_block"] = ctx.has_free_block();
    return j;
}

json certificate_to_json(const PartitionCertificate& c) {
    json j;
    j["I_start"] = c.I_start;
    j["length"] = c.length;
    j["J"] = c.J;
    j["class_sizes"] = c.class_sizes;
    j["ok"] = c.ok;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.dump())));
    return buf;
}

}  // namespace moran
