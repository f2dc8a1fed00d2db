#pragma once

#include "moran/bigint.hpp"
#include "moran/fourier.hpp"
#include "moran/measure.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace moran {

// phi is handled through lambda = log(1/r): log_g(lambda) = log(phi(r)/r).
struct GaugeFunction {
    enum class Kind { Power, RLogPower, RH, Custom };

    Kind kind = Kind::Power;
    Rat s{1, 2};    // Power: phi(r) = r^s
    double c = 1;   // RLogPower: phi = r log(1/r)^c; RH: phi = r H_c(r)
    std::function<double(double)> custom;
    std::string label;

    static GaugeFunction power(const Rat& s);
    static GaugeFunction r_log_power(double c);
    static GaugeFunction r_times_H(double c);
    static GaugeFunction from_log_g(std::function<double(double)> log_g, std::string label);

    double log_g(double lambda) const;
    double log_phi(double lambda) const { return log_g(lambda) - lambda; }
    // log g minus log H_cH, the adjustment for the extreme-digit construction.
    GaugeFunction h_adjusted(double cH) const;
};

// log H_c(r) = c (lambda / log lambda)^{1/4}.
double log_H(double c, double lambda);

// Unique h with (M_1...M_{h+1})^{-1} < r <= (M_1...M_h)^{-1}.
std::size_t h_of_r(const Rat& r, const std::vector<Int>& prefix);
std::size_t h_of_r(const Rat& r, const MoranSystem& sys);

struct SparseSet {
    std::vector<std::size_t> indices;     // N, increasing, 1-based levels
    std::vector<double> lambda_k;         // log(1/r_k) of the kept r_k
    std::vector<std::uint64_t> n_k;       // thresholds of the kept r_k
    std::vector<Rat> grid;                // certificate grid
    bool certified = false;
    double worst_margin = 0;              // min over the grid of log g(r) - #A_r log 2

    bool contains(std::size_t n) const;
    // #([1 : h + 1] cap N).
    std::size_t count_upto(std::size_t level) const;
};

// Recipe of the sparse-index lemma with n_k = 2^{k+1}, truncated at `depth` levels.
SparseSet sparse_index_set(const GaugeFunction& g, const MoranSystem& sys, std::size_t depth);

enum class ConvolvedVariant { DimOne, Gauge, Extreme };
const char* variant_name(ConvolvedVariant v);

struct ConvolvedSystem {
    ConvolvedVariant variant = ConvolvedVariant::DimOne;
    std::vector<bool> in_N;                       // in_N[n-1]
    std::vector<std::vector<std::uint32_t>> E;    // nu digit sets
    std::vector<std::vector<std::uint32_t>> F;    // D + E
    std::vector<bool> unique_sums;                // every F digit splits uniquely as d + e
    MoranSystem lambda;                           // mu * nu
    MoranSystem eta;                              // equal mass on F
    std::optional<SparseSet> sparse;

    std::size_t levels() const { return F.size(); }
};

// mu must be the binary system with digits {0,1}. Gauge variants need `gauge`.
ConvolvedSystem build_convolved(const MoranSystem& mu, ConvolvedVariant variant,
                                const std::optional<GaugeFunction>& gauge = std::nullopt, double cH = 0,
                                std::optional<std::size_t> depth = std::nullopt);

struct BallMeasure {
    std::size_t h = 0;
    std::size_t level = 0;        // h + 1
    Int count;                    // admissible level-(h+1) intervals meeting [x - r, x + r]
    Int count_bound;              // 2 (floor(r M_1...M_{h+1}) + 1)
    Rat per_interval;             // eta of one basic interval
    Rat value;                    // count * per_interval
    Rat containing;               // eta of the interval containing x
};

BallMeasure ball_measure(const Rat& x, const Rat& r, const ConvolvedSystem& cs);

// #{k <= K : digits of k at levels 1..n lie in F}, most significant level first.
Int admissible_upto(const Int& K, std::size_t n, const ConvolvedSystem& cs);

struct MassRow {
    std::uint64_t seed = 0;
    Rat r;
    std::size_t h = 0;
    Rat ball;
    double phi = 0;
    double ratio = 0;   // ball / (C phi)
    bool ok = false;    // ball <= C phi, exact for rational power gauges
    bool exact = false;
};

// Checks eta(B(x, r)) <= C phi(r) on every point and radius.
std::vector<MassRow> mass_distribution(const ConvolvedSystem& cs, const std::vector<SamplePoint>& points,
                                       const std::vector<Rat>& r_grid, const GaugeFunction& phi, const Rat& C,
                                       unsigned workers = 1);

struct LocalDimSeries {
    std::vector<double> terms;        // terms[n-1]
    std::vector<double> running_min;  // NaN before the burn-in
    double final_min = 0;
};

inline constexpr std::size_t kDefaultBurnIn = 50;

LocalDimSeries local_dim_series(const SamplePoint& x, const MoranSystem& lambda, std::size_t depth,
                                std::size_t burn_in = kDefaultBurnIn);

struct HRateRow {
    Rat r;
    std::size_t h = 0;
    double ratio = 0;  // h / log(1/r)
    double band = 0;   // h log log(1/r) / log(1/r)
};

struct HRateReport {
    std::vector<HRateRow> rows;
    bool strictly_decreasing = true;  // exact comparison of consecutive ratios
    double band_lo = 0, band_hi = 0;
    bool cube_window = false;
};

HRateReport h_rate_report(const MoranSystem& sys, const std::vector<Rat>& r_grid);

void write_mass_csv(std::ostream& os, const std::vector<MassRow>& rows);
void write_local_dim_csv(std::ostream& os, const LocalDimSeries& s);
void write_h_rate_csv(std::ostream& os, const HRateReport& rep);

}  // namespace moran
