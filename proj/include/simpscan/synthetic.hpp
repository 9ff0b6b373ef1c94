#pragma once
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "logistic.hpp"

namespace simpscan {

// One planted subgroup: rows get x uniform on [x_center - x_spread,
// x_center + x_spread] and y ~ Bernoulli(sigmoid(alpha + beta x)).
struct PlantedGroup {
    std::size_t size = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double x_center = 0.0;
    double x_spread = 1.0;
};

enum class NoiseKind { uniform, normal };

struct PlantedSpec {
    std::vector<PlantedGroup> groups;
    std::size_t noise_covariates = 0;
    NoiseKind noise_kind = NoiseKind::uniform;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    std::vector<PlantedGroup> groups;
    bool pooled_ok = false;
    LogisticFit pooled;
    std::string trend_covariate = "x";
    std::string group_covariate = "group";
};

namespace detail {

// Canonical uniform draw on [0, 1): top 53 bits of one mt19937_64 output.
inline double unit_uniform(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1p-53;
}

// Standard normal by Box-Muller; always consumes exactly two uniforms.
inline double unit_normal(std::mt19937_64& g) {
    double u1 = unit_uniform(g);
    const double u2 = unit_uniform(g);
    if (u1 <= 0.0) u1 = 0x1p-53;
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace detail

// Draws the planted dataset. Column layout: outcome "y", then covariates
// "x", "group", "noise1".."noiseK". The draw order is fixed and documented:
// per row of each group in spec order, three uniforms (x position, group
// jitter, outcome), then each noise column in full, one value per row.
// Group membership is the group index plus jitter on (-0.2, 0.2), so
// midpoint splits between consecutive indices recover the groups.
inline std::pair<Dataset, GroundTruth> generate(const PlantedSpec& spec) {
    if (spec.groups.empty()) throw InvalidSpec("generate: at least one group required");
    std::size_t n = 0;
    for (const auto& g : spec.groups) {
        if (g.size < 1) throw InvalidSpec("generate: every group size must be >= 1");
        if (!(g.x_spread > 0.0)) throw InvalidSpec("generate: x_spread must be > 0");
        n += g.size;
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<double> y(n), x(n), group(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.groups.size(); ++c) {
        const auto& g = spec.groups[c];
        for (std::size_t i = 0; i < g.size; ++i, ++row) {
            const double ux = detail::unit_uniform(rng);
            const double uj = detail::unit_uniform(rng);
            const double uy = detail::unit_uniform(rng);
            x[row] = g.x_center + (2.0 * ux - 1.0) * g.x_spread;
            group[row] = static_cast<double>(c) + (2.0 * uj - 1.0) * 0.2;
            y[row] = uy < logistic_cdf(g.alpha + g.beta * x[row]) ? 1.0 : 0.0;
        }
    }

    std::vector<std::pair<std::string, std::vector<double>>> covs;
    covs.emplace_back("x", std::move(x));
    covs.emplace_back("group", std::move(group));
    for (std::size_t k = 0; k < spec.noise_covariates; ++k) {
        std::vector<double> noise(n);
        for (std::size_t i = 0; i < n; ++i)
            noise[i] = spec.noise_kind == NoiseKind::uniform
                           ? detail::unit_uniform(rng)
                           : detail::unit_normal(rng);
        covs.emplace_back("noise" + std::to_string(k + 1), std::move(noise));
    }

    Dataset ds = Dataset::from_columns("y", std::move(y), std::move(covs));

    GroundTruth gt;
    gt.groups = spec.groups;
    try {
        gt.pooled = fit_logistic(ds.covariate("x"), ds.outcome());
        gt.pooled_ok = gt.pooled.status == FitStatus::converged;
    } catch (const Error&) {
        gt.pooled_ok = false;
    }
    return {std::move(ds), std::move(gt)};
}

// True when every planted slope shares one sign and the pooled fit over all
// groups carries the strictly opposite sign.
inline bool reversal_planted(const GroundTruth& gt) {
    if (gt.groups.size() < 2 || !gt.pooled_ok) return false;
    const double b0 = gt.groups[0].beta;
    if (b0 == 0.0) return false;
    for (const auto& g : gt.groups)
        if (!(g.beta * b0 > 0.0)) return false;
    return gt.pooled.beta * b0 < 0.0;
}

// Serializes a dataset in the loader's input format. Covariates print with
// %.17g so values round-trip exactly; missing cells print empty; the
// outcome prints as 0/1.
inline void write_csv(const Dataset& ds, std::ostream& out) {
    const auto& cols = ds.columns();
    bool first = true;
    for (const auto& c : cols) {
        if (c.role == ColumnRole::ignored) continue;
        if (!first) out << ',';
        out << detail::csv_escape(c.name);
        first = false;
    }
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        first = true;
        for (const auto& c : cols) {
            if (c.role == ColumnRole::ignored) continue;
            if (!first) out << ',';
            first = false;
            if (c.role == ColumnRole::outcome) {
                out << (ds.outcome()[i] != 0.0 ? '1' : '0');
            } else {
                const double v = ds.covariate(c.name)[i];
                if (std::isnan(v)) continue;
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << buf;
            }
        }
        out << '\n';
    }
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot open '" + path + "' for writing");
    write_csv(ds, out);
    out.flush();
    if (!out) throw FileError("failed writing '" + path + "'");
}

} // namespace simpscan
