#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "partition.hpp"

namespace simpscan {

enum class ReportFormat { json, csv, markdown };

namespace detail {

inline const char* sign_label(TrendSign s) {
    switch (s) {
        case TrendSign::pos: return "+";
        case TrendSign::neg: return "-";
        default: return "0";
    }
}

inline const char* status_label(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iter: return "max_iter";
        case FitStatus::degenerate_constant_y: return "degenerate_constant_y";
        default: return "ridge_bounded";
    }
}

// fixed printf formats keep report bytes identical across platforms
inline std::string fmt4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline nlohmann::ordered_json json_num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;  // NaN and infinities have no JSON literal
}

inline nlohmann::ordered_json fit_to_json(const LogisticFit& f) {
    nlohmann::ordered_json j;
    j["alpha"] = json_num(f.alpha);
    j["beta"] = json_num(f.beta);
    j["se_alpha"] = json_num(f.se_alpha);
    j["se_beta"] = json_num(f.se_beta);
    const double hw = 1.959963984540054 * f.se_beta;
    j["beta_ci95"] = {json_num(f.beta - hw), json_num(f.beta + hw)};
    j["loglik"] = json_num(f.loglik);
    j["n"] = f.n;
    j["iterations"] = f.iterations;
    j["status"] = status_label(f.status);
    return j;
}

inline nlohmann::ordered_json config_to_json(const ScanConfig& c) {
    nlohmann::ordered_json j;
    j["alpha_level"] = c.alpha_level;
    j["max_bins"] = c.partition.max_bins;
    j["min_bin_size"] = c.partition.min_bin_size;
    j["min_gain"] = c.partition.min_gain;
    j["max_iter"] = c.fit.max_iter;
    j["loglik_tol"] = c.fit.loglik_tol;
    j["ridge"] = c.fit.ridge;
    j["prob_clamp"] = c.fit.prob_clamp;
    j["top_k"] = c.top_k;
    j["require_reversal"] = c.require_reversal;
    j["bh_correction"] = c.bh_correction;
    j["reversal_base"] =
        c.reversal_base == ReversalBase::all_bins ? "all_bins" : "significant_only";
    j["subgroup_test"] = c.subgroup_test == SubgroupTest::wald ? "wald" : "deviance";
    return j;
}

} // namespace detail

// Number of result rows the report prints: all of them, or the top_k best.
inline std::size_t report_row_count(const ScanReport& report) {
    if (report.config.top_k == 0) return report.results.size();
    return std::min(report.config.top_k, report.results.size());
}

inline void emit_json(const ScanReport& report, std::ostream& out) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = 1;
    j["dataset_fingerprint"] = report.fingerprint;
    j["config"] = detail::config_to_json(report.config);
    j["pairs_examined"] = report.pairs_examined;
    j["pairs_skipped"] = report.pairs_skipped;
    j["pairs_significant"] = report.pairs_significant;
    ordered_json rows = ordered_json::array();
    const std::size_t limit = report_row_count(report);
    for (std::size_t i = 0; i < limit; ++i) {
        const auto& r = report.results[i];
        ordered_json row;
        row["rank"] = i + 1;
        row["pseudo_r2"] = detail::json_num(r.pseudo_r2);
        row["covariate"] = r.x_j;
        row["conditioned_on"] = r.x_c;
        row["n"] = r.n;
        row["agg_beta_sign"] = detail::sign_label(sign_of(r.aggregate_fit.beta));
        row["aggregate_p"] = detail::json_num(r.aggregate_p);
        row["disagg_deviance"] = detail::json_num(r.disagg_deviance);
        row["disagg_p"] = detail::json_num(r.disagg_p);
        row["n_bins"] = r.partition.bins.size();
        row["simpson_flag"] = r.simpson_flag;
        row["aggregate_fit"] = detail::fit_to_json(r.aggregate_fit);
        row["partition"] = {
            {"covariate", r.partition.covariate},
            {"splits", r.partition.splits},
            {"sst", detail::json_num(r.partition.sst)},
            {"r2", detail::json_num(r.partition.r2)},
        };
        ordered_json bins = ordered_json::array();
        for (const auto& b : r.partition.bins)
            bins.push_back({{"lower", detail::json_num(b.lower)},
                            {"upper", detail::json_num(b.upper)},
                            {"count", b.count},
                            {"mean_y", detail::json_num(b.mean_y)}});
        row["partition"]["bins"] = bins;
        ordered_json subs = ordered_json::array();
        for (const auto& t : r.subgroup_trends) {
            ordered_json s;
            s["bin_index"] = t.bin_index;
            s["fit"] = detail::fit_to_json(t.fit);
            s["beta_p"] = detail::json_num(t.beta_p);
            s["significant"] = t.significant;
            s["sign"] = detail::sign_label(t.sign);
            subs.push_back(s);
        }
        row["subgroup_trends"] = subs;
        rows.push_back(row);
    }
    j["results"] = rows;
    ordered_json skips = ordered_json::array();
    for (const auto& s : report.skipped)
        skips.push_back({{"covariate", s.x_j}, {"conditioned_on", s.x_c}, {"reason", s.reason}});
    j["skipped"] = skips;
    out << j.dump(2) << '\n';
}

inline void emit_csv(const ScanReport& report, std::ostream& out) {
    out << "rank,pseudo_r2,covariate,conditioned_on,agg_beta_sign,aggregate_p,"
           "disagg_p,n_bins,simpson_flag\n";
    const std::size_t limit = report_row_count(report);
    for (std::size_t i = 0; i < limit; ++i) {
        const auto& r = report.results[i];
        out << (i + 1) << ',' << detail::fmt4(r.pseudo_r2) << ','
            << detail::csv_escape(r.x_j) << ',' << detail::csv_escape(r.x_c) << ','
            << detail::sign_label(sign_of(r.aggregate_fit.beta)) << ','
            << detail::fmt6(r.aggregate_p) << ',' << detail::fmt6(r.disagg_p) << ','
            << r.partition.bins.size() << ',' << (r.simpson_flag ? "true" : "false")
            << '\n';
    }
}

inline void emit_markdown(const ScanReport& report, std::ostream& out) {
    out << "| rank | pseudo_r2 | covariate | conditioned_on | agg_beta_sign | "
           "aggregate_p | disagg_p | n_bins | simpson_flag |\n";
    out << "|------|-----------|-----------|----------------|---------------|"
           "-------------|----------|--------|--------------|\n";
    const std::size_t limit = report_row_count(report);
    for (std::size_t i = 0; i < limit; ++i) {
        const auto& r = report.results[i];
        out << "| " << (i + 1) << " | " << detail::fmt4(r.pseudo_r2) << " | " << r.x_j
            << " | " << r.x_c << " | " << detail::sign_label(sign_of(r.aggregate_fit.beta))
            << " | " << detail::fmt6(r.aggregate_p) << " | " << detail::fmt6(r.disagg_p)
            << " | " << r.partition.bins.size() << " | "
            << (r.simpson_flag ? "true" : "false") << " |\n";
    }
    out << "\n" << report.pairs_significant << " significant of " << report.pairs_examined
        << " examined pairs (" << report.pairs_skipped << " skipped); dataset "
        << report.fingerprint << "\n";
}

inline void emit_report(const ScanReport& report, ReportFormat format, std::ostream& out) {
    switch (format) {
        case ReportFormat::json: emit_json(report, out); break;
        case ReportFormat::csv: emit_csv(report, out); break;
        case ReportFormat::markdown: emit_markdown(report, out); break;
    }
}

// ============================================================================
// Heatmap grids
// ============================================================================

struct HeatmapConfig {
    std::size_t x_j_bins = 20;  // display columns over x_j
};

// Row axis: the partition's bins of x_c. Column axis: quantile display bins
// of x_j over the same pair view. Cells hold the mean outcome (NaN when the
// cell is empty) and the sample count.
struct HeatmapGrid {
    std::vector<double> row_edges;  // partition split thresholds
    std::vector<double> col_edges;  // inner quantile cuts of x_j
    std::vector<std::vector<double>> mean;   // [row][col]
    std::vector<std::vector<std::size_t>> count;
};

inline HeatmapGrid heatmap_grid(const DisaggregationResult& result, const PairView& pv,
                                const HeatmapConfig& cfg = {}) {
    if (cfg.x_j_bins < 1) throw DomainError("heatmap_grid: x_j_bins must be >= 1");
    if (pv.x_j_name != result.x_j || pv.x_c_name != result.x_c)
        throw DomainError("heatmap_grid: pair view does not match result");

    HeatmapGrid grid;
    grid.row_edges = result.partition.splits;

    // inner column cuts at the k/B quantiles of x_j, deduplicated; cuts that
    // reach the maximum are dropped so the last column stays non-empty
    std::vector<double> xs(pv.x_j.begin(), pv.x_j.end());
    std::sort(xs.begin(), xs.end());
    const double x_max = xs.back();
    for (std::size_t k = 1; k < cfg.x_j_bins; ++k) {
        const double q = xs[(k * xs.size()) / cfg.x_j_bins];
        if (q >= x_max) break;
        if (grid.col_edges.empty() || q > grid.col_edges.back())
            grid.col_edges.push_back(q);
    }

    const std::size_t n_rows = result.partition.bins.size();
    const std::size_t n_cols = grid.col_edges.size() + 1;
    grid.mean.assign(n_rows, std::vector<double>(n_cols, std::numeric_limits<double>::quiet_NaN()));
    grid.count.assign(n_rows, std::vector<std::size_t>(n_cols, 0));
    std::vector<std::vector<double>> sum(n_rows, std::vector<double>(n_cols, 0.0));

    for (std::size_t i = 0; i < pv.n; ++i) {
        const std::size_t r = bin_index(result.partition, pv.x_c[i]);
        // column k takes values up to and including col_edges[k]
        const std::size_t c = static_cast<std::size_t>(
            std::lower_bound(grid.col_edges.begin(), grid.col_edges.end(), pv.x_j[i]) -
            grid.col_edges.begin());
        sum[r][c] += pv.y[i];
        ++grid.count[r][c];
    }
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            if (grid.count[r][c] > 0)
                grid.mean[r][c] = sum[r][c] / static_cast<double>(grid.count[r][c]);
    return grid;
}

// Two CSV blocks: cell means (empty string for empty cells), then counts.
inline void heatmap_csv(const HeatmapGrid& grid, std::ostream& out) {
    const std::size_t n_cols = grid.mean.empty() ? 0 : grid.mean[0].size();
    out << "block,row";
    for (std::size_t c = 0; c < n_cols; ++c) out << ",col" << c;
    out << '\n';
    for (std::size_t r = 0; r < grid.mean.size(); ++r) {
        out << "mean," << r;
        for (double v : grid.mean[r]) {
            out << ',';
            if (!std::isnan(v)) out << detail::fmt6(v);
        }
        out << '\n';
    }
    for (std::size_t r = 0; r < grid.count.size(); ++r) {
        out << "count," << r;
        for (std::size_t v : grid.count[r]) out << ',' << v;
        out << '\n';
    }
}

// Sidecar listing both axes' inner edges.
inline void heatmap_edges_csv(const HeatmapGrid& grid, std::ostream& out) {
    out << "axis,index,edge\n";
    for (std::size_t i = 0; i < grid.row_edges.size(); ++i)
        out << "row," << i << ',' << detail::fmt6(grid.row_edges[i]) << '\n';
    for (std::size_t i = 0; i < grid.col_edges.size(); ++i)
        out << "col," << i << ',' << detail::fmt6(grid.col_edges[i]) << '\n';
}

} // namespace simpscan
