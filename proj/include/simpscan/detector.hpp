#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "logistic.hpp"
#include "partition.hpp"

namespace simpscan {

// ============================================================================
// Result types
// ============================================================================

enum class TrendSign { neg, zero, pos };

inline TrendSign sign_of(double beta) {
    if (beta > 0.0) return TrendSign::pos;
    if (beta < 0.0) return TrendSign::neg;
    return TrendSign::zero;
}

inline TrendSign opposite(TrendSign s) {
    if (s == TrendSign::pos) return TrendSign::neg;
    if (s == TrendSign::neg) return TrendSign::pos;
    return TrendSign::zero;
}

struct SubgroupTrend {
    std::size_t bin_index = 0;
    LogisticFit fit;
    double beta_p = 1.0;
    bool significant = false;
    TrendSign sign = TrendSign::zero;
};

struct AggregateTrend {
    LogisticFit fit;
    double dev = 0.0;
    double p = 1.0;
};

struct DisaggregationResult {
    std::string x_j;
    std::string x_c;
    std::size_t n = 0;             // rows used (pair view size)
    LogisticFit aggregate_fit;
    double aggregate_p = 1.0;
    Partition partition;
    std::vector<SubgroupTrend> subgroup_trends;
    double disagg_deviance = 0.0;
    double disagg_p = 1.0;
    bool simpson_flag = false;
    double pseudo_r2 = 0.0;
};

// Denominator of the reversal majority rule: every subgroup, or only the
// subgroups whose own trend is significant.
enum class ReversalBase { all_bins, significant_only };

// How a subgroup's slope is tested: Wald z against the standard normal, or
// a df-1 deviance test against the bin's intercept-only model.
enum class SubgroupTest { wald, deviance };

struct ScanConfig {
    double alpha_level = 0.05;
    PartitionConfig partition;
    FitConfig fit;
    std::size_t top_k = 0;          // 0 means report everything
    bool require_reversal = false;
    bool bh_correction = false;
    ReversalBase reversal_base = ReversalBase::all_bins;
    SubgroupTest subgroup_test = SubgroupTest::wald;
    std::size_t workers = 0;        // 0 means use hardware concurrency
};

struct SkippedPair {
    std::string x_j;
    std::string x_c;
    std::string reason;
};

struct ScanReport {
    std::string fingerprint;
    ScanConfig config;
    std::vector<DisaggregationResult> results;
    std::vector<SkippedPair> skipped;
    std::size_t pairs_examined = 0;
    std::size_t pairs_skipped = 0;
    std::size_t pairs_significant = 0;
};

// ============================================================================
// Step 2: trend models
// ============================================================================

// Pooled trend of y on x_j over all rows, tested against the intercept-only
// null by a df-1 deviance test.
inline AggregateTrend aggregate_trend(std::span<const double> x,
                                      std::span<const double> y,
                                      const FitConfig& fcfg = {}) {
    if (x.size() < 2) throw EmptyInput("aggregate_trend: need at least 2 rows");
    const double first = y.empty() ? 0.0 : y[0];
    bool constant = true;
    for (double v : y)
        if (v != first) { constant = false; break; }
    if (constant) throw ConstantOutcome("aggregate_trend: outcome is constant");

    AggregateTrend out;
    out.fit = fit_logistic(x, y, fcfg);
    out.dev = deviance(out.fit.loglik, null_loglik(y, fcfg.prob_clamp));
    out.p = chi2_sf(out.dev, 1.0);
    return out;
}

struct DisaggregatedTrends {
    std::vector<SubgroupTrend> trends;
    double deviance = 0.0;
    double p = 1.0;
};

// One trend fit per partition bin, plus the joint deviance of the per-bin
// slope models against the bin-means model. Both models carry one free
// intercept per bin, so the slopes add |bins| parameters and the test runs
// on that many degrees of freedom. Bins whose outcome is constant produce
// degenerate fits that add exactly zero deviance and can never vote as
// significant.
inline DisaggregatedTrends disaggregated_trends(const PairView& pv,
                                                const Partition& part,
                                                const FitConfig& fcfg,
                                                double alpha_level,
                                                SubgroupTest test = SubgroupTest::wald) {
    DisaggregatedTrends out;
    out.trends.reserve(part.bins.size());
    double ll_fitted = 0.0;
    double ll_binmeans = 0.0;
    std::vector<double> bx, by;
    for (std::size_t k = 0; k < part.bins.size(); ++k) {
        const Bin& bin = part.bins[k];
        bx.clear();
        by.clear();
        bx.reserve(bin.rows.size());
        by.reserve(bin.rows.size());
        for (std::size_t r : bin.rows) {
            bx.push_back(pv.x_j[r]);
            by.push_back(pv.y[r]);
        }
        const double bin_null = null_loglik(by, fcfg.prob_clamp);
        SubgroupTrend t;
        t.bin_index = k;
        if (by.size() < 2) {
            // a lone row carries no trend; stand in for the fit directly
            t.fit.n = by.size();
            t.fit.status = FitStatus::degenerate_constant_y;
            t.fit.alpha = logit(std::clamp(by[0], fcfg.prob_clamp, 1.0 - fcfg.prob_clamp));
            t.fit.beta = 0.0;
            t.fit.loglik = bin_null;
        } else {
            t.fit = fit_logistic(bx, by, fcfg);
        }
        if (t.fit.status == FitStatus::degenerate_constant_y ||
            !std::isfinite(t.fit.se_beta) || t.fit.se_beta <= 0.0) {
            t.beta_p = 1.0;
        } else if (test == SubgroupTest::wald) {
            t.beta_p = wald_p(t.fit);
        } else {
            t.beta_p = chi2_sf(deviance(t.fit.loglik, bin_null), 1.0);
        }
        t.significant = t.beta_p < alpha_level && t.fit.status == FitStatus::converged;
        t.sign = sign_of(t.fit.beta);
        ll_fitted += t.fit.loglik;
        ll_binmeans += bin_null;
        out.trends.push_back(std::move(t));
    }
    out.deviance = deviance(ll_fitted, ll_binmeans);
    out.p = chi2_sf(out.deviance, static_cast<double>(part.bins.size()));
    return out;
}

// ============================================================================
// Reversal rule and ranking score
// ============================================================================

// A reversal needs a significant aggregate trend with a definite sign, and a
// strict majority of subgroups whose own trend is significant with the
// opposite sign.
inline bool detect_reversal(const LogisticFit& aggregate_fit, double aggregate_p,
                            const std::vector<SubgroupTrend>& trends,
                            double alpha_level,
                            ReversalBase base = ReversalBase::all_bins) {
    if (!(aggregate_p < alpha_level)) return false;
    const TrendSign agg = sign_of(aggregate_fit.beta);
    if (agg == TrendSign::zero) return false;
    const TrendSign opp = opposite(agg);
    std::size_t opposing = 0;
    std::size_t significant = 0;
    for (const auto& t : trends) {
        if (!t.significant) continue;
        ++significant;
        if (t.sign == opp) ++opposing;
    }
    const std::size_t denom =
        base == ReversalBase::all_bins ? trends.size() : significant;
    return 2 * opposing > denom;
}

// McFadden-style ratio of the summed per-bin fitted log-likelihoods to the
// global-mean null over the whole pair view, clamped into [0, 1].
inline double pseudo_r2(const std::vector<SubgroupTrend>& trends, const PairView& pv) {
    const double first = pv.y.empty() ? 0.0 : pv.y[0];
    bool constant = true;
    for (double v : pv.y)
        if (v != first) { constant = false; break; }
    if (constant) throw ConstantOutcome("pseudo_r2: outcome is constant");
    double ll_fitted = 0.0;
    for (const auto& t : trends) ll_fitted += t.fit.loglik;
    const double ll_null = null_loglik(pv.y);
    return std::clamp(1.0 - ll_fitted / ll_null, 0.0, 1.0);
}

// ============================================================================
// Full scan
// ============================================================================

namespace detail {

struct PairOutcome {
    std::optional<DisaggregationResult> result;
    std::optional<SkippedPair> skip;
};

inline PairOutcome evaluate_pair(const Dataset& ds, const std::string& x_j,
                                 const std::string& x_c, const ScanConfig& cfg) {
    PairOutcome out;
    PairView pv = pair_view(ds, x_j, x_c);
    if (pv.n < 2) {
        out.skip = SkippedPair{x_j, x_c, "too_few_rows"};
        return out;
    }
    bool constant = true;
    for (double v : pv.y)
        if (v != pv.y[0]) { constant = false; break; }
    if (constant) {
        out.skip = SkippedPair{x_j, x_c, "constant_outcome"};
        return out;
    }
    Partition part = build_partition(pv.x_c, pv.y, cfg.partition, x_c);
    if (part.bins.size() < 2) {
        out.skip = SkippedPair{x_j, x_c, "single_bin_partition"};
        return out;
    }

    DisaggregationResult res;
    res.x_j = x_j;
    res.x_c = x_c;
    res.n = pv.n;
    AggregateTrend agg = aggregate_trend(pv.x_j, pv.y, cfg.fit);
    res.aggregate_fit = agg.fit;
    res.aggregate_p = agg.p;
    DisaggregatedTrends dis =
        disaggregated_trends(pv, part, cfg.fit, cfg.alpha_level, cfg.subgroup_test);
    res.subgroup_trends = std::move(dis.trends);
    res.disagg_deviance = dis.deviance;
    res.disagg_p = dis.p;
    res.simpson_flag = detect_reversal(agg.fit, agg.p, res.subgroup_trends,
                                       cfg.alpha_level, cfg.reversal_base);
    res.pseudo_r2 = pseudo_r2(res.subgroup_trends, pv);
    res.partition = std::move(part);
    out.result = std::move(res);
    return out;
}

// Benjamini-Hochberg step-up adjustment, monotone form.
inline std::vector<double> bh_adjust(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adj(m, 1.0);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const std::size_t i = order[r];
        const double v = p[i] * static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, std::min(v, 1.0));
        adj[i] = running;
    }
    return adj;
}

} // namespace detail

// Evaluates every ordered covariate pair (x_j conditioned on x_c), keeps the
// pairs whose disaggregated trend test clears alpha, and ranks them by
// pseudo_r2. Pair evaluations run on a small thread pool; results land in
// per-pair slots, so the report does not depend on the worker count.
inline ScanReport scan(const Dataset& ds, const ScanConfig& cfg) {
    if (!(cfg.alpha_level > 0.0 && cfg.alpha_level < 1.0))
        throw DomainError("scan: alpha_level must lie in (0,1)");
    const std::vector<std::string> names = ds.covariate_names();
    if (names.size() < 2)
        throw TooFewCovariates("scan: need at least 2 covariates, have " +
                               std::to_string(names.size()));

    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(names.size() * (names.size() - 1));
    for (const auto& j : names)
        for (const auto& c : names)
            if (j != c) pairs.emplace_back(j, c);

    std::vector<detail::PairOutcome> slots(pairs.size());
    std::vector<std::exception_ptr> errors(pairs.size());

    std::size_t workers = cfg.workers;
    if (workers == 0) {
        workers = std::thread::hardware_concurrency();
        if (workers == 0) workers = 1;
    }
    workers = std::min(workers, pairs.size());

    std::atomic<std::size_t> next{0};
    auto drain = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pairs.size()) break;
            try {
                slots[i] = detail::evaluate_pair(ds, pairs[i].first, pairs[i].second, cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    ScanReport report;
    report.fingerprint = ds.fingerprint();
    report.config = cfg;

    std::vector<DisaggregationResult> evaluated;
    for (auto& slot : slots) {
        if (slot.result) {
            evaluated.push_back(std::move(*slot.result));
        } else {
            report.skipped.push_back(std::move(*slot.skip));
        }
    }
    report.pairs_examined = evaluated.size();
    report.pairs_skipped = report.skipped.size();

    if (cfg.bh_correction && !evaluated.empty()) {
        std::vector<double> raw(evaluated.size());
        for (std::size_t i = 0; i < evaluated.size(); ++i) raw[i] = evaluated[i].disagg_p;
        const std::vector<double> adj = detail::bh_adjust(raw);
        for (std::size_t i = 0; i < evaluated.size(); ++i) evaluated[i].disagg_p = adj[i];
    }

    for (auto& r : evaluated) {
        if (!(r.disagg_p < cfg.alpha_level)) continue;
        if (cfg.require_reversal && !r.simpson_flag) continue;
        report.results.push_back(std::move(r));
    }
    report.pairs_significant = report.results.size();

    std::sort(report.results.begin(), report.results.end(),
              [](const DisaggregationResult& a, const DisaggregationResult& b) {
                  if (a.pseudo_r2 != b.pseudo_r2) return a.pseudo_r2 > b.pseudo_r2;
                  if (a.x_j != b.x_j) return a.x_j < b.x_j;
                  return a.x_c < b.x_c;
              });
    return report;
}

} // namespace simpscan
