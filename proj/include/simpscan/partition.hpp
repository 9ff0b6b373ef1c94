#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace simpscan {

// ============================================================================
// Configuration and result types
// ============================================================================

struct PartitionConfig {
    std::size_t max_bins = 20;      // upper bound on number of bins
    std::size_t min_bin_size = 100; // each bin keeps at least this many rows
    double min_gain = 1e-12;        // minimum explained-variance gain per split
};

// One bin of a partition over a single covariate. Ranges are half-open on the
// left: the first bin is (-inf, upper], interior bins (lower, upper], and the
// last bin (lower, +inf). Stored bounds are the observed data extremes.
struct Bin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_y = 0.0;
    std::vector<std::size_t> rows; // indices into the pair view, ascending
};

struct Partition {
    std::string covariate;
    std::vector<double> splits; // ascending thresholds, size = bins.size() - 1
    std::vector<Bin> bins;
    double sst = 0.0; // total sum of squares of y
    double r2 = 0.0;  // fraction of outcome variance explained by bin means
};

// ============================================================================
// Variance accounting
// ============================================================================

// Two-pass total sum of squares; the second pass keeps cancellation error
// small when the mean dominates the spread.
inline double total_sum_of_squares(std::span<const double> y) {
    if (y.empty()) throw EmptyInput("total_sum_of_squares: empty input");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sst = 0.0;
    for (double v : y) {
        const double d = v - mean;
        sst += d * d;
    }
    return sst;
}

inline double partition_r2(const Partition& p) {
    if (p.sst <= 0.0) throw ZeroVariance("partition_r2: outcome has zero variance");
    double ssb = 0.0;
    double total = 0.0;
    double count = 0.0;
    for (const auto& b : p.bins) {
        total += b.mean_y * static_cast<double>(b.count);
        count += static_cast<double>(b.count);
    }
    const double grand = total / count;
    for (const auto& b : p.bins) {
        const double d = b.mean_y - grand;
        ssb += static_cast<double>(b.count) * d * d;
    }
    return std::clamp(ssb / p.sst, 0.0, 1.0);
}

// ============================================================================
// Single best split
// ============================================================================

struct SplitChoice {
    double value = 0.0;      // threshold; rows with x <= value go left
    double delta_r2 = 0.0;   // gain in explained-variance fraction
    std::size_t left_count = 0;
};

// Scans every admissible threshold over (x, y), already sorted by x, and
// returns the split with the largest variance gain. Candidate thresholds are
// midpoints between distinct consecutive x values; each side must keep at
// least min_bin_size rows. Gain for a segment holding S = sum(y), m rows:
//
//   gain = S_L^2/c + S_R^2/(m-c) - S^2/m        (in absolute SS units)
//
// which is the between-bins sum of squares added by the cut. delta_r2 is that
// gain divided by the caller's total SST. Ties resolve to the smallest
// threshold. Returns nullopt when no admissible cut clears min_gain.
inline std::optional<SplitChoice> best_split(std::span<const double> x_sorted,
                                             std::span<const double> y_sorted,
                                             double sst,
                                             const PartitionConfig& cfg) {
    const std::size_t m = x_sorted.size();
    if (m != y_sorted.size())
        throw LengthMismatch("best_split: x and y lengths differ");
    if (sst <= 0.0) throw ZeroVariance("best_split: zero total sum of squares");
    if (m < 2 * cfg.min_bin_size) return std::nullopt;

    double total = 0.0;
    for (double v : y_sorted) total += v;

    double best_gain = 0.0;
    double best_value = 0.0;
    std::size_t best_left = 0;
    bool found = false;

    double left = 0.0;
    for (std::size_t c = 1; c < m; ++c) {
        left += y_sorted[c - 1];
        if (c < cfg.min_bin_size) continue;
        if (m - c < cfg.min_bin_size) break;
        if (x_sorted[c] <= x_sorted[c - 1]) continue; // no boundary between equal values
        const double right = total - left;
        const double gain = left * left / static_cast<double>(c) +
                            right * right / static_cast<double>(m - c) -
                            total * total / static_cast<double>(m);
        if (!found || gain > best_gain) {
            best_gain = gain;
            best_value = 0.5 * (x_sorted[c - 1] + x_sorted[c]);
            best_left = c;
            found = true;
        }
    }
    if (!found) return std::nullopt;
    const double delta_r2 = best_gain / sst;
    if (delta_r2 <= cfg.min_gain) return std::nullopt;
    return SplitChoice{best_value, delta_r2, best_left};
}

// ============================================================================
// Greedy recursive partition
// ============================================================================

namespace detail {

struct SegmentRange {
    std::size_t lo = 0; // inclusive
    std::size_t hi = 0; // exclusive
    std::optional<SplitChoice> choice;
    bool evaluated = false;
};

} // namespace detail

// Builds a binned partition of x by repeated greedy splitting. Each round
// evaluates the best admissible cut inside every current segment and applies
// the single cut with the largest variance gain; ties go to the leftmost
// segment. Splitting stops at max_bins, or when no segment offers a gain
// above min_gain. A constant outcome yields one bin with r2 = 0.
inline Partition build_partition(std::span<const double> x,
                                 std::span<const double> y,
                                 const PartitionConfig& cfg,
                                 const std::string& covariate_name = "") {
    const std::size_t n = x.size();
    if (n != y.size()) throw LengthMismatch("build_partition: x and y lengths differ");
    if (n == 0) throw EmptyInput("build_partition: empty input");
    if (cfg.max_bins < 1) throw DomainError("build_partition: max_bins must be >= 1");
    if (cfg.min_bin_size < 1) throw DomainError("build_partition: min_bin_size must be >= 1");

    // sort once by (x, original index) so equal x values keep input order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return a < b;
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    Partition part;
    part.covariate = covariate_name;
    part.sst = total_sum_of_squares(ys);

    std::vector<detail::SegmentRange> segs;
    segs.push_back({0, n, std::nullopt, false});

    if (part.sst > 0.0) {
        while (segs.size() < cfg.max_bins) {
            // refresh candidate cuts for any segment not yet evaluated
            for (auto& s : segs) {
                if (s.evaluated) continue;
                s.choice = best_split(std::span(xs).subspan(s.lo, s.hi - s.lo),
                                      std::span(ys).subspan(s.lo, s.hi - s.lo),
                                      part.sst, cfg);
                s.evaluated = true;
            }
            std::size_t pick = segs.size();
            double best = cfg.min_gain;
            for (std::size_t k = 0; k < segs.size(); ++k) {
                if (!segs[k].choice) continue;
                if (segs[k].choice->delta_r2 > best) {
                    best = segs[k].choice->delta_r2;
                    pick = k;
                }
            }
            if (pick == segs.size()) break;

            const auto& s = segs[pick];
            const std::size_t cut = s.lo + s.choice->left_count;
            detail::SegmentRange left{s.lo, cut, std::nullopt, false};
            detail::SegmentRange right{cut, s.hi, std::nullopt, false};
            segs[pick] = left;
            segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(pick) + 1, right);
        }
    }

    // materialize bins; thresholds are midpoints across segment boundaries
    part.bins.reserve(segs.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const auto& s = segs[k];
        Bin b;
        b.lower = xs[s.lo];
        b.upper = xs[s.hi - 1];
        b.count = s.hi - s.lo;
        double sum = 0.0;
        b.rows.reserve(b.count);
        for (std::size_t i = s.lo; i < s.hi; ++i) {
            sum += ys[i];
            b.rows.push_back(order[i]);
        }
        b.mean_y = sum / static_cast<double>(b.count);
        std::sort(b.rows.begin(), b.rows.end());
        part.bins.push_back(std::move(b));
        if (k + 1 < segs.size())
            part.splits.push_back(0.5 * (xs[s.hi - 1] + xs[segs[k + 1].lo]));
    }
    part.r2 = part.sst > 0.0 ? partition_r2(part) : 0.0;
    return part;
}

// Bin index for a value under the partition's thresholds: bin 0 takes
// x <= splits[0], bin k takes splits[k-1] < x <= splits[k], the last bin
// takes everything above the final threshold.
inline std::size_t bin_index(const Partition& p, double v) {
    std::size_t k = 0;
    while (k < p.splits.size() && v > p.splits[k]) ++k;
    return k;
}

} // namespace simpscan
