#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <span>

#include "errors.hpp"

namespace simpscan {

enum class FitStatus { converged, max_iter, degenerate_constant_y, ridge_bounded };

struct FitConfig {
    std::size_t max_iter = 100;
    double loglik_tol = 1e-10;
    double ridge = 1e-8;
    double prob_clamp = 1e-12;
};

// Intercept + single-slope logistic model y ~ Bernoulli(sigmoid(a + b x)).
struct LogisticFit {
    double alpha = 0.0;
    double beta = 0.0;
    double loglik = 0.0;
    std::size_t n = 0;
    double se_alpha = std::numeric_limits<double>::quiet_NaN();
    double se_beta = std::numeric_limits<double>::quiet_NaN();
    std::size_t iterations = 0;
    FitStatus status = FitStatus::converged;
};

inline double logistic_cdf(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("logit: p must lie in (0,1)");
    return std::log(p / (1.0 - p));
}

// Bernoulli log likelihood at (a, b) with success and failure probabilities
// clamped away from 0 together, so log p and log(1-p) both stay finite.
inline double log_likelihood(std::span<const double> x, std::span<const double> y,
                             double a, double b, double clamp = 1e-12) {
    if (x.size() != y.size()) throw LengthMismatch("log_likelihood: x and y lengths differ");
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = a + b * x[i];
        double p = logistic_cdf(t);
        double q = logistic_cdf(-t);
        if (p < clamp) { p = clamp; q = 1.0 - clamp; }
        if (q < clamp) { q = clamp; p = 1.0 - clamp; }
        ll += y[i] != 0.0 ? std::log(p) : std::log(q);
    }
    return ll;
}

// Log likelihood of the intercept-only null model, evaluated at the sample
// mean of y (its maximizer).
inline double null_loglik(std::span<const double> y, double clamp = 1e-12) {
    if (y.empty()) throw EmptyInput("null_loglik: empty input");
    double n1 = 0.0;
    for (double v : y) n1 += v;
    const double n = static_cast<double>(y.size());
    double p = n1 / n;
    p = std::clamp(p, clamp, 1.0 - clamp);
    return n1 * std::log(p) + (n - n1) * std::log(1.0 - p);
}

// Maximum-likelihood fit by damped Newton iteration on the two-parameter
// score. The ridge term only regularizes the step (it is added to the
// Hessian diagonal, not the objective), so the fixed point is the plain MLE.
// Perfectly separated inputs cannot converge; they are detected up front and
// fitted for max_iter steps, reported as ridge_bounded.
inline LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y,
                                const FitConfig& cfg = {}) {
    const std::size_t n = x.size();
    if (n != y.size()) throw LengthMismatch("fit_logistic: x and y lengths differ");
    if (n < 2) throw EmptyInput("fit_logistic: need at least 2 rows");

    LogisticFit fit;
    fit.n = n;

    double n1 = 0.0;
    for (double v : y) n1 += v;
    if (n1 == 0.0 || n1 == static_cast<double>(n)) {
        fit.status = FitStatus::degenerate_constant_y;
        const double p = std::clamp(n1 / static_cast<double>(n), cfg.prob_clamp,
                                    1.0 - cfg.prob_clamp);
        fit.alpha = logit(p);
        fit.beta = 0.0;
        fit.loglik = null_loglik(y, cfg.prob_clamp);
        return fit;
    }

    double max_abs_x = 0.0;
    for (double v : x) max_abs_x = std::max(max_abs_x, std::abs(v));

    // detect exact 1-d separation: all x for y=0 strictly on one side of all
    // x for y=1
    double max0 = -std::numeric_limits<double>::infinity();
    double min0 = std::numeric_limits<double>::infinity();
    double max1 = -std::numeric_limits<double>::infinity();
    double min1 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] != 0.0) { max1 = std::max(max1, x[i]); min1 = std::min(min1, x[i]); }
        else             { max0 = std::max(max0, x[i]); min0 = std::min(min0, x[i]); }
    }
    const bool separated = (max0 < min1) || (max1 < min0);

    double a = logit(std::clamp(n1 / static_cast<double>(n), cfg.prob_clamp, 1.0 - cfg.prob_clamp));
    double b = 0.0;
    double ll = log_likelihood(x, y, a, b, cfg.prob_clamp);

    const double score_tol_a = 1e-8 * static_cast<double>(n);
    const double score_tol_b = score_tol_a * std::max(1.0, max_abs_x);

    bool converged = false;
    std::size_t steps = 0;
    double last_delta = std::numeric_limits<double>::infinity();
    for (std::size_t pass = 0; pass <= cfg.max_iter; ++pass) {
        double g0 = 0.0, g1 = 0.0;        // score at the current point
        double h00 = 0.0, h01 = 0.0, h11 = 0.0; // negative Hessian
        for (std::size_t i = 0; i < n; ++i) {
            const double p = logistic_cdf(a + b * x[i]);
            const double r = y[i] - p;
            const double w = p * (1.0 - p);
            g0 += r;
            g1 += r * x[i];
            h00 += w;
            h01 += w * x[i];
            h11 += w * x[i] * x[i];
        }
        if (last_delta < cfg.loglik_tol && !separated &&
            std::abs(g0) <= score_tol_a && std::abs(g1) <= score_tol_b) {
            converged = true;
            break;
        }
        if (pass == cfg.max_iter) break;

        h00 += cfg.ridge;
        h11 += cfg.ridge;
        const double det = h00 * h11 - h01 * h01;
        if (!(det > 0.0) || !std::isfinite(det))
            throw DegenerateFit("fit_logistic: singular weighted design");
        const double da = (h11 * g0 - h01 * g1) / det;
        const double db = (h00 * g1 - h01 * g0) / det;
        if (!std::isfinite(da) || !std::isfinite(db))
            throw DegenerateFit("fit_logistic: non-finite update step");

        // halve the step until the likelihood stops decreasing
        double step = 1.0;
        double ll_new = log_likelihood(x, y, a + da, b + db, cfg.prob_clamp);
        while (!(ll_new >= ll) && step > 1e-12) {
            step *= 0.5;
            ll_new = log_likelihood(x, y, a + step * da, b + step * db, cfg.prob_clamp);
        }
        if (!(ll_new >= ll)) { ll_new = ll; step = 0.0; }
        a += step * da;
        b += step * db;
        last_delta = std::abs(ll_new - ll);
        ll = ll_new;
        ++steps;
    }

    fit.alpha = a;
    fit.beta = b;
    fit.loglik = ll;
    fit.iterations = steps;
    fit.status = separated ? FitStatus::ridge_bounded
                           : (converged ? FitStatus::converged : FitStatus::max_iter);

    // standard errors from the undamped observed information at the
    // solution; a design with no usable x variation leaves it singular, in
    // which case the damped information stands in (enormous but finite
    // errors, so the slope can never look significant) and the fit is
    // flagged as ridge-determined
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = logistic_cdf(a + b * x[i]);
        const double w = p * (1.0 - p);
        h00 += w;
        h01 += w * x[i];
        h11 += w * x[i] * x[i];
    }
    double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) {
        fit.status = FitStatus::ridge_bounded;
        h00 += cfg.ridge;
        h11 += cfg.ridge;
        det = h00 * h11 - h01 * h01;
    }
    if (det > 0.0 && std::isfinite(det)) {
        fit.se_alpha = std::sqrt(h11 / det);
        fit.se_beta = std::sqrt(h00 / det);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// chi-square tail probability via the regularized incomplete gamma function
// ---------------------------------------------------------------------------

namespace detail {

inline double gammln(double xx) {
    static const double cof[6] = {76.18009172947146,     -86.50532032941677,
                                  24.01409824083091,     -1.231739572450155,
                                  0.1208650973866179e-2, -0.5395239384953e-5};
    double x = xx;
    double y = xx;
    double tmp = x + 5.5;
    tmp -= (x + 0.5) * std::log(tmp);
    double ser = 1.000000000190015;
    for (int j = 0; j <= 5; ++j) ser += cof[j] / ++y;
    return -tmp + std::log(2.5066282746310005 * ser / x);
}

// series expansion of the lower regularized gamma P(a,x), valid for x < a+1
inline double gser(double a, double x) {
    const int itmax = 500;
    const double eps = std::numeric_limits<double>::epsilon();
    if (x <= 0.0) return 0.0;
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < itmax; ++i) {
        ++ap;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * eps)
            return sum * std::exp(-x + a * std::log(x) - gammln(a));
    }
    throw DomainError("gser: series failed to converge");
}

// continued fraction for the upper regularized gamma Q(a,x), valid for x >= a+1
inline double gcf(double a, double x) {
    const int itmax = 500;
    const double eps = std::numeric_limits<double>::epsilon();
    const double fpmin = std::numeric_limits<double>::min() / eps;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    int i = 1;
    for (; i <= itmax; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= eps) break;
    }
    if (i > itmax) throw DomainError("gcf: continued fraction failed to converge");
    return std::exp(-x + a * std::log(x) - gammln(a)) * h;
}

inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gser(a, x);
    return gcf(a, x);
}

} // namespace detail

// Upper tail P(X > x) for X ~ chi-square with df degrees of freedom.
inline double chi2_sf(double x, double df) {
    if (!(df >= 1.0)) throw DomainError("chi2_sf: df must be >= 1");
    if (!(x >= 0.0)) throw DomainError("chi2_sf: x must be >= 0");
    return detail::gamma_q(0.5 * df, 0.5 * x);
}

// Likelihood-ratio statistic 2 (ll_full - ll_null), floored at zero. A
// materially negative input signals a failed fit; it is still floored but
// reported on the warning stream.
inline double deviance(double ll_full, double ll_null, std::ostream& warnings = std::cerr) {
    const double d = 2.0 * (ll_full - ll_null);
    if (d >= 0.0) return d;
    if (d < -1e-9 * std::max(1.0, std::abs(ll_null)))
        warnings << "warning: negative deviance " << d << " clamped to zero\n";
    return 0.0;
}

// Two-sided Wald p-value for beta = 0.
inline double wald_p(const LogisticFit& fit) {
    if (fit.status == FitStatus::degenerate_constant_y)
        throw DegenerateFit("wald_p: constant-outcome fit has no slope test");
    if (!std::isfinite(fit.se_beta) || fit.se_beta <= 0.0)
        throw DegenerateFit("wald_p: no usable standard error");
    const double z = fit.beta / fit.se_beta;
    if (std::isnan(z)) return 1.0;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

} // namespace simpscan
