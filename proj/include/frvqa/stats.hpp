// Copyright 2026 The FRVQA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "frvqa/util.hpp"

namespace frvqa {

// Fractional (average) ranks, 1-based. Tied observations share the mean of the
// positions they occupy.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of positions i..j
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank-order correlation with average-rank tie handling.
inline double srocc(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "srocc: length mismatch");
    require(x.size() >= 3, "srocc: need at least 3 points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        sx += rx[i];
        sy += ry[i];
        sxx += rx[i] * rx[i];
        syy += ry[i] * ry[i];
        sxy += rx[i] * ry[i];
    }
    const double vx = n * sxx - sx * sx;
    const double vy = n * syy - sy * sy;
    if (vx <= 0.0 || vy <= 0.0) fail("srocc: undefined for a constant input");
    return (n * sxy - sx * sy) / std::sqrt(vx * vy);
}

// Kendall tau-b (tie-corrected), O(n^2) pair enumeration.
inline double krcc(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "krcc: length mismatch");
    require(x.size() >= 3, "krcc: need at least 3 points");
    const size_t n = x.size();
    double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0) ties_x += 1;
            if (dy == 0.0) ties_y += 1;
            if (dx == 0.0 || dy == 0.0) continue;
            if (dx * dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double dx_pairs = n0 - ties_x;
    const double dy_pairs = n0 - ties_y;
    if (dx_pairs <= 0.0 || dy_pairs <= 0.0) {
        fail("krcc: denominator undefined, one input is entirely tied");
    }
    return (concordant - discordant) / std::sqrt(dx_pairs * dy_pairs);
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta and the F distribution CDF.
// ---------------------------------------------------------------------------

namespace detail {

// Continued-fraction evaluation (modified Lentz) of the incomplete beta.
inline double betacf(double a, double b, double x) {
    constexpr double kFpMin = 1e-300;
    constexpr double kEps = 3e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// I_x(a, b), regularized.
inline double incomplete_beta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "incomplete_beta: a, b must be positive");
    require(x >= 0.0 && x <= 1.0, "incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                         b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * detail::betacf(a, b, x) / a;
    }
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// P(F <= x) for an F distribution with d1, d2 degrees of freedom.
inline double f_cdf(double x, double d1, double d2) {
    require(d1 > 0.0 && d2 > 0.0, "f_cdf: degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

inline double sample_variance(const std::vector<double>& v) {
    require(v.size() >= 2, "variance needs at least 2 points");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size() - 1);
}

// Two-tailed variance-ratio test between two residual vectors gathered on the
// same benchmark entries. Returns +1 when a's residual variance is
// significantly smaller than b's, -1 when larger, 0 otherwise. Written in a
// canonical orientation so swapping the arguments negates the verdict exactly.
inline int f_test(const std::vector<double>& residuals_a, const std::vector<double>& residuals_b,
                  double alpha = 0.05) {
    require(residuals_a.size() == residuals_b.size(),
            "f_test: residual vectors must come from the same entries");
    require(residuals_a.size() >= 3, "f_test: need at least 3 residuals");
    require(alpha > 0.0 && alpha < 1.0, "f_test: alpha outside (0, 1)");
    const double va = sample_variance(residuals_a);
    const double vb = sample_variance(residuals_b);
    if (va == vb) return 0;
    if (va < vb) {
        if (vb == 0.0) return 0;
        const double df = static_cast<double>(residuals_a.size() - 1);
        const double cdf = f_cdf(va / vb, df, df);
        return cdf < alpha / 2.0 ? 1 : 0;
    }
    return -f_test(residuals_b, residuals_a, alpha);
}

// ---------------------------------------------------------------------------
// Monotone 4-parameter logistic fit
//     subj ~ b1 * (1/2 - 1 / (1 + exp(b2 * (pred - b3)))) + b4
// Least squares via variable projection: (b1, b4) enter linearly and are
// profiled in closed form; Levenberg-Marquardt runs over (b2, b3) only.
// Started from b2 = +-1/std(pred), b3 = mean(pred); the better of the two
// deterministic starts wins, which lets the curve flip orientation when the
// predictor has reversed polarity.
// ---------------------------------------------------------------------------

struct LogisticFitResult {
    std::array<double, 4> params{};      // b1..b4; slope/intercept when linear_fallback
    std::vector<double> residuals;       // input order, subj - fit
    double sse = 0.0;
    bool converged = false;
    bool linear_fallback = false;
    std::string diagnostic;
};

namespace detail {

inline double stable_inv_logit(double u) {
    // 1 / (1 + exp(u)) without overflow
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

struct ProfiledFit {
    double b1 = 0.0, b4 = 0.0;
    double sse = std::numeric_limits<double>::infinity();
    bool singular = false;
};

inline ProfiledFit profile_linear(double b2, double b3, const std::vector<double>& pred,
                                  const std::vector<double>& subj, std::vector<double>* residuals) {
    const size_t n = pred.size();
    double sg = 0, sgg = 0, sy = 0, sgy = 0;
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) {
        g[i] = 0.5 - stable_inv_logit(b2 * (pred[i] - b3));
        sg += g[i];
        sgg += g[i] * g[i];
        sy += subj[i];
        sgy += g[i] * subj[i];
    }
    ProfiledFit fit;
    const double det = static_cast<double>(n) * sgg - sg * sg;
    if (det <= 1e-14 * (static_cast<double>(n) * sgg + 1e-300)) {
        fit.singular = true;
        fit.b1 = 0.0;
        fit.b4 = sy / static_cast<double>(n);
    } else {
        fit.b1 = (static_cast<double>(n) * sgy - sg * sy) / det;
        fit.b4 = (sy * sgg - sg * sgy) / det;
    }
    fit.sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = subj[i] - (fit.b1 * g[i] + fit.b4);
        if (residuals) (*residuals)[i] = r;
        fit.sse += r * r;
    }
    return fit;
}

}  // namespace detail

inline LogisticFitResult linear_fit(const std::vector<double>& pred,
                                    const std::vector<double>& subj) {
    const double n = static_cast<double>(pred.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        sx += pred[i];
        sy += subj[i];
        sxx += pred[i] * pred[i];
        sxy += pred[i] * subj[i];
    }
    const double det = n * sxx - sx * sx;
    double slope = 0.0, intercept = sy / n;
    if (det > 0.0) {
        slope = (n * sxy - sx * sy) / det;
        intercept = (sy - slope * sx) / n;
    }
    LogisticFitResult result;
    result.linear_fallback = true;
    result.params = {slope, intercept, 0.0, 0.0};
    result.residuals.resize(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        result.residuals[i] = subj[i] - (slope * pred[i] + intercept);
        result.sse += result.residuals[i] * result.residuals[i];
    }
    return result;
}

inline LogisticFitResult logistic_fit(const std::vector<double>& pred,
                                      const std::vector<double>& subj, int max_iterations = 300) {
    require(pred.size() == subj.size(), "logistic_fit: length mismatch");
    require(pred.size() >= 5, "logistic_fit: need at least 5 points");
    const size_t n = pred.size();
    {
        const double first = subj[0];
        bool constant = true;
        for (double v : subj) constant = constant && v == first;
        require(!constant, "logistic_fit: subjective scores are constant");
    }

    double mean_pred = 0.0;
    for (double v : pred) mean_pred += v;
    mean_pred /= static_cast<double>(n);
    double var_pred = 0.0;
    for (double v : pred) var_pred += (v - mean_pred) * (v - mean_pred);
    var_pred /= static_cast<double>(n);
    const double std_pred = std::sqrt(var_pred);

    if (std_pred == 0.0) {
        auto result = linear_fit(pred, subj);
        result.diagnostic = "constant predictor, linear fallback";
        return result;
    }

    struct Candidate {
        double b2, b3, sse;
        bool converged;
    };

    auto optimise = [&](double b2_init) {
        double b2 = b2_init, b3 = mean_pred;
        std::vector<double> scratch(n);
        double sse = detail::profile_linear(b2, b3, pred, subj, &scratch).sse;
        double lambda = 1e-3;
        bool converged = false;
        std::vector<double> r0(n), rp(n);
        for (int iter = 0; iter < max_iterations; ++iter) {
            detail::profile_linear(b2, b3, pred, subj, &r0);
            // Numerical Jacobian of the profiled residual wrt (b2, b3). The
            // step is generous: residuals shrink like b2^2 near a linear
            // relationship and a too-small step drowns in rounding noise.
            const double h2 = std::max(std::fabs(b2), 1e-9) * 1e-3;
            const double h3 = std::max(std::fabs(b3), std::max(std_pred, 1e-9)) * 1e-4;
            std::vector<double> j2(n), j3(n);
            detail::profile_linear(b2 + h2, b3, pred, subj, &rp);
            for (size_t i = 0; i < n; ++i) j2[i] = (rp[i] - r0[i]) / h2;
            detail::profile_linear(b2, b3 + h3, pred, subj, &rp);
            for (size_t i = 0; i < n; ++i) j3[i] = (rp[i] - r0[i]) / h3;

            double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
            for (size_t i = 0; i < n; ++i) {
                a11 += j2[i] * j2[i];
                a12 += j2[i] * j3[i];
                a22 += j3[i] * j3[i];
                g1 += j2[i] * r0[i];
                g2 += j3[i] * r0[i];
            }

            bool accepted = false;
            for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
                const double d11 = a11 * (1.0 + lambda);
                const double d22 = a22 * (1.0 + lambda);
                const double det = d11 * d22 - a12 * a12;
                if (det == 0.0 || !std::isfinite(det)) {
                    lambda *= 10.0;
                    continue;
                }
                const double step2 = (d22 * g1 - a12 * g2) / det;
                const double step3 = (d11 * g2 - a12 * g1) / det;
                const double nb2 = b2 - step2;
                const double nb3 = b3 - step3;
                const double nsse = detail::profile_linear(nb2, nb3, pred, subj, &scratch).sse;
                if (std::isfinite(nsse) && nsse < sse) {
                    const double improvement = sse - nsse;
                    b2 = nb2;
                    b3 = nb3;
                    sse = nsse;
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    if (improvement <= 1e-12 * sse + 1e-28) {
                        converged = true;
                    }
                } else {
                    lambda *= 10.0;
                    if (lambda > 1e14) break;
                }
            }
            if (!accepted) {
                // No descent direction left at this scale: stationary point.
                converged = true;
            }
            if (converged) break;
        }
        return Candidate{b2, b3, sse, converged};
    };

    const Candidate up = optimise(1.0 / std_pred);
    const Candidate down = optimise(-1.0 / std_pred);
    const Candidate& best = down.sse < up.sse ? down : up;

    LogisticFitResult result;
    result.residuals.resize(n);
    const auto profiled = detail::profile_linear(best.b2, best.b3, pred, subj, &result.residuals);
    result.params = {profiled.b1, best.b2, best.b3, profiled.b4};
    result.sse = profiled.sse;
    result.converged = best.converged;
    if (!best.converged) {
        auto fallback = linear_fit(pred, subj);
        fallback.diagnostic = "logistic fit hit the iteration cap, linear fallback";
        return fallback;
    }
    return result;
}

}  // namespace frvqa
