#pragma once

// Statistics used by the verification harness.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/fft.hpp"

namespace lrdlab::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value at effective size ne, using Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D).
inline double kolmogorov_p(double d, double ne) {
    const double root = std::sqrt(ne);
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

inline TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
    require(!sample.empty(), ErrorCode::InvalidParameter, "KS needs a nonempty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_p(d, n)};
}

inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::InvalidParameter, "KS needs nonempty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, kolmogorov_p(d, n * m / (n + m))};
}

inline std::complex<double> empirical_cf(std::span<const double> sample, double theta) {
    double re = 0.0, im = 0.0;
    for (double v : sample) {
        re += std::cos(theta * v);
        im += std::sin(theta * v);
    }
    const double n = static_cast<double>(sample.size());
    return {re / n, im / n};
}

/// sup over the grid of |empirical CF - cf|.
inline double ecf_distance(std::span<const double> sample, const std::function<std::complex<double>(double)>& cf,
                           std::span<const double> thetas) {
    double d = 0.0;
    for (double th : thetas) d = std::max(d, std::abs(empirical_cf(sample, th) - cf(th)));
    return d;
}

inline double ecf_distance(std::span<const double> a, std::span<const double> b, std::span<const double> thetas) {
    double d = 0.0;
    for (double th : thetas) d = std::max(d, std::abs(empirical_cf(a, th) - empirical_cf(b, th)));
    return d;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

inline double mean(std::span<const double> x) {
    require(!x.empty(), ErrorCode::InvalidParameter, "mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    require(x.size() >= 2, ErrorCode::InvalidParameter, "variance needs two observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

/// Linear-interpolation quantile of a sorted sample (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    require(!sorted.empty(), ErrorCode::InvalidParameter, "quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> x, double p) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, p);
}

inline double interquantile_range(std::span<const double> x, double lo = 0.25, double hi = 0.75) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, hi) - quantile_sorted(s, lo);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidParameter, "correlation needs paired data");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Mid-ranks, so ties share their average rank.
inline std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x), ry = ranks(y);
    return pearson(rx, ry);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidParameter, "regression needs paired data");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, ErrorCode::InvalidParameter, "regression needs distinct x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = y[i] - fit.intercept - fit.slope * x[i];
            rss += e * e;
        }
        fit.slope_se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
    }
    return fit;
}

/// Standard error of the mean from `batches` contiguous batch means.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 20) {
    require(batches >= 2 && x.size() >= batches, ErrorCode::InvalidParameter, "too few observations for batch means");
    const std::size_t len = x.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b)
        means[b] = mean(x.subspan(b * len, len));
    return std::sqrt(variance(means) / static_cast<double>(batches));
}

/// Biased (1/n) sample autocovariance at lags 0..max_lag.
inline std::vector<double> sample_autocovariance(std::span<const double> x, std::size_t max_lag) {
    require(max_lag < x.size(), ErrorCode::LagOutOfRange, "lag exceeds the sample length");
    const double m = mean(x);
    std::vector<double> centered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - m;
    const std::size_t size = fft::good_size(2 * x.size());
    auto spectrum = fft::rfft(centered, size);
    for (auto& z : spectrum) z = std::norm(z);
    auto full = fft::irfft(spectrum, size);
    full.resize(max_lag + 1);
    for (auto& v : full) v /= static_cast<double>(x.size());
    return full;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Anderson–Darling normality test with estimated mean and variance; the
/// p-value uses the modified statistic A*(1 + 0.75/n + 2.25/n^2) and the
/// D'Agostino–Stephens piecewise approximation.
inline TestResult anderson_darling_normal(std::span<const double> sample) {
    require(sample.size() >= 8, ErrorCode::InvalidParameter, "Anderson–Darling needs at least 8 observations");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double m = mean(x), sd = std::sqrt(variance(x));
    const auto n = static_cast<double>(x.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double zi = (x[i] - m) / sd;
        const double zj = (x[x.size() - 1 - i] - m) / sd;
        const double lo = std::log(std::max(normal_cdf(zi), 1e-300));
        const double hi = std::log(std::max(normal_cdf(-zj), 1e-300));
        s += (2.0 * static_cast<double>(i) + 1.0) * (lo + hi);
    }
    const double a2 = -n - s / n;
    const double a = a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
    double p;
    if (a >= 0.6) {
        // The quadratic turns upward past its minimum near a = 153; p is 0 there anyway.
        const double c = std::min(a, 153.0);
        p = std::exp(1.2937 - 5.709 * c + 0.0186 * c * c);
    }
    else if (a >= 0.34)
        p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    else if (a >= 0.2)
        p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    else
        p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
    return {a, std::clamp(p, 0.0, 1.0)};
}

}  // namespace lrdlab::stats
