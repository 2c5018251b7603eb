#pragma once

// Quadrature rules and Gaussian-weight integrators shared by the chaos, tail
// and regime modules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "lrdlab/error.hpp"

namespace lrdlab::quad {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

template <class Build>
const GaussRule& cached_rule(std::map<std::size_t, GaussRule>& cache, std::mutex& mutex, std::size_t n,
                             Build&& build) {
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build(n)).first;
    return it->second;
}

// Golub–Welsch: eigenvalues of the Jacobi matrix are the nodes, the squared
// first eigenvector components (times the total mass) are the weights.
inline GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mass) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    const auto n = static_cast<std::size_t>(diag.size());
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
        const double v = solver.eigenvectors()(0, static_cast<Eigen::Index>(i));
        rule.weights[i] = mass * v * v;
    }
    return rule;
}

// Orthonormal (probabilists') Hermite values p_{n-1}(x), p_n(x) with a
// running power-of-two exponent so large n and |x| do not overflow.
inline void orthonormal_hermite_pair(std::size_t n, double x, double& prev, double& curr, int& exponent) {
    prev = 0.0;
    curr = 1.0;
    exponent = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double next = (x * curr - std::sqrt(static_cast<double>(k)) * prev) /
                            std::sqrt(static_cast<double>(k + 1));
        prev = curr;
        curr = next;
        if (std::abs(curr) > 0x1.0p+400) {
            curr = std::ldexp(curr, -400);
            prev = std::ldexp(prev, -400);
            exponent += 400;
        }
    }
}

inline GaussRule build_gauss_legendre(std::size_t n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
    return rule;
}

inline GaussRule build_gauss_hermite(std::size_t n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    for (Eigen::Index i = 0; i < off.size(); ++i) off(i) = std::sqrt(static_cast<double>(i + 1));
    GaussRule rule = golub_welsch(diag, off, 1.0);
    // Newton polish on p_n, then weights 1 / (n p_{n-1}^2) evaluated in log
    // space: accurate in relative terms even where the weights are tiny.
    for (std::size_t i = 0; i < n; ++i) {
        double x = rule.nodes[i];
        double prev, curr;
        int exponent;
        for (int iter = 0; iter < 3; ++iter) {
            orthonormal_hermite_pair(n, x, prev, curr, exponent);
            x -= curr / (std::sqrt(static_cast<double>(n)) * prev);
        }
        orthonormal_hermite_pair(n, x, prev, curr, exponent);
        const double log_prev = std::log(std::abs(prev)) + exponent * std::numbers::ln2;
        rule.nodes[i] = x;
        rule.weights[i] = std::exp(-std::log(static_cast<double>(n)) - 2.0 * log_prev);
    }
    // Exact symmetry.
    for (std::size_t i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

inline GaussRule build_gauss_laguerre(std::size_t n) {
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    for (Eigen::Index i = 0; i < diag.size(); ++i) diag(i) = 2.0 * static_cast<double>(i) + 1.0;
    for (Eigen::Index i = 0; i < off.size(); ++i) off(i) = static_cast<double>(i + 1);
    return golub_welsch(diag, off, 1.0);
}

}  // namespace detail

/// Gauss–Legendre rule on [-1, 1].
inline const GaussRule& gauss_legendre(std::size_t n) {
    static std::map<std::size_t, GaussRule> cache;
    static std::mutex mutex;
    return detail::cached_rule(cache, mutex, n, detail::build_gauss_legendre);
}

/// Gauss–Hermite rule for the standard normal law: sum_i w_i g(x_i) ~ E g(X),
/// with the weights summing to one.
inline const GaussRule& gauss_hermite(std::size_t n) {
    static std::map<std::size_t, GaussRule> cache;
    static std::mutex mutex;
    return detail::cached_rule(cache, mutex, n, detail::build_gauss_hermite);
}

/// Gauss–Laguerre rule for the weight e^{-x} on [0, inf).
inline const GaussRule& gauss_laguerre(std::size_t n) {
    static std::map<std::size_t, GaussRule> cache;
    static std::mutex mutex;
    return detail::cached_rule(cache, mutex, n, detail::build_gauss_laguerre);
}

template <class F>
double integrate_panel(F&& f, double a, double b, const GaussRule& rule) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

/// Composite rule over [a, b] split into panels no wider than `width`.
template <class F>
double integrate_uniform(F&& f, double a, double b, double width, const GaussRule& rule) {
    if (!(b > a)) return 0.0;
    const auto panels = static_cast<std::size_t>(std::ceil((b - a) / width));
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const double hi = (p + 1 == panels) ? b : lo + h;
        sum += integrate_panel(f, lo, hi, rule);
    }
    return sum;
}

/// Beyond this point the standard normal density is below 1e-300.
inline constexpr double kGaussianCutoff = 38.5;

/// \brief Computes  int_{t_lo}^{t_hi} t^r g(t) phi(t) dt  for 0 <= t_lo < t_hi.
///
/// `g` must be smooth on the interval. The power singularity at the origin is
/// removed by the substitution u = t^{1+r} (requires r > -1 when t_lo = 0),
/// integrated on panels graded geometrically toward u = 0. A positive t_lo
/// below one is handled in log t so steep powers near t_lo stay resolved.
template <class G>
double power_gaussian_integral(double r, G&& g, double t_lo = 0.0,
                               double t_hi = std::numeric_limits<double>::infinity()) {
    const GaussRule& rule = gauss_legendre(20);
    t_hi = std::min(t_hi, kGaussianCutoff);
    if (!(t_hi > t_lo)) return 0.0;
    double total = 0.0;
    const double split = std::min(1.0, t_hi);
    if (t_lo < split) {
        if (t_lo == 0.0) {
            require(r > -1.0, ErrorCode::NonIntegrable, "power weight t^r with r <= -1 is not integrable at 0");
            const double p = 1.0 + r;
            const double u_top = std::pow(split, p);
            auto integrand = [&](double u) {
                const double t = std::pow(u, 1.0 / p);
                return g(t) * normal_pdf(t) / p;
            };
            double hi = u_top;
            for (int k = 0; k < 90; ++k) {
                const double lo = 0.5 * hi;
                total += integrate_panel(integrand, lo, hi, rule);
                hi = lo;
            }
            total += integrate_panel(integrand, 0.0, hi, rule);
        } else {
            auto integrand = [&](double v) {
                const double t = std::exp(v);
                return std::exp((r + 1.0) * v) * g(t) * normal_pdf(t);
            };
            total += integrate_uniform(integrand, std::log(t_lo), std::log(split), 0.25, rule);
        }
    }
    const double upper_lo = std::max(t_lo, split);
    if (t_hi > upper_lo) {
        auto integrand = [&](double t) { return std::pow(t, r) * g(t) * normal_pdf(t); };
        total += integrate_uniform(integrand, upper_lo, t_hi, 0.25, rule);
    }
    return total;
}

}  // namespace lrdlab::quad
