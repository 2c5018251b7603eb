#pragma once

// Reference values computed without the library: closed forms, series and
// Boost.Math quadrature.

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline double factorial(unsigned k) { return boost::math::factorial<double>(k); }

/// psi by direct quadrature: tanh-sinh on (0, 1], Ooura's sine transform on (1, inf).
inline double psi_quadrature() {
    boost::math::quadrature::tanh_sinh<double> ts;
    const double inner = ts.integrate(
        [](double u) { return u < 1e-4 ? -u / 6.0 : (std::sin(u) - u) / (u * u); }, 0.0, 1.0);
    // int_1^inf sin(u)/u^2 du = int_0^inf sin(v + 1)/(v + 1)^2 dv
    //                         = cos 1 int sin(v)/(v+1)^2 + sin 1 int cos(v)/(v+1)^2.
    boost::math::quadrature::ooura_fourier_sin<double> fsin;
    boost::math::quadrature::ooura_fourier_cos<double> fcos;
    auto g = [](double v) { return 1.0 / ((v + 1.0) * (v + 1.0)); };
    const double s = fsin.integrate(g, 1.0).first;
    const double c = fcos.integrate(g, 1.0).first;
    const double outer = std::cos(1.0) * s + std::sin(1.0) * c;
    return std::log(std::numbers::pi) + inner + outer;
}

/// Integration by parts reduces the integral to 1 - gamma.
inline double psi_closed_form() {
    return std::log(std::numbers::pi) + 1.0 - boost::math::constants::euler<double>();
}

/// For alpha = 3/2: sigma^{3/2} = Gamma(1/2) cos(3 pi / 4) / (-1/2) = sqrt(2 pi).
inline double stable_sigma_three_halves() { return std::cbrt(2.0 * std::numbers::pi); }

/// Largest a with P(|X|^r > a) = 1/n for r < 0: a = (sqrt 2 erf^{-1}(1/n))^r.
inline double power_norming(double r, double n) {
    return std::pow(std::numbers::sqrt2 * boost::math::erf_inv(1.0 / n), r);
}

/// E[|X|^{2r} 1(|X|^r < u)] for r < 0, i.e. 2 int_c^inf x^{2r} phi(x) dx with
/// c = u^{1/r}. The piece on [c, 1] uses the termwise-integrated series of phi.
inline double power_truncated_second_moment(double r, double u) {
    const double c = std::pow(u, 1.0 / r);
    const double inv_root = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    double series = 0.0, coef = 1.0;
    for (int m = 0; m < 60; ++m) {
        const double p = 2.0 * r + 2.0 * m + 1.0;
        series += coef * (1.0 - std::pow(c, p)) / p;
        coef *= -0.5 / (m + 1);
    }
    boost::math::quadrature::exp_sinh<double> es;
    const double tail = es.integrate([&](double y) { return std::pow(1.0 + y, 2.0 * r) * std::exp(-0.5 * (1.0 + y) * (1.0 + y)); },
                                     0.0, std::numeric_limits<double>::infinity());
    return 2.0 * inv_root * (series + tail);
}

/// E f^2 1(|f| < u) / (u^2 P(|f| > u)) for f = |x|^r.
inline double karamata_ratio(double r, double u) {
    const double c = std::pow(u, 1.0 / r);
    const double p = boost::math::erf(c / std::numbers::sqrt2);
    return power_truncated_second_moment(r, u) / (u * u * p);
}

/// Richardson extrapolation of karamata_ratio from u = 1e4 and 1e5. The
/// relative correction is the finite part of int x^{2r} phi, of order
/// c^{-(2r+1)} = u^{-(2r+1)/r}.
inline double karamata_constant(double r) {
    const double q = std::pow(10.0, -(2.0 * r + 1.0) / r);  // ratio of successive corrections
    const double a = karamata_ratio(r, 1e4), b = karamata_ratio(r, 1e5);
    return (b - q * a) / (1.0 - q);
}

inline double fgn_autocovariance(double h, double k) {
    return 0.5 * (std::pow(std::abs(k + 1), 2 * h) - 2 * std::pow(std::abs(k), 2 * h) + std::pow(std::abs(k - 1), 2 * h));
}

/// sum_{j>=1} j^g (j+k)^g with g = H - 3/2: direct sum to J, then the
/// midpoint integral of the remainder by exp-sinh quadrature.
inline double ma_lag_product_sum(double h, double k, std::size_t j_max = 4000000) {
    const double g = h - 1.5;
    long double s = 0.0L;
    for (std::size_t j = j_max; j >= 1; --j) {
        const double jd = static_cast<double>(j);
        s += std::pow(jd, g) * std::pow(jd + k, g);
    }
    boost::math::quadrature::exp_sinh<double> es;
    const double y0 = static_cast<double>(j_max) + 0.5;
    const double tail = es.integrate([&](double y) { return std::pow(y0 + y, g) * std::pow(y0 + y + k, g); }, 0.0,
                                     std::numeric_limits<double>::infinity());
    return static_cast<double>(s) + tail;
}

/// Var R_{1,H}(1) with kernel (s - x)_+^{H-3/2}: B(H - 1/2, 2 - 2H) / (H(2H - 1)).
inline double hermite1_variance(double h) { return boost::math::beta(h - 0.5, 2.0 - 2.0 * h) / (h * (2.0 * h - 1.0)); }

/// Var R_{2,H}(1) = 4 B^2 / ((4H - 3)(4H - 2)).
inline double hermite2_variance(double h) {
    const double b = boost::math::beta(h - 0.5, 2.0 - 2.0 * h);
    return 4.0 * b * b / ((4.0 * h - 3.0) * (4.0 * h - 2.0));
}

/// Moving maximum Y_i = max(Z_i, Z_{i-1}) of unit Frechet variables from uniforms.
inline std::vector<double> moving_maximum(const std::vector<double>& uniforms) {
    std::vector<double> z(uniforms.size()), y(uniforms.size() - 1);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = -1.0 / std::log(uniforms[i]);
    for (std::size_t i = 0; i + 1 < z.size(); ++i) y[i] = std::max(z[i], z[i + 1]);
    return y;
}

}  // namespace oracle
