#pragma once

// Power tails of f(X), X ~ N(0,1): exact tail probabilities, the tail model
// P(f(X) > x) ~ (1+beta)/2 L2(x) x^{-alpha}, norming constants a_n with
// P(|f(X)| > a_n) = 1/n, and truncated moments.

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/slowly_varying.hpp"

namespace lrdlab {

/// P(lo < X < hi) for X ~ N(0,1), avoiding cancellation in both tails and
/// near the origin.
inline double normal_interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    constexpr double s = std::numbers::sqrt2;
    if (lo >= 0.0) {
        if (lo < 1.0) return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
        return 0.5 * (std::erfc(lo / s) - std::erfc(hi / s));
    }
    if (hi <= 0.0) return normal_interval(-hi, -lo);
    return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
}

struct TailProbabilities {
    double p_plus = 0.0;   // P(f(X) > x)
    double p_minus = 0.0;  // P(f(X) < -x)
};

namespace detail {

inline std::vector<MonotonePiece> require_pieces(const FunctionalSpec& f) {
    auto pieces = f.monotone_pieces();
    require(!pieces.empty(), ErrorCode::UnsupportedFunctional,
            "functional " + f.canonical() + " has no monotone decomposition");
    return pieces;
}

/// Sub-interval of `piece` where f > y (above = true) or f < y.
inline std::pair<double, double> level_set(const FunctionalSpec& f, const MonotonePiece& piece, double y,
                                           bool above) {
    const double v_lo = f.limit_at(piece, false);
    const double v_hi = f.limit_at(piece, true);
    const double v_min = std::min(v_lo, v_hi), v_max = std::max(v_lo, v_hi);
    const std::pair<double, double> empty{0.0, 0.0};
    const std::pair<double, double> full{piece.lo, piece.hi};
    if (above) {
        if (y >= v_max) return empty;
        if (y < v_min) return full;
    } else {
        if (y <= v_min) return empty;
        if (y > v_max) return full;
    }
    const double t = f.inverse(piece, y);
    // f > y lies to the right of t on an increasing piece.
    const bool right = (piece.increasing == above);
    return right ? std::pair{t, piece.hi} : std::pair{piece.lo, t};
}

/// Sub-interval of `piece` where |f| < u.
inline std::pair<double, double> band_set(const FunctionalSpec& f, const MonotonePiece& piece, double u) {
    const auto below = level_set(f, piece, u, false);
    const auto above = level_set(f, piece, -u, true);
    const double lo = std::max(below.first, above.first);
    const double hi = std::min(below.second, above.second);
    if (!(hi > lo)) return {0.0, 0.0};
    return {lo, hi};
}

/// int_{lo}^{hi} f(t)^m phi(t) dt over a single monotone piece.
inline double piece_moment(const FunctionalSpec& f, const MonotonePiece& piece, double lo, double hi, int m) {
    if (!(hi > lo)) return 0.0;
    const auto r = f.power_exponent();
    const double edge = FunctionalSpec::kSupportEdge;
    const bool singular = r && *r < 0.0 && (piece.lo == 0.0 || piece.hi == 0.0);
    if (!singular) {
        auto g = [&](double t) { return std::pow(f(t), m) * quad::normal_pdf(t); };
        return quad::integrate_uniform(g, std::max(lo, -edge), std::min(hi, edge), 0.25,
                                       quad::gauss_legendre(20));
    }
    // Work on the positive half-line and peel off the power singularity at 0.
    const double q = m * *r;
    const bool negative = piece.hi <= 0.0;
    const double a = negative ? -hi : lo;
    const double b = negative ? -lo : hi;
    if (a == 0.0 && q <= -1.0) return std::numeric_limits<double>::infinity();
    auto g = [&](double t) {
        const double x = negative ? -t : t;
        return std::pow(f(x) * std::pow(t, -*r), m);
    };
    return quad::power_gaussian_integral(q, g, a, b);
}

}  // namespace detail

/// Exact P(f(X) > x) and P(f(X) < -x), x > 0.
inline TailProbabilities tail_probabilities(const FunctionalSpec& f, double x) {
    require(x > 0.0, ErrorCode::InvalidParameter, "tail level x must be positive");
    TailProbabilities out;
    for (const auto& piece : detail::require_pieces(f)) {
        const auto up = detail::level_set(f, piece, x, true);
        const auto down = detail::level_set(f, piece, -x, false);
        out.p_plus += normal_interval(up.first, up.second);
        out.p_minus += normal_interval(down.first, down.second);
    }
    return out;
}

inline double abs_tail_probability(const FunctionalSpec& f, double x) {
    const auto p = tail_probabilities(f, x);
    return p.p_plus + p.p_minus;
}

/// E[f(X)^2 1(|f(X)| < u)].
inline double truncated_second_moment(const FunctionalSpec& f, double u) {
    require(u > 0.0, ErrorCode::InvalidParameter, "truncation level u must be positive");
    double total = 0.0;
    for (const auto& piece : detail::require_pieces(f)) {
        const auto [lo, hi] = std::isinf(u) ? std::pair{piece.lo, piece.hi} : detail::band_set(f, piece, u);
        total += detail::piece_moment(f, piece, lo, hi, 2);
    }
    return total;
}

/// E[f(X) 1(|f(X)| <= u)].
inline double truncated_first_moment(const FunctionalSpec& f, double u) {
    require(u > 0.0, ErrorCode::InvalidParameter, "truncation level u must be positive");
    double total = 0.0;
    for (const auto& piece : detail::require_pieces(f)) {
        const auto [lo, hi] = std::isinf(u) ? std::pair{piece.lo, piece.hi} : detail::band_set(f, piece, u);
        total += detail::piece_moment(f, piece, lo, hi, 1);
    }
    return total;
}

struct TailModel {
    double alpha = 0.0;
    double beta = 0.0;
    SlowlyVarying l2{};
    double x_min = 0.0;
    bool analytic = false;
    nlohmann::json diagnostics = nlohmann::json::object();

    /// Model value of P(f(X) > x) (upper = true) or P(f(X) < -x).
    double model_tail(double x, bool upper) const {
        const double side = upper ? 0.5 * (1.0 + beta) : 0.5 * (1.0 - beta);
        return side * l2(x) * std::pow(x, -alpha);
    }
};

namespace detail {

/// Analytic model for power families and affine maps of them.
inline std::optional<TailModel> analytic_tail_model(const FunctionalSpec& f) {
    return std::visit(
        [&](const auto& v) -> std::optional<TailModel> {
            using T = std::decay_t<decltype(v)>;
            const double c = std::sqrt(2.0 / std::numbers::pi);
            if constexpr (std::is_same_v<T, PowerAbs>) {
                if (v.r >= 0.0) return std::nullopt;
                return TailModel{-1.0 / v.r, 1.0, SlowlyVarying::constant(c), 0.0, true, {}};
            }
            if constexpr (std::is_same_v<T, SignedPower>) {
                if (v.r >= 0.0) return std::nullopt;
                return TailModel{-1.0 / v.r, 0.0, SlowlyVarying::constant(c), 0.0, true, {}};
            }
            if constexpr (std::is_same_v<T, AffineOf>) {
                auto inner = analytic_tail_model(*v.inner);
                if (!inner || v.a == 0.0) return std::nullopt;
                inner->l2 = inner->l2.scaled(std::pow(std::abs(v.a), inner->alpha));
                if (v.a < 0.0) inner->beta = -inner->beta;
                return inner;
            }
            return std::nullopt;
        },
        f.family());
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool finite = true;
};

/// Weighted least squares of log P(|f| > x) on log x over a geometric grid.
/// Weights grow along the grid so the deepest (most asymptotic) points count most.
inline SlopeFit fit_log_tail(const FunctionalSpec& f, double x0, double decades, int per_decade) {
    const int count = static_cast<int>(decades * per_decade) + 1;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> pts;
    SlopeFit out;
    for (int i = 0; i < count; ++i) {
        const double lx = std::log(x0) + std::numbers::ln10 * i / per_decade;
        const double p = abs_tail_probability(f, std::exp(lx));
        if (!(p > 0.0)) {
            out.finite = false;
            return out;
        }
        const double ly = std::log(p);
        const double w = 1.0 + i;
        pts.emplace_back(lx, ly);
        sw += w;
        sx += w * lx;
        sy += w * ly;
        sxx += w * lx * lx;
        sxy += w * lx * ly;
    }
    const double det = sw * sxx - sx * sx;
    out.slope = (sw * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / sw;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / sw;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double w = 1.0 + static_cast<double>(i);
        const double e = pts[i].second - (out.intercept + out.slope * pts[i].first);
        ss_res += w * e * e;
        ss_tot += w * (pts[i].second - mean) * (pts[i].second - mean);
    }
    out.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

/// First x on a geometric grid beyond which the model stays within 1% of the
/// exact tail of the dominant side.
inline double model_threshold(const FunctionalSpec& f, const TailModel& m) {
    const bool upper = m.beta >= 0.0;
    double x_min = 1e12;
    for (double lx = 12.0; lx >= -2.0; lx -= 0.125) {
        const double x = std::pow(10.0, lx);
        const auto p = tail_probabilities(f, x);
        const double exact = upper ? p.p_plus : p.p_minus;
        if (!(exact > 0.0) || std::abs(m.model_tail(x, upper) / exact - 1.0) > 0.01) break;
        x_min = x;
    }
    return x_min;
}

}  // namespace detail

/// Tail model of f(X). Power families are handled analytically; anything else
/// is fitted on the exact tail over 4 decades at 40 points per decade.
/// Throws NoPowerTail unless the tail index lies in (0, 2).
inline TailModel fit_tail_model(const FunctionalSpec& f) {
    if (auto model = detail::analytic_tail_model(f)) {
        require(model->alpha < 2.0, ErrorCode::NoPowerTail,
                "tail index alpha = " + format_double(model->alpha) + " is not below 2");
        model->x_min = detail::model_threshold(f, *model);
        const auto low = detail::fit_log_tail(f, 1e2, 2.0, 40);
        const auto high = detail::fit_log_tail(f, 1e4, 2.0, 40);
        model->diagnostics = {{"mode", "analytic"},
                              {"slope_1e2_1e4", low.slope},
                              {"slope_1e4_1e6", high.slope},
                              {"r2", std::min(low.r2, high.r2)}};
        return *model;
    }
    detail::require_pieces(f);
    // Start where the tail is at 1e-2 and look four decades further out.
    double x0 = 1.0;
    while (abs_tail_probability(f, x0) > 1e-2 && x0 < 1e300) x0 *= 2.0;
    const auto first = detail::fit_log_tail(f, x0, 1.0, 40);
    const auto last = detail::fit_log_tail(f, x0 * 1e3, 1.0, 40);
    const auto whole = detail::fit_log_tail(f, x0, 4.0, 40);
    require(first.finite && last.finite && whole.finite, ErrorCode::NoPowerTail,
            "tail of " + f.canonical() + " vanishes faster than any power");
    const double drift = std::abs(first.slope - last.slope);
    require(drift < 0.02 * std::abs(last.slope), ErrorCode::NoPowerTail,
            "local tail exponent drifts from " + format_double(-first.slope) + " to " + format_double(-last.slope));
    const double alpha = -last.slope;
    require(alpha > 0.0 && alpha < 2.0, ErrorCode::NoPowerTail,
            "tail index alpha = " + format_double(alpha) + " is outside (0, 2)");
    const double xr = x0 * 1e4;
    const auto p = tail_probabilities(f, xr);
    const double total = p.p_plus + p.p_minus;
    TailModel model;
    model.alpha = alpha;
    model.beta = (p.p_plus - p.p_minus) / total;
    model.l2 = SlowlyVarying::constant(total * std::pow(xr, alpha));
    model.x_min = x0 * 1e3;
    model.analytic = false;
    model.diagnostics = {{"mode", "regression"}, {"slope", whole.slope}, {"r2", whole.r2}, {"drift", drift}};
    return model;
}

inline void to_json(nlohmann::json& j, const TailModel& m) {
    j = {{"alpha", m.alpha}, {"beta", m.beta}, {"l2", m.l2}, {"x_min", m.x_min}, {"diagnostics", m.diagnostics}};
}

enum class NormingMode { Analytic, NumericInversion };

namespace detail {

/// Closed form for PowerAbs with r < 0: P(|X|^r - m > a) = erf((a+m)^{1/r}/sqrt2).
/// Valid while a >= m, so the lower tail is empty.
inline std::optional<double> analytic_norming(const FunctionalSpec& f, double n) {
    const auto* p = std::get_if<PowerAbs>(&f.family());
    if (!p || p->r >= 0.0) return std::nullopt;
    const double m = f.centering_offset();
    const double eps = std::numbers::sqrt2 * boost::math::erf_inv(1.0 / n);
    const double a = std::pow(eps, p->r) - m;
    if (a < m) return std::nullopt;
    return a;
}

inline double numeric_norming(const FunctionalSpec& f, double n) {
    const double target = std::log(1.0 / n);
    auto g = [&](double log_a) {
        const double p = abs_tail_probability(f, std::exp(log_a));
        return (p > 0.0 ? std::log(p) : -800.0) - target;
    };
    double lo = std::log(1e-8), hi = 0.0;
    while (g(lo) < 0.0 && lo > -700.0) lo -= 5.0;
    while (g(hi) > 0.0 && hi < 700.0) hi += 2.0;
    std::uintmax_t iters = 400;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return std::exp(0.5 * (r.first + r.second));
}

}  // namespace detail

/// Solves P(|f(X)| > a_n) = 1/n.
inline double norming_constant(const FunctionalSpec& f, double n) {
    require(n >= 2.0, ErrorCode::NTooSmall, "norming constants need n >= 2");
    fit_tail_model(f);
    if (auto a = detail::analytic_norming(f, n)) return *a;
    return detail::numeric_norming(f, n);
}

/// a_n for a fixed functional, cached. Values do not depend on the order in
/// which threads request them.
class NormingSequence {
public:
    explicit NormingSequence(FunctionalSpec f) : f_(std::move(f)) {
        tail_ = fit_tail_model(f_);
        mode_ = detail::analytic_norming(f_, 1e6) ? NormingMode::Analytic : NormingMode::NumericInversion;
    }

    const FunctionalSpec& functional() const { return f_; }
    const TailModel& tail() const { return tail_; }
    NormingMode mode() const { return mode_; }

    double operator()(std::uint64_t n) const {
        require(n >= 2, ErrorCode::NTooSmall, "norming constants need n >= 2");
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(n); it != cache_.end()) return it->second;
        }
        const double nd = static_cast<double>(n);
        const auto analytic = detail::analytic_norming(f_, nd);
        const double a = analytic ? *analytic : detail::numeric_norming(f_, nd);
        std::unique_lock lock(mutex_);
        cache_.emplace(n, a);
        return a;
    }

    std::vector<std::pair<std::uint64_t, double>> cached() const {
        std::shared_lock lock(mutex_);
        return {cache_.begin(), cache_.end()};
    }

private:
    FunctionalSpec f_;
    TailModel tail_;
    NormingMode mode_ = NormingMode::NumericInversion;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::uint64_t, double> cache_;
};

/// L3 with a_n = n^{1/alpha} L3(n). For L2 = c (ln(e+x))^p, L2(a_n) behaves
/// like c (ln n / alpha)^p, giving L3 = c^{1/alpha} alpha^{-p/alpha} (ln)^{p/alpha}.
inline SlowlyVarying derive_l3(const TailModel& tail) {
    const double inv = 1.0 / tail.alpha;
    if (tail.l2.family == SlowlyVaryingFamily::Constant || tail.l2.p == 0.0)
        return SlowlyVarying::constant(std::pow(tail.l2.c, inv));
    return SlowlyVarying::log_power(std::pow(tail.l2.c, inv) * std::pow(tail.alpha, -tail.l2.p * inv),
                                    tail.l2.p * inv);
}

}  // namespace lrdlab
