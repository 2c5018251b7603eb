#pragma once

// Limit-regime classification for partial sums of f(X_i): Hermite, stable or
// mixed according to the sign of (1 - kappa(1-H)) - 1/alpha, together with the
// normalization that goes with each regime.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/slowly_varying.hpp"
#include "lrdlab/tails.hpp"

namespace lrdlab {

/// S_alpha(sigma, beta, mu).
struct StableParams {
    double alpha = 1.5;
    double sigma = 1.0;
    double beta = 0.0;
    double mu = 0.0;

    void validate() const {
        require(alpha > 0.0 && alpha <= 2.0, ErrorCode::InvalidParameter, "stable alpha must lie in (0, 2]");
        require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidParameter, "stable sigma must be positive");
        require(beta >= -1.0 && beta <= 1.0, ErrorCode::InvalidParameter, "stable beta must lie in [-1, 1]");
        require(std::isfinite(mu), ErrorCode::InvalidParameter, "stable mu must be finite");
    }
};

inline void to_json(nlohmann::json& j, const StableParams& p) {
    j = {{"alpha", p.alpha}, {"sigma", p.sigma}, {"beta", p.beta}, {"mu", p.mu}};
}

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

/// Recovers p/q (q <= max_den) when x is that fraction to within a few ulps.
inline std::optional<Rational> as_rational(double x, std::int64_t max_den = 1000000) {
    if (!std::isfinite(x)) return std::nullopt;
    // Continued-fraction convergents h/k.
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double rem = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_d = std::floor(rem);
        if (std::abs(a_d) > 1e12) break;
        const auto a = static_cast<std::int64_t>(a_d);
        const std::int64_t h2 = a * h1 + h0, k2 = a * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x))
            return Rational{h1, k1};
        const double frac = rem - a_d;
        if (frac == 0.0) break;
        rem = 1.0 / frac;
    }
    return std::nullopt;
}

/// Sign of (1 - kappa(1-H)) - 1/alpha: exact when H and alpha are recognized
/// as rationals, otherwise with a relative tolerance of 1e-12.
inline int boundary_sign(int kappa, double hurst, double alpha) {
    const auto h = as_rational(hurst);
    const auto a = as_rational(alpha);
    if (h && a) {
        // (1 - kappa(1 - hn/hd)) - ad/an  =  [an(hd - kappa(hd - hn)) - ad hd] / (an hd)
        const __int128 hn = h->num, hd = h->den, an = a->num, ad = a->den;
        const __int128 numer = an * (hd - kappa * (hd - hn)) - ad * hd;
        const __int128 denom = an * hd;
        const __int128 v = denom > 0 ? numer : -numer;
        return v > 0 ? 1 : (v < 0 ? -1 : 0);
    }
    const double lhs = 1.0 - kappa * (1.0 - hurst);
    const double rhs = 1.0 / alpha;
    if (std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs))) return 0;
    return lhs > rhs ? 1 : -1;
}

inline bool is_alpha_one(double alpha) {
    if (auto a = as_rational(alpha)) return a->num == a->den;
    return std::abs(alpha - 1.0) <= 1e-12;
}

/// Scale of the stable limit: (Gamma(2-a) cos(pi a/2) / (1-a))^{1/a}, and pi/2 at a = 1.
inline double stable_sigma(double alpha) {
    require(alpha > 0.0 && alpha < 2.0, ErrorCode::InvalidParameter, "stable_sigma needs alpha in (0, 2)");
    if (is_alpha_one(alpha)) return std::numbers::pi / 2.0;
    const double base = std::tgamma(2.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0) / (1.0 - alpha);
    return std::pow(base, 1.0 / alpha);
}

/// psi = ln(pi) + int_0^inf u^{-2}(sin u - u 1(u <= 1)) du.
/// The (0,1] piece is smooth (series near 0); the oscillatory piece is reduced
/// by parts to cos 1 + 2 sin 1 - 6 int_1^inf sin(u)/u^4 du, truncated at U with
/// |tail| <= 1/(3U^3).
inline double psi_constant(double tol = 1e-10) {
    require(tol >= 1e-12, ErrorCode::InvalidParameter, "psi tolerance must be at least 1e-12");
    const auto& rule = quad::gauss_legendre(20);
    auto near = [](double u) {
        if (u < 0.1) {
            const double u2 = u * u;
            return u * (-1.0 / 6.0 + u2 * (1.0 / 120.0 + u2 * (-1.0 / 5040.0 + u2 * (1.0 / 362880.0 - u2 / 39916800.0))));
        }
        return (std::sin(u) - u) / (u * u);
    };
    const double inner = quad::integrate_uniform(near, 0.0, 1.0, 0.125, rule);
    const double upper = std::cbrt(6.0 / (3.0 * 0.25 * tol));
    auto far = [](double u) {
        const double u2 = u * u;
        return std::sin(u) / (u2 * u2);
    };
    const double j = quad::integrate_uniform(far, 1.0, upper, 1.0, rule);
    const double outer = std::cos(1.0) + 2.0 * std::sin(1.0) - 6.0 * j;
    return std::log(std::numbers::pi) + inner + outer;
}

struct HermiteLimit {
    int kappa = 1;
    double hurst = 0.0;
    double h_ss = 0.0;  // 1 - kappa(1-H)
    double f_kappa = std::numeric_limits<double>::quiet_NaN();
};

enum class StableCentering { None, TruncatedMeanPlusPsi };

struct StableLimit {
    StableParams params;
    StableCentering centering = StableCentering::None;
};

struct MixedLimit {
    double lambda = 0.0;
    HermiteLimit hermite;
    StableLimit stable;
};

struct FiniteVarianceOutOfScope {
    double alpha = 2.0;
};

/// H <= 1/2: short memory, partial sums behave as in the iid case.
struct ShortMemoryStable {
    StableLimit stable;
};

using LimitRegime = std::variant<HermiteLimit, StableLimit, MixedLimit, FiniteVarianceOutOfScope, ShortMemoryStable>;

inline std::string regime_name(const LimitRegime& regime) {
    switch (regime.index()) {
        case 0: return "Hermite";
        case 1: return "Stable";
        case 2: return "Mixed";
        case 3: return "FiniteVarianceOutOfScope";
        case 4: return "ShortMemoryStable";
    }
    return "Unknown";
}

/// Stable part of a regime, if it has one.
inline std::optional<StableLimit> stable_part(const LimitRegime& regime) {
    if (const auto* s = std::get_if<StableLimit>(&regime)) return *s;
    if (const auto* m = std::get_if<MixedLimit>(&regime)) return m->stable;
    if (const auto* s = std::get_if<ShortMemoryStable>(&regime)) return s->stable;
    return std::nullopt;
}

inline std::optional<HermiteLimit> hermite_part(const LimitRegime& regime) {
    if (const auto* h = std::get_if<HermiteLimit>(&regime)) return *h;
    if (const auto* m = std::get_if<MixedLimit>(&regime)) return m->hermite;
    return std::nullopt;
}

struct ClassifyOptions {
    double beta = 1.0;
    double f_kappa = std::numeric_limits<double>::quiet_NaN();
};

/// Trichotomy for 1 < alpha < 2 and H > 1/2; stable for alpha <= 1 (with the
/// psi centering at alpha = 1) and for H <= 1/2; out of scope for alpha >= 2.
inline LimitRegime classify(std::optional<int> kappa, double hurst, double alpha, double lambda,
                            const ClassifyOptions& opts = {}) {
    require(hurst > 0.0 && hurst < 1.0, ErrorCode::InvalidParameter, "H must lie in (0, 1)");
    require(alpha > 0.0 && !std::isnan(alpha), ErrorCode::InvalidParameter, "alpha must be positive");
    require(lambda >= 0.0, ErrorCode::InvalidParameter, "lambda must lie in [0, inf]");
    require(!kappa || *kappa >= 1, ErrorCode::InvalidParameter, "Hermite rank must be at least 1");
    require(opts.beta >= -1.0 && opts.beta <= 1.0, ErrorCode::InvalidParameter, "beta must lie in [-1, 1]");

    if (alpha >= 2.0) return FiniteVarianceOutOfScope{alpha};
    const StableParams params{alpha, stable_sigma(alpha), opts.beta, 0.0};
    if (alpha <= 1.0) {
        return StableLimit{params, is_alpha_one(alpha) ? StableCentering::TruncatedMeanPlusPsi : StableCentering::None};
    }
    if (hurst <= 0.5) return ShortMemoryStable{StableLimit{params, StableCentering::None}};
    require(kappa.has_value(), ErrorCode::InvalidParameter, "Hermite rank is required when 1 < alpha < 2");

    const HermiteLimit hermite{*kappa, hurst, 1.0 - *kappa * (1.0 - hurst), opts.f_kappa};
    const StableLimit stable{params, StableCentering::None};
    const int sign = boundary_sign(*kappa, hurst, alpha);
    if (sign > 0) return hermite;
    if (sign < 0) return stable;
    if (std::isinf(lambda)) return hermite;
    if (lambda == 0.0) return stable;
    return MixedLimit{lambda, hermite, stable};
}

/// lim L1(n)^kappa / L3(n) for log-power slowly varying functions: 0, inf or c1^kappa / c3.
inline double lambda_limit(const SlowlyVarying& l1, int kappa, const SlowlyVarying& l3) {
    const double p_num = l1.p * kappa;
    const double p_den = l3.p;
    if (std::abs(p_num - p_den) > 1e-12 * std::max({1.0, std::abs(p_num), std::abs(p_den)}))
        return p_num > p_den ? std::numeric_limits<double>::infinity() : 0.0;
    return std::pow(l1.c, kappa) / l3.c;
}

/// How to normalize raw sums:  S_n(t) = scale(n) (sum_{i <= nt} f(X_i) - nt m_n) - path(t).
struct NormalizationPlan {
    std::function<double(std::uint64_t)> scale;
    std::function<double(std::uint64_t)> term_centering;
    std::function<double(double)> path_centering;
    std::string target;
    nlohmann::json details = nlohmann::json::object();

    /// Everything subtracted from scale(n) * sum at time t, in normalized units.
    double centering(std::uint64_t n, double t) const {
        const auto k = static_cast<double>(static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * t)));
        return scale(n) * k * term_centering(n) + path_centering(t);
    }
};

inline NormalizationPlan normalization_plan(const LimitRegime& regime, const FunctionalSpec& f,
                                            const SlowlyVarying& l1, const std::optional<TailModel>& tail,
                                            std::uint64_t n_max) {
    require(n_max >= 2, ErrorCode::NTooSmall, "n_max must be at least 2");
    NormalizationPlan plan;
    plan.term_centering = [](std::uint64_t) { return 0.0; };
    plan.path_centering = [](double) { return 0.0; };

    if (std::holds_alternative<FiniteVarianceOutOfScope>(regime))
        fail(ErrorCode::RegimeMismatch, "no normalization for the finite-variance case (alpha >= 2)");

    if (const auto* h = std::get_if<HermiteLimit>(&regime)) {
        const double mean = functional_mean(f);
        require(std::isfinite(mean) && std::abs(mean) < 1e-8 * std::max(1.0, std::abs(f.centering_offset())),
                ErrorCode::RegimeMismatch, "Hermite normalization needs a centered functional");
        const int kappa = h->kappa;
        const double h_ss = h->h_ss;
        plan.scale = [l1, kappa, h_ss](std::uint64_t n) {
            const double nd = static_cast<double>(n);
            return std::pow(l1(nd), -kappa) * std::pow(nd, -h_ss);
        };
        plan.target = "f_" + std::to_string(kappa) + " R_{" + std::to_string(kappa) + ",H}(t), H = " +
                      format_short(h->hurst) + ", self-similarity " + format_short(h_ss);
        plan.details = {{"scale", "L1(n)^-kappa n^-(1-kappa(1-H))"}, {"kappa", kappa}, {"H_ss", h_ss},
                        {"l1", l1}};
        return plan;
    }

    const auto stable = stable_part(regime);
    require(stable.has_value(), ErrorCode::RegimeMismatch, "regime has no stable component");
    require(tail.has_value(), ErrorCode::RegimeMismatch, "stable normalization needs a tail model");
    require(std::abs(tail->alpha - stable->params.alpha) <= 1e-9 * stable->params.alpha, ErrorCode::RegimeMismatch,
            "tail index " + format_short(tail->alpha) + " does not match the regime's alpha " +
                format_short(stable->params.alpha));
    auto norming = std::make_shared<const NormingSequence>(f);
    plan.scale = [norming](std::uint64_t n) { return 1.0 / (*norming)(n); };
    plan.details = {{"scale", "1/a_n"}, {"alpha", stable->params.alpha}, {"sigma", stable->params.sigma},
                    {"beta", stable->params.beta}, {"a_n_max", (*norming)(n_max)}};

    if (stable->centering == StableCentering::TruncatedMeanPlusPsi) {
        const double psi = psi_constant(1e-10);
        plan.term_centering = [norming, f](std::uint64_t n) { return truncated_first_moment(f, (*norming)(n)); };
        plan.path_centering = [psi](double t) { return 2.0 * psi * t / std::numbers::pi; };
        plan.details["psi"] = psi;
        plan.details["centering"] = "E f(X)1(|f(X)| <= a_n) per term, 2 psi t / pi per path";
    } else if (stable->params.alpha > 1.0) {
        const double mean = functional_mean(f);
        require(std::isfinite(mean) && std::abs(mean) < 1e-8 * std::max(1.0, std::abs(f.centering_offset())),
                ErrorCode::RegimeMismatch, "stable normalization for alpha > 1 needs a centered functional");
    }

    if (const auto* m = std::get_if<MixedLimit>(&regime)) {
        plan.target = format_short(m->lambda) + " f_" + std::to_string(m->hermite.kappa) + " R_{" +
                      std::to_string(m->hermite.kappa) + ",H}(t) + R*(t), R* alpha-stable Levy motion S_" +
                      format_short(stable->params.alpha) + "(" + format_short(stable->params.sigma) + " t^{1/alpha}, " +
                      format_short(stable->params.beta) + ", 0)";
        plan.details["lambda"] = m->lambda;
    } else {
        plan.target = "R*(t): alpha-stable Levy motion S_" + format_short(stable->params.alpha) + "(" +
                      format_short(stable->params.sigma) + " t^{1/alpha}, " + format_short(stable->params.beta) +
                      ", 0)";
    }
    return plan;
}

inline void to_json(nlohmann::json& j, const LimitRegime& regime) {
    j = {{"regime", regime_name(regime)}};
    if (auto h = hermite_part(regime)) {
        j["kappa"] = h->kappa;
        j["H"] = h->hurst;
        j["H_ss"] = h->h_ss;
        j["index_base_H"] = "R_{" + std::to_string(h->kappa) + "," + format_short(h->hurst) + "}";
        j["index_self_similarity"] = "R_{" + std::to_string(h->kappa) + "," + format_short(h->h_ss) + "}";
        if (std::isfinite(h->f_kappa)) j["f_kappa"] = h->f_kappa;
    }
    if (auto s = stable_part(regime)) {
        j["stable"] = s->params;
        j["centering"] = s->centering == StableCentering::TruncatedMeanPlusPsi ? "TruncatedMeanPlusPsi" : "None";
        if (s->centering == StableCentering::TruncatedMeanPlusPsi) j["psi"] = psi_constant(1e-10);
    }
    if (const auto* m = std::get_if<MixedLimit>(&regime)) j["lambda"] = m->lambda;
    if (const auto* o = std::get_if<FiniteVarianceOutOfScope>(&regime)) j["alpha"] = o->alpha;
    if (std::holds_alternative<HermiteLimit>(regime))
        j["exponent"] = std::get<HermiteLimit>(regime).h_ss;
    else if (auto s = stable_part(regime))
        j["exponent"] = 1.0 / s->params.alpha;
}

}  // namespace lrdlab
