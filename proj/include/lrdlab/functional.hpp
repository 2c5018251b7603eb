#pragma once

// Functionals f applied to the Gaussian sequence: |x|^r (optionally centered),
// sign(x)|x|^r, Hermite polynomials and affine maps of these. Each carries
// symmetry metadata and a decomposition of the real line into pieces on which
// it is strictly monotone, which is what the tail module inverts.

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/hash.hpp"
#include "lrdlab/quadrature.hpp"

namespace lrdlab {

enum class Symmetry { Even, Odd, None };

inline std::string to_string(Symmetry s) {
    switch (s) {
        case Symmetry::Even: return "even";
        case Symmetry::Odd: return "odd";
        case Symmetry::None: return "none";
    }
    return "none";
}

/// Probabilists' Hermite polynomial h_k(x).
inline double hermite_eval(int k, double x) {
    require(k >= 0, ErrorCode::InvalidParameter, "Hermite order must be nonnegative");
    require(k <= 170, ErrorCode::OrderTooLarge, "Hermite order " + std::to_string(k) + " exceeds 170");
    if (k == 0) return 1.0;
    double prev = 1.0, curr = x;
    for (int j = 1; j < k; ++j) {
        const double next = x * curr - j * prev;
        prev = curr;
        curr = next;
    }
    return curr;
}

/// h_0(x)/sqrt(0!), ..., h_K(x)/sqrt(K!) in one pass.
inline void normalized_hermite_all(int order, double x, double* out) {
    out[0] = 1.0;
    if (order == 0) return;
    out[1] = x;
    for (int j = 1; j < order; ++j)
        out[j + 1] = (x * out[j] - std::sqrt(static_cast<double>(j)) * out[j - 1]) / std::sqrt(j + 1.0);
}

/// E|X|^p for X ~ N(0,1), p > -1.
inline double abs_normal_moment(double p) {
    require(p > -1.0, ErrorCode::NonIntegrable, "E|X|^p diverges for p <= -1");
    return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0))) / std::sqrt(std::numbers::pi);
}

struct PowerAbs {
    double r;
    bool centered = false;
};
struct SignedPower {
    double r;
};
struct HermiteFn {
    int k;
};

class FunctionalSpec;

struct AffineOf {
    std::shared_ptr<const FunctionalSpec> inner;
    double a = 1.0;
    double b = 0.0;
};

/// A strictly monotone, continuous stretch of f on the open interval (lo, hi).
struct MonotonePiece {
    double lo;
    double hi;
    bool increasing;
};

class FunctionalSpec {
public:
    using Family = std::variant<PowerAbs, SignedPower, HermiteFn, AffineOf>;

    static FunctionalSpec power_abs(double r, bool centered = false) { return FunctionalSpec(PowerAbs{r, centered}); }
    static FunctionalSpec signed_power(double r) { return FunctionalSpec(SignedPower{r}); }
    static FunctionalSpec hermite(int k) { return FunctionalSpec(HermiteFn{k}); }
    static FunctionalSpec affine(const FunctionalSpec& inner, double a, double b) {
        return FunctionalSpec(AffineOf{std::make_shared<const FunctionalSpec>(inner), a, b});
    }

    explicit FunctionalSpec(Family family) : family_(std::move(family)) {
        validate();
        if (const auto* p = std::get_if<PowerAbs>(&family_); p && p->centered) {
            require(p->r > -1.0, ErrorCode::NonIntegrable, "cannot center |x|^r for r <= -1: E|X|^r is infinite");
            // Quadrature mean; the closed form is kept for the tests.
            offset_ = 2.0 * quad::power_gaussian_integral(p->r, [](double) { return 1.0; });
        }
    }

    const Family& family() const { return family_; }

    std::string family_name() const {
        return std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>) return "PowerAbs";
                if constexpr (std::is_same_v<T, SignedPower>) return "SignedPower";
                if constexpr (std::is_same_v<T, HermiteFn>) return "HermiteFn";
                if constexpr (std::is_same_v<T, AffineOf>) return "AffineOf";
            },
            family_);
    }

    /// Exponent r of the power family underneath any affine wrappers, if any.
    std::optional<double> power_exponent() const {
        if (const auto* p = std::get_if<PowerAbs>(&family_)) return p->r;
        if (const auto* p = std::get_if<SignedPower>(&family_)) return p->r;
        if (const auto* p = std::get_if<AffineOf>(&family_)) return p->inner->power_exponent();
        return std::nullopt;
    }

    double operator()(double x) const {
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>) return std::pow(std::abs(x), v.r) - offset_;
                if constexpr (std::is_same_v<T, SignedPower>) {
                    const double m = std::pow(std::abs(x), v.r);
                    return x > 0.0 ? m : (x < 0.0 ? -m : 0.0);
                }
                if constexpr (std::is_same_v<T, HermiteFn>) return hermite_eval(v.k, x);
                if constexpr (std::is_same_v<T, AffineOf>) return v.a * (*v.inner)(x) + v.b;
            },
            family_);
    }

    /// Mean subtracted by PowerAbs{centered}; zero otherwise.
    double centering_offset() const { return offset_; }

    Symmetry symmetry() const {
        return std::visit(
            [](const auto& v) -> Symmetry {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>) return Symmetry::Even;
                if constexpr (std::is_same_v<T, SignedPower>) return Symmetry::Odd;
                if constexpr (std::is_same_v<T, HermiteFn>) return v.k % 2 == 0 ? Symmetry::Even : Symmetry::Odd;
                if constexpr (std::is_same_v<T, AffineOf>) {
                    const Symmetry s = v.inner->symmetry();
                    if (s == Symmetry::Even) return Symmetry::Even;
                    if (s == Symmetry::Odd && v.b == 0.0) return Symmetry::Odd;
                    return Symmetry::None;
                }
            },
            family_);
    }

    /// Pieces covering R (up to finitely many points) on which f is strictly monotone.
    std::vector<MonotonePiece> monotone_pieces() const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return std::visit(
            [&](const auto& v) -> std::vector<MonotonePiece> {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>) return {{-inf, 0.0, v.r < 0.0}, {0.0, inf, v.r > 0.0}};
                if constexpr (std::is_same_v<T, SignedPower>) return {{-inf, 0.0, v.r > 0.0}, {0.0, inf, v.r > 0.0}};
                if constexpr (std::is_same_v<T, HermiteFn>) {
                    if (v.k == 0) return {};
                    // Critical points of h_k are the zeros of h_{k-1}.
                    std::vector<double> edges{-inf};
                    if (v.k >= 2) {
                        const auto& rule = quad::gauss_hermite(static_cast<std::size_t>(v.k - 1));
                        edges.insert(edges.end(), rule.nodes.begin(), rule.nodes.end());
                    }
                    edges.push_back(inf);
                    std::vector<MonotonePiece> out;
                    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                        // h_k is increasing on the last piece; directions alternate leftwards.
                        const bool inc = ((edges.size() - 2 - i) % 2) == 0;
                        out.push_back({edges[i], edges[i + 1], inc});
                    }
                    return out;
                }
                if constexpr (std::is_same_v<T, AffineOf>) {
                    if (v.a == 0.0) return {};
                    auto pieces = v.inner->monotone_pieces();
                    if (v.a < 0.0)
                        for (auto& p : pieces) p.increasing = !p.increasing;
                    return pieces;
                }
            },
            family_);
    }

    /// The t in `piece` with f(t) = y; y must lie strictly between the piece's end values.
    double inverse(const MonotonePiece& piece, double y) const {
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>) {
                    const double t = std::pow(y + offset_, 1.0 / v.r);
                    return piece.hi <= 0.0 ? -t : t;
                }
                if constexpr (std::is_same_v<T, SignedPower>) {
                    return piece.hi <= 0.0 ? -std::pow(-y, 1.0 / v.r) : std::pow(y, 1.0 / v.r);
                }
                if constexpr (std::is_same_v<T, HermiteFn>) {
                    const double lo = std::isfinite(piece.lo) ? piece.lo : -kSupportEdge;
                    const double hi = std::isfinite(piece.hi) ? piece.hi : kSupportEdge;
                    auto g = [&](double t) { return hermite_eval(v.k, t) - y; };
                    std::uintmax_t iters = 200;
                    const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                                     iters);
                    return 0.5 * (r.first + r.second);
                }
                if constexpr (std::is_same_v<T, AffineOf>) {
                    auto inner_piece = piece;
                    if (v.a < 0.0) inner_piece.increasing = !inner_piece.increasing;
                    return v.inner->inverse(inner_piece, (y - v.b) / v.a);
                }
            },
            family_);
    }

    /// Value of f at an end of `piece`, approached from inside. Infinite ends
    /// are clamped to |t| = 40, beyond which the normal law has no mass in
    /// double precision.
    double limit_at(const MonotonePiece& piece, bool upper_end) const {
        double t = upper_end ? piece.hi : piece.lo;
        if (std::isinf(t)) t = std::copysign(kSupportEdge, t);
        if (t == 0.0) t = upper_end ? -std::numeric_limits<double>::denorm_min()
                                    : std::numeric_limits<double>::denorm_min();
        return (*this)(t);
    }

    static constexpr double kSupportEdge = 40.0;

    std::string canonical() const {
        return std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs>)
                    return "PowerAbs(" + format_double(v.r) + (v.centered ? ",centered)" : ")");
                if constexpr (std::is_same_v<T, SignedPower>) return "SignedPower(" + format_double(v.r) + ")";
                if constexpr (std::is_same_v<T, HermiteFn>) return "HermiteFn(" + std::to_string(v.k) + ")";
                if constexpr (std::is_same_v<T, AffineOf>)
                    return "AffineOf(" + v.inner->canonical() + "," + format_double(v.a) + "," + format_double(v.b) +
                           ")";
            },
            family_);
    }

private:
    void validate() const {
        std::visit(
            [](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerAbs> || std::is_same_v<T, SignedPower>)
                    require(std::isfinite(v.r) && v.r != 0.0, ErrorCode::InvalidParameter,
                            "power exponent r must be finite and nonzero");
                if constexpr (std::is_same_v<T, HermiteFn>) {
                    require(v.k >= 0, ErrorCode::InvalidParameter, "Hermite order must be nonnegative");
                    require(v.k <= 170, ErrorCode::OrderTooLarge, "Hermite order exceeds 170");
                }
                if constexpr (std::is_same_v<T, AffineOf>) {
                    require(v.inner != nullptr, ErrorCode::InvalidParameter, "AffineOf needs an inner functional");
                    require(std::isfinite(v.a) && std::isfinite(v.b), ErrorCode::InvalidParameter,
                            "affine coefficients must be finite");
                }
            },
            family_);
    }

    Family family_;
    double offset_ = 0.0;
};

/// E f(X) for X ~ N(0,1). Infinite for power families with r <= -1.
inline double functional_mean(const FunctionalSpec& f) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PowerAbs>) {
                if (v.r <= -1.0) return std::numeric_limits<double>::infinity();
                return v.centered ? 0.0 : abs_normal_moment(v.r);
            }
            if constexpr (std::is_same_v<T, SignedPower>) {
                if (v.r <= -1.0) return std::numeric_limits<double>::quiet_NaN();
                return 0.0;
            }
            if constexpr (std::is_same_v<T, HermiteFn>) return v.k == 0 ? 1.0 : 0.0;
            if constexpr (std::is_same_v<T, AffineOf>) return v.a * functional_mean(*v.inner) + v.b;
        },
        f.family());
}

/// E f(X)^2; infinite when the power exponent is <= -1/2.
inline double functional_second_moment(const FunctionalSpec& f) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PowerAbs>) {
                if (v.r <= -0.5) return inf;
                const double m2 = abs_normal_moment(2.0 * v.r);
                const double c = f.centering_offset();
                return m2 - 2.0 * c * abs_normal_moment(v.r) + c * c;
            }
            if constexpr (std::is_same_v<T, SignedPower>) {
                if (v.r <= -0.5) return inf;
                return abs_normal_moment(2.0 * v.r);
            }
            if constexpr (std::is_same_v<T, HermiteFn>) return std::tgamma(v.k + 1.0);
            if constexpr (std::is_same_v<T, AffineOf>) {
                const double m2 = functional_second_moment(*v.inner);
                const double m1 = functional_mean(*v.inner);
                return v.a * v.a * m2 + 2.0 * v.a * v.b * m1 + v.b * v.b;
            }
        },
        f.family());
}

inline void to_json(nlohmann::json& j, const FunctionalSpec& f) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PowerAbs>)
                j = {{"family", "PowerAbs"}, {"r", v.r}, {"centered", v.centered}};
            if constexpr (std::is_same_v<T, SignedPower>) j = {{"family", "SignedPower"}, {"r", v.r}};
            if constexpr (std::is_same_v<T, HermiteFn>) j = {{"family", "HermiteFn"}, {"k", v.k}};
            if constexpr (std::is_same_v<T, AffineOf>)
                j = {{"family", "AffineOf"}, {"inner", *v.inner}, {"a", v.a}, {"b", v.b}};
        },
        f.family());
}

inline FunctionalSpec functional_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorCode::ConfigError, "functional must be a JSON object");
    const std::string family = j.at("family").get<std::string>();
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : j.items()) {
            bool ok = key == "family";
            for (const char* a : allowed) ok = ok || key == a;
            require(ok, ErrorCode::ConfigError, "unknown key '" + key + "' in functional " + family);
        }
    };
    if (family == "PowerAbs") {
        check_keys({"r", "centered"});
        return FunctionalSpec::power_abs(j.at("r").get<double>(), j.value("centered", false));
    }
    if (family == "SignedPower") {
        check_keys({"r"});
        return FunctionalSpec::signed_power(j.at("r").get<double>());
    }
    if (family == "HermiteFn") {
        check_keys({"k"});
        return FunctionalSpec::hermite(j.at("k").get<int>());
    }
    if (family == "AffineOf") {
        check_keys({"inner", "a", "b"});
        return FunctionalSpec::affine(functional_from_json(j.at("inner")), j.value("a", 1.0), j.value("b", 0.0));
    }
    fail(ErrorCode::ConfigError, "unknown functional family '" + family + "'");
}

}  // namespace lrdlab
