#pragma once

// Hermite chaos coefficients f_k = E[f(X) h_k(X)] / k!, the Hermite rank, and
// the exact partial-sum variance of a finite-variance functional.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/lrd_source.hpp"
#include "lrdlab/quadrature.hpp"

namespace lrdlab {

inline constexpr int kDefaultChaosOrder = 16;
inline constexpr int kDefaultChaosNodes = 401;
inline constexpr double kRankRelativeTolerance = 1e-7;

struct ChaosDecomposition {
    FunctionalSpec f;
    std::vector<double> coeffs;  // f_0..f_K
    int order = 0;               // K
    std::optional<int> rank;     // empty when every f_k, k >= 1, is below tolerance
    int nodes = 0;
    double tolerance = 0.0;      // absolute threshold on |f_k| sqrt(k!)

    /// f_k sqrt(k!), the coefficient against the orthonormal basis.
    double normalized(int k) const { return coeffs[static_cast<std::size_t>(k)] * std::exp(0.5 * std::lgamma(k + 1.0)); }
};

namespace detail {

/// E[f(X) h_k(X)/sqrt(k!)] for k = 0..order.
inline std::vector<double> orthonormal_projection(const FunctionalSpec& f, int order, int nodes) {
    std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
    std::vector<double> h(static_cast<std::size_t>(order) + 1);
    const auto* power_abs = std::get_if<PowerAbs>(&f.family());
    const auto* signed_power = std::get_if<SignedPower>(&f.family());
    if (power_abs || signed_power) {
        const double r = power_abs ? power_abs->r : signed_power->r;
        require(r > -1.0, ErrorCode::NonIntegrable,
                "chaos coefficients of |x|^r need r > -1 (got r = " + format_double(r) + ")");
        // Both families reduce to 2 int_0^inf t^r h_k(t) phi(t) dt on the
        // surviving parity.
        const int parity = power_abs ? 0 : 1;
        for (int k = parity; k <= order; k += 2) {
            auto g = [&](double t) {
                normalized_hermite_all(k, t, h.data());
                return h[static_cast<std::size_t>(k)];
            };
            out[static_cast<std::size_t>(k)] = 2.0 * quad::power_gaussian_integral(r, g);
        }
        if (power_abs) out[0] -= f.centering_offset();
        return out;
    }
    if (const auto* affine = std::get_if<AffineOf>(&f.family())) {
        out = orthonormal_projection(*affine->inner, order, nodes);
        for (auto& v : out) v *= affine->a;
        out[0] += affine->b;
        return out;
    }
    const auto& rule = quad::gauss_hermite(static_cast<std::size_t>(nodes));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        const double fx = f(x) * rule.weights[i];
        normalized_hermite_all(order, x, h.data());
        for (int k = 0; k <= order; ++k) out[static_cast<std::size_t>(k)] += fx * h[static_cast<std::size_t>(k)];
    }
    return out;
}

}  // namespace detail

/// Chaos expansion of f truncated at order K. Coefficients of the parity that
/// f's symmetry forbids are set to exactly zero.
inline ChaosDecomposition chaos_coefficients(const FunctionalSpec& f, int order = kDefaultChaosOrder,
                                             int nodes = kDefaultChaosNodes) {
    require(order >= 1, ErrorCode::InvalidParameter, "chaos order K must be at least 1");
    require(order <= 170, ErrorCode::OrderTooLarge, "chaos order K exceeds 170");
    require(nodes >= 2, ErrorCode::InvalidParameter, "need at least two quadrature nodes");
    const auto projection = detail::orthonormal_projection(f, order, nodes);

    ChaosDecomposition dec{f, {}, order, std::nullopt, nodes, 0.0};
    dec.coeffs.resize(projection.size());
    const Symmetry sym = f.symmetry();
    double largest = 0.0;
    for (int k = 0; k <= order; ++k) {
        double c = projection[static_cast<std::size_t>(k)];
        if ((sym == Symmetry::Even && k % 2 == 1) || (sym == Symmetry::Odd && k % 2 == 0)) c = 0.0;
        dec.coeffs[static_cast<std::size_t>(k)] = c * std::exp(-0.5 * std::lgamma(k + 1.0));
        if (k >= 1) largest = std::max(largest, std::abs(c));
    }
    dec.tolerance = kRankRelativeTolerance * largest;
    for (int k = 1; k <= order; ++k) {
        if (largest > 0.0 && std::abs(dec.normalized(k)) > dec.tolerance) {
            dec.rank = k;
            break;
        }
    }
    return dec;
}

inline int hermite_rank(const ChaosDecomposition& dec) {
    require(dec.rank.has_value(), ErrorCode::RankUndefined,
            "all chaos coefficients up to K = " + std::to_string(dec.order) + " vanish");
    return *dec.rank;
}

struct VarianceOracle {
    double value = 0.0;
    /// Bound on the contribution of orders above K.
    double truncation_error = 0.0;
};

/// Var(sum_{i<=n} f(X_i)) = sum_{k>=1} f_k^2 k! sum_{|d|<n} (n - |d|) rho(d)^k,
/// truncated at K. `acov` must hold rho(0..n-1).
inline VarianceOracle chaos_variance_oracle(const ChaosDecomposition& dec, std::span<const double> acov,
                                            std::size_t n) {
    require(n >= 1, ErrorCode::InvalidParameter, "n must be positive");
    require(acov.size() >= n, ErrorCode::LagOutOfRange, "autocovariance must cover lags 0..n-1");
    const double second = functional_second_moment(dec.f);
    const double mean = functional_mean(dec.f);
    require(std::isfinite(second), ErrorCode::InfiniteVariance, "f(X) has infinite variance");
    const double variance = second - mean * mean;

    auto multiplier = [&](int k) {
        long double total = static_cast<long double>(n);
        for (std::size_t d = 1; d < n; ++d)
            total += 2.0L * static_cast<long double>(n - d) * std::pow(static_cast<long double>(acov[d]), k);
        return static_cast<double>(total);
    };

    VarianceOracle out;
    double captured = 0.0;
    for (int k = 1; k <= dec.order; ++k) {
        const double c = dec.normalized(k);
        if (c == 0.0) continue;
        captured += c * c;
        out.value += c * c * multiplier(k);
    }
    const double missing = std::max(0.0, variance - captured);
    // |rho| <= 1, so higher orders are dominated by the first omitted one.
    double bound = static_cast<double>(n);
    for (std::size_t d = 1; d < n; ++d)
        bound += 2.0 * static_cast<double>(n - d) * std::pow(std::abs(acov[d]), dec.order + 1);
    out.truncation_error = missing * bound;
    return out;
}

inline VarianceOracle chaos_variance_oracle(const ChaosDecomposition& dec, const CoefficientSeq& coeffs,
                                            std::size_t n) {
    require(n >= 1, ErrorCode::InvalidParameter, "n must be positive");
    std::vector<double> acov;
    if (n - 1 < coeffs.size()) {
        acov = autocovariance_sequence(coeffs, n - 1);
    } else {
        acov = autocovariance_sequence(coeffs, coeffs.size() - 1);
        acov.resize(n, 0.0);
    }
    return chaos_variance_oracle(dec, acov, n);
}

inline void to_json(nlohmann::json& j, const ChaosDecomposition& dec) {
    nlohmann::json params = dec.f;
    params.erase("family");
    j = {{"family", dec.f.family_name()},
         {"params", params},
         {"coeffs", dec.coeffs},
         {"rank", dec.rank ? nlohmann::json(*dec.rank) : nlohmann::json(nullptr)},
         {"tolerance", dec.tolerance},
         {"nodes", dec.nodes},
         {"K", dec.order},
         {"symmetry", to_string(dec.f.symmetry())}};
}

}  // namespace lrdlab
