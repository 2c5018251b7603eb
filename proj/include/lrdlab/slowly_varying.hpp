#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "lrdlab/error.hpp"

namespace lrdlab {

enum class SlowlyVaryingFamily { Constant, LogPower };

/// L(x) = c * (ln(e + x))^p. `Constant` is the p = 0 member.
struct SlowlyVarying {
    SlowlyVaryingFamily family = SlowlyVaryingFamily::Constant;
    double c = 1.0;
    double p = 0.0;

    static SlowlyVarying constant(double c) { return {SlowlyVaryingFamily::Constant, c, 0.0}; }
    static SlowlyVarying log_power(double c, double p) { return {SlowlyVaryingFamily::LogPower, c, p}; }

    double operator()(double x) const {
        if (family == SlowlyVaryingFamily::Constant || p == 0.0) return c;
        return c * std::pow(std::log(std::numbers::e + x), p);
    }

    SlowlyVarying scaled(double factor) const { return {family, c * factor, p}; }

    /// L^k, which stays inside the family.
    SlowlyVarying power(double k) const { return {family, std::pow(c, k), p * k}; }

    void validate() const {
        require(std::isfinite(c) && c > 0.0, ErrorCode::InvalidParameter, "slowly varying scale c must be positive");
        require(std::isfinite(p), ErrorCode::InvalidParameter, "slowly varying exponent p must be finite");
        require(family == SlowlyVaryingFamily::LogPower || p == 0.0, ErrorCode::InvalidParameter,
                "Constant family requires p = 0");
    }

    std::string family_name() const { return family == SlowlyVaryingFamily::Constant ? "Constant" : "LogPower"; }
};

inline void to_json(nlohmann::json& j, const SlowlyVarying& l) {
    j = nlohmann::json{{"family", l.family_name()}, {"c", l.c}, {"p", l.p}};
}

inline void from_json(const nlohmann::json& j, SlowlyVarying& l) {
    const std::string family = j.value("family", std::string("Constant"));
    if (family == "Constant")
        l.family = SlowlyVaryingFamily::Constant;
    else if (family == "LogPower")
        l.family = SlowlyVaryingFamily::LogPower;
    else
        fail(ErrorCode::ConfigError, "unknown slowly varying family '" + family + "'");
    l.c = j.value("c", 1.0);
    l.p = j.value("p", 0.0);
    l.validate();
}

}  // namespace lrdlab
