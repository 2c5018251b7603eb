#pragma once

// JSON run configuration: {functional, lrd, tail_overrides, experiment,
// thresholds, sweep}. Unknown keys are errors and carry the line they appear on.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/experiments.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/lrd_source.hpp"

namespace lrdlab {

struct SweepSettings {
    std::vector<double> r{-0.9, -0.8, -0.7, -0.6, -0.4, -0.3, -1.0};
};

struct RunConfig {
    ExperimentConfig experiment;
    Thresholds thresholds;
    SweepSettings sweep;
    std::string text;  // raw document, for line lookups
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the first occurrence of "key" in the raw text, 0 if absent.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

inline void check_keys(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> allowed,
                       const std::string& text) {
    require(j.is_object(), ErrorCode::ConfigError, "section '" + section + "' must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) {
            const auto line = line_of_key(text, key);
            fail(ErrorCode::ConfigError, "line " + std::to_string(line) + ": unknown key '" + key + "' in section '" +
                                             section + "'");
        }
    }
}

/// Runs fn, adding the line of `key` to any error it raises.
template <class Fn>
auto with_line(const std::string& text, const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_of_key(text, key)) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_of_key(text, key)) + ": " + e.what());
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    cfg.text = text;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ConfigError, "line " + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                                         ": " + e.what());
    }
    detail::check_keys(doc, "<root>", {"functional", "lrd", "tail_overrides", "experiment", "thresholds", "sweep"}, text);
    auto& ex = cfg.experiment;
    if (doc.contains("functional"))
        ex.f = detail::with_line(text, "functional", [&] { return functional_from_json(doc["functional"]); });
    if (doc.contains("lrd")) {
        const auto& j = doc["lrd"];
        detail::check_keys(j, "lrd", {"hurst", "l1", "truncation", "source"}, text);
        detail::with_line(text, "lrd", [&] {
            ex.lrd.hurst = j.value("hurst", ex.lrd.hurst);
            if (j.contains("l1")) {
                detail::check_keys(j["l1"], "lrd.l1", {"family", "c", "p"}, text);
                ex.lrd.l1 = j["l1"].get<SlowlyVarying>();
            }
            ex.lrd.truncation = j.value("truncation", ex.lrd.truncation);
            if (j.contains("source")) ex.source = parse_source_kind(j["source"].get<std::string>());
            ex.lrd.validate();
            return 0;
        });
    }
    if (doc.contains("tail_overrides")) {
        const auto& j = doc["tail_overrides"];
        detail::check_keys(j, "tail_overrides", {"alpha", "beta"}, text);
        if (j.contains("alpha")) ex.alpha_override = j["alpha"].get<double>();
        if (j.contains("beta")) ex.beta_override = j["beta"].get<double>();
    }
    if (doc.contains("experiment")) {
        const auto& j = doc["experiment"];
        detail::check_keys(j, "experiment",
                           {"n", "grid", "paths", "seed", "regime_override", "lambda_override", "limit_draws", "hermite"},
                           text);
        detail::with_line(text, "experiment", [&] {
            ex.n = j.value("n", ex.n);
            if (j.contains("grid")) ex.grid = j["grid"].get<std::vector<double>>();
            ex.paths = j.value("paths", ex.paths);
            ex.seed = j.value("seed", ex.seed);
            if (j.contains("regime_override")) ex.regime_override = j["regime_override"].get<std::string>();
            if (j.contains("lambda_override")) ex.lambda_override = j["lambda_override"].get<double>();
            ex.limit_draws = j.value("limit_draws", ex.limit_draws);
            if (j.contains("hermite")) {
                const auto& h = j["hermite"];
                detail::check_keys(h, "experiment.hermite",
                                   {"extent", "fine_cells", "coarse_cells", "epsilon", "tail_mass_target"}, text);
                ex.hermite.extent = h.value("extent", ex.hermite.extent);
                ex.hermite.fine_cells = h.value("fine_cells", ex.hermite.fine_cells);
                ex.hermite.coarse_cells = h.value("coarse_cells", ex.hermite.coarse_cells);
                ex.hermite.epsilon = h.value("epsilon", ex.hermite.epsilon);
                ex.hermite.tail_mass_target = h.value("tail_mass_target", ex.hermite.tail_mass_target);
            }
            ex.validate();
            return 0;
        });
    }
    if (doc.contains("thresholds"))
        cfg.thresholds = detail::with_line(text, "thresholds", [&] { return thresholds_from_json(doc["thresholds"]); });
    if (doc.contains("sweep")) {
        const auto& j = doc["sweep"];
        detail::check_keys(j, "sweep", {"r"}, text);
        cfg.sweep.r = detail::with_line(text, "sweep", [&] { return j.at("r").get<std::vector<double>>(); });
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace lrdlab
