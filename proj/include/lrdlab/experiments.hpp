#pragma once

// Monte Carlo harness: ensembles of normalized partial sums, comparison with
// the predicted limits, exceedance point patterns and the extremal index.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lrdlab/chaos.hpp"
#include "lrdlab/error.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/hash.hpp"
#include "lrdlab/limit_processes.hpp"
#include "lrdlab/lrd_source.hpp"
#include "lrdlab/regimes.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/stats.hpp"
#include "lrdlab/tails.hpp"

namespace lrdlab {

/// Acceptance thresholds; mirrored by configs/thresholds.json.
struct Thresholds {
    double ks_level = 0.01;
    double ecf_max = 0.05;
    double intensity_tolerance = 0.10;
    double dispersion_lo = 0.9;
    double dispersion_hi = 1.1;
    double correlation_max = 0.05;
    double extremal_lo = 0.85;
    double extremal_hi = 1.1;
    double slope_tolerance = 0.1;
    double exceedance_c = 0.25;
    std::size_t min_exceedances = 50;
    double max_level_tolerance = 0.03;
};

inline void to_json(nlohmann::json& j, const Thresholds& t) {
    j = {{"ks_level", t.ks_level},
         {"ecf_max", t.ecf_max},
         {"intensity_tolerance", t.intensity_tolerance},
         {"dispersion_lo", t.dispersion_lo},
         {"dispersion_hi", t.dispersion_hi},
         {"correlation_max", t.correlation_max},
         {"extremal_lo", t.extremal_lo},
         {"extremal_hi", t.extremal_hi},
         {"slope_tolerance", t.slope_tolerance},
         {"exceedance_c", t.exceedance_c},
         {"min_exceedances", t.min_exceedances},
         {"max_level_tolerance", t.max_level_tolerance}};
}

inline Thresholds thresholds_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorCode::ConfigError, "thresholds must be a JSON object");
    Thresholds t;
    const nlohmann::json defaults = t;
    for (const auto& [key, value] : j.items())
        require(defaults.contains(key), ErrorCode::ConfigError, "unknown key '" + key + "' in thresholds");
    t.ks_level = j.value("ks_level", t.ks_level);
    t.ecf_max = j.value("ecf_max", t.ecf_max);
    t.intensity_tolerance = j.value("intensity_tolerance", t.intensity_tolerance);
    t.dispersion_lo = j.value("dispersion_lo", t.dispersion_lo);
    t.dispersion_hi = j.value("dispersion_hi", t.dispersion_hi);
    t.correlation_max = j.value("correlation_max", t.correlation_max);
    t.extremal_lo = j.value("extremal_lo", t.extremal_lo);
    t.extremal_hi = j.value("extremal_hi", t.extremal_hi);
    t.slope_tolerance = j.value("slope_tolerance", t.slope_tolerance);
    t.exceedance_c = j.value("exceedance_c", t.exceedance_c);
    t.min_exceedances = j.value("min_exceedances", t.min_exceedances);
    t.max_level_tolerance = j.value("max_level_tolerance", t.max_level_tolerance);
    return t;
}

/// Worker count: explicit value, else LRDLAB_THREADS, else the hardware.
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LRDLAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on `threads` workers. The first exception
/// is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct ExperimentConfig {
    FunctionalSpec f = FunctionalSpec::power_abs(-0.7, true);
    LrdConfig lrd{};
    SourceKind source = SourceKind::StationaryMa;
    std::size_t n = std::size_t{1} << 14;
    std::vector<double> grid{0.25, 0.5, 1.0};
    std::size_t paths = 2000;
    std::uint64_t seed = 20240601;
    /// "Hermite", "Stable" or "Mixed": replaces the classified regime.
    std::optional<std::string> regime_override;
    std::optional<double> lambda_override;
    std::optional<double> alpha_override;
    std::optional<double> beta_override;
    unsigned threads = 0;
    /// Draws from the limit law per comparison; 0 means `paths`.
    std::size_t limit_draws = 0;
    HermiteDiscretization hermite{};

    void validate() const {
        lrd.validate();
        require(n >= 1024, ErrorCode::InvalidParameter, "experiments need n >= 2^10");
        require(paths >= 100, ErrorCode::InvalidParameter, "experiments need at least 100 paths");
        require(!grid.empty(), ErrorCode::InvalidParameter, "time grid is empty");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            require(grid[i] >= 0.0 && grid[i] <= 1.0, ErrorCode::InvalidParameter, "time grid must lie in [0, 1]");
            require(i == 0 || grid[i] > grid[i - 1], ErrorCode::InvalidParameter, "time grid must be increasing");
        }
    }

    std::size_t draws() const { return limit_draws > 0 ? limit_draws : paths; }

    /// Identity of everything that determines the ensemble (threads excluded).
    std::string canonical() const {
        nlohmann::json j = {{"f", f},
                            {"lrd", lrd.canonical()},
                            {"source", to_string(source)},
                            {"n", n},
                            {"grid", grid},
                            {"paths", paths},
                            {"seed", seed},
                            {"limit_draws", draws()}};
        if (regime_override) j["regime_override"] = *regime_override;
        if (lambda_override) j["lambda_override"] = *lambda_override;
        if (alpha_override) j["alpha_override"] = *alpha_override;
        if (beta_override) j["beta_override"] = *beta_override;
        return j.dump();
    }

    std::uint64_t config_hash() const { return fnv1a(canonical()); }
};

/// Everything the pipeline derives from (f, lrd) before sampling.
struct PipelineModel {
    std::optional<ChaosDecomposition> chaos;
    std::optional<int> kappa;
    std::optional<TailModel> tail;
    double alpha = std::numeric_limits<double>::infinity();
    double beta = 0.0;
    double f_kappa = std::numeric_limits<double>::quiet_NaN();
    SlowlyVarying l1{};
    double lambda = 0.0;
    LimitRegime regime = FiniteVarianceOutOfScope{};
    std::string classified;
    /// Finite variance with kappa(1-H) < 1/2: normalized on the Hermite scale.
    bool finite_variance_control = false;
    NormalizationPlan plan;
};

inline nlohmann::json to_json(const PipelineModel& m) {
    nlohmann::json j = {{"kappa", m.kappa ? nlohmann::json(*m.kappa) : nlohmann::json(nullptr)},
                        {"alpha", std::isfinite(m.alpha) ? nlohmann::json(m.alpha) : nlohmann::json("inf")},
                        {"beta", m.beta},
                        {"lambda", std::isfinite(m.lambda) ? nlohmann::json(m.lambda) : nlohmann::json("inf")},
                        {"l1_effective", m.l1},
                        {"regime", m.regime},
                        {"classified", m.classified},
                        {"finite_variance_control", m.finite_variance_control},
                        {"normalization", m.plan.details},
                        {"target", m.plan.target}};
    if (std::isfinite(m.f_kappa)) j["f_kappa"] = m.f_kappa;
    if (m.tail) j["tail"] = *m.tail;
    return j;
}

inline LimitRegime regime_by_name(const std::string& name, const PipelineModel& m, double hurst) {
    auto stable = [&] {
        require(std::isfinite(m.alpha) && m.alpha < 2.0, ErrorCode::RegimeMismatch,
                "a stable regime needs a tail index below 2");
        return StableLimit{StableParams{m.alpha, stable_sigma(m.alpha), m.beta, 0.0},
                           is_alpha_one(m.alpha) ? StableCentering::TruncatedMeanPlusPsi : StableCentering::None};
    };
    auto hermite = [&] {
        require(m.kappa.has_value(), ErrorCode::RegimeMismatch, "a Hermite regime needs a Hermite rank");
        return HermiteLimit{*m.kappa, hurst, 1.0 - *m.kappa * (1.0 - hurst), m.f_kappa};
    };
    if (name == "Hermite") return hermite();
    if (name == "Stable") return stable();
    if (name == "Mixed") return MixedLimit{m.lambda, hermite(), stable()};
    fail(ErrorCode::ConfigError, "unknown regime override '" + name + "' (expected Hermite, Stable or Mixed)");
}

inline PipelineModel analyze(const ExperimentConfig& cfg, const SlowlyVarying& l1_effective) {
    PipelineModel m;
    m.l1 = l1_effective;
    const double hurst = cfg.lrd.hurst;
    try {
        m.chaos = chaos_coefficients(cfg.f);
        m.kappa = m.chaos->rank;
        if (m.kappa) m.f_kappa = m.chaos->coeffs[static_cast<std::size_t>(*m.kappa)];
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonIntegrable) throw;
    }
    try {
        m.tail = fit_tail_model(cfg.f);
        m.alpha = m.tail->alpha;
        m.beta = m.tail->beta;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoPowerTail) throw;
    }
    if (m.tail && cfg.alpha_override) m.tail->alpha = m.alpha = *cfg.alpha_override;
    if (m.tail && cfg.beta_override) m.tail->beta = m.beta = *cfg.beta_override;
    if (m.kappa && m.tail) m.lambda = lambda_limit(m.l1, *m.kappa, derive_l3(*m.tail));
    if (cfg.lambda_override) m.lambda = *cfg.lambda_override;

    const double alpha = m.tail ? m.alpha : std::numeric_limits<double>::infinity();
    m.regime = classify(m.kappa, hurst, alpha, m.lambda, ClassifyOptions{m.beta, m.f_kappa});
    m.classified = regime_name(m.regime);
    if (cfg.regime_override) {
        m.regime = regime_by_name(*cfg.regime_override, m, hurst);
    } else if (std::holds_alternative<FiniteVarianceOutOfScope>(m.regime) && m.kappa && hurst > 0.5 &&
               *m.kappa * (1.0 - hurst) < 0.5) {
        m.regime = HermiteLimit{*m.kappa, hurst, 1.0 - *m.kappa * (1.0 - hurst), m.f_kappa};
        m.finite_variance_control = true;
    }
    m.plan = normalization_plan(m.regime, cfg.f, m.l1, m.tail, cfg.n);
    return m;
}

/// Calls fn(row, x) for every path row in [0, paths). Rows 2p and 2p+1 are
/// the two halves of the pair drawn from stream kEnsembleBase + p, so a row
/// depends only on (seed, row).
inline void for_each_path(const GaussianSource& source, std::uint64_t seed, std::size_t paths, unsigned threads,
                          const std::function<void(std::size_t, std::span<const double>)>& fn) {
    const std::size_t pairs = (paths + 1) / 2;
    const std::size_t n = source.length();
    parallel_for(pairs, resolve_threads(threads), [&](std::size_t p) {
        std::vector<double> first(n), second(n);
        source.sample_pair(seed, streams::kEnsembleBase + p, first, second);
        fn(2 * p, first);
        if (2 * p + 1 < paths) fn(2 * p + 1, second);
    });
}

struct Ensemble {
    std::vector<double> grid;
    std::size_t rows = 0;
    std::vector<double> values;  // row-major, rows x grid.size()
    PipelineModel model;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    nlohmann::json provenance = nlohmann::json::object();

    double at(std::size_t row, std::size_t col) const { return values[row * grid.size() + col]; }

    std::vector<double> column(std::size_t col) const {
        std::vector<double> out(rows);
        for (std::size_t i = 0; i < rows; ++i) out[i] = at(i, col);
        return out;
    }

    std::size_t column_index(double t) const {
        for (std::size_t j = 0; j < grid.size(); ++j)
            if (std::abs(grid[j] - t) <= 1e-12) return j;
        fail(ErrorCode::InvalidParameter, "t = " + format_double(t) + " is not on the ensemble grid");
    }
};

inline Ensemble partial_sum_ensemble(const ExperimentConfig& cfg) {
    cfg.validate();
    const GaussianSource source(cfg.lrd, cfg.source, cfg.n);
    Ensemble e;
    e.model = analyze(cfg, source.effective_l1());
    e.grid = cfg.grid;
    e.rows = cfg.paths;
    e.n = cfg.n;
    e.seed = cfg.seed;
    e.config_hash = cfg.config_hash();
    e.values.assign(e.rows * e.grid.size(), 0.0);

    const auto& plan = e.model.plan;
    const double scale = plan.scale(cfg.n);
    std::vector<std::size_t> cut(e.grid.size());
    std::vector<double> offset(e.grid.size());
    for (std::size_t j = 0; j < e.grid.size(); ++j) {
        cut[j] = static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n) * e.grid[j]));
        offset[j] = plan.centering(cfg.n, e.grid[j]);
    }
    const FunctionalSpec& f = cfg.f;
    for_each_path(source, cfg.seed, cfg.paths, cfg.threads, [&](std::size_t row, std::span<const double> x) {
        long double running = 0.0L;
        std::size_t i = 0;
        for (std::size_t j = 0; j < cut.size(); ++j) {
            for (; i < cut[j]; ++i) running += f(x[i]);
            e.values[row * cut.size() + j] = scale * static_cast<double>(running) - offset[j];
        }
    });
    e.provenance = {{"config_hash", hex64(e.config_hash)},
                    {"seed", cfg.seed},
                    {"source", to_string(cfg.source)},
                    {"n", cfg.n},
                    {"paths", cfg.paths},
                    {"scale", scale},
                    {"model", to_json(e.model)}};
    return e;
}

struct VerificationReport {
    std::string name;
    double statistic = 0.0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double threshold = 0.0;
    bool passed = false;
    nlohmann::json sizes = nlohmann::json::object();
    nlohmann::json details = nlohmann::json::object();
};

inline void to_json(nlohmann::json& j, const VerificationReport& r) {
    j = {{"name", r.name},
         {"statistic", r.statistic},
         {"p_value", std::isfinite(r.p_value) ? nlohmann::json(r.p_value) : nlohmann::json(nullptr)},
         {"threshold", r.threshold},
         {"passed", r.passed},
         {"sizes", r.sizes},
         {"details", r.details}};
}

/// Law of R*(t) for a Levy motion whose time-1 law is p.
inline StableParams stable_marginal(const StableParams& p, double t) {
    StableParams out = p;
    out.sigma = p.sigma * std::pow(t, 1.0 / p.alpha);
    out.mu = p.mu * t;
    if (p.alpha == 1.0 && t != 1.0) out.mu += (2.0 / std::numbers::pi) * p.beta * p.sigma * t * std::log(t);
    return out;
}

struct VerifyOptions {
    std::size_t draws = 2000;
    std::uint64_t seed = 1;
    Thresholds thresholds{};
    HermiteDiscretization hermite{};
    std::size_t cf_points = 30;
};

/// Draws of the predicted limit at time t.
inline std::vector<double> limit_draws(const LimitRegime& regime, double t, std::size_t count, std::uint64_t seed,
                                       const HermiteDiscretization& disc) {
    auto hermite_draws = [&](const HermiteLimit& h, double factor) {
        require(std::isfinite(h.f_kappa), ErrorCode::RegimeMismatch, "Hermite target needs f_kappa");
        HermiteDiscretization d = disc;
        d.times = {t};
        const HermiteProcessSampler sampler(h.kappa, h.hurst, d);
        auto draws = sampler.sample_marginal(0, count, seed, streams::kReferenceBase + 1);
        for (auto& v : draws) v *= factor * h.f_kappa;
        return draws;
    };
    if (const auto* h = std::get_if<HermiteLimit>(&regime)) return hermite_draws(*h, 1.0);
    const auto stable = stable_part(regime);
    require(stable.has_value(), ErrorCode::RegimeMismatch, "regime " + regime_name(regime) + " has no limit sampler");
    auto draws = stable_sample(stable_marginal(stable->params, t), count, seed, streams::kReferenceBase);
    if (const auto* m = std::get_if<MixedLimit>(&regime)) {
        const auto extra = hermite_draws(m->hermite, m->lambda);
        for (std::size_t i = 0; i < draws.size(); ++i) draws[i] += extra[i];
    }
    return draws;
}

/// Two-sample KS of S_n(t) against draws of the predicted limit, plus the
/// empirical-CF sup-distance on [0.1, 3] for purely stable targets.
inline VerificationReport verify_marginal(const Ensemble& e, const LimitRegime& regime, double t,
                                          const VerifyOptions& opts = {}) {
    const auto col = e.column(e.column_index(t));
    VerificationReport r;
    r.name = "marginal_ks_" + regime_name(regime);
    const auto draws = limit_draws(regime, t, opts.draws, opts.seed, opts.hermite);
    const auto ks = stats::ks_two_sample(col, draws);
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.threshold = opts.thresholds.ks_level;
    r.passed = ks.p_value > opts.thresholds.ks_level;
    r.sizes = {{"ensemble", col.size()}, {"limit", draws.size()}, {"n", e.n}};
    r.details = {{"t", t}, {"regime", regime}, {"config_hash", hex64(e.config_hash)}, {"seed", e.seed},
                 {"limit_seed", opts.seed}};
    const bool pure_stable = std::holds_alternative<StableLimit>(regime) ||
                             std::holds_alternative<ShortMemoryStable>(regime);
    if (pure_stable) {
        const auto p = stable_marginal(stable_part(regime)->params, t);
        const auto thetas = stats::linspace(0.1, 3.0, opts.cf_points);
        const double d = stats::ecf_distance(col, [&](double th) { return stable_cf(p, th); }, thetas);
        r.details["ecf_distance"] = d;
        r.details["ecf_max"] = opts.thresholds.ecf_max;
        r.passed = r.passed && d <= opts.thresholds.ecf_max;
    }
    return r;
}

enum class ScalingStatistic { InterquantileRange, Variance };

/// Longest chain t, 2t, 4t, ... inside the grid (indices), ignoring t = 0.
inline std::vector<std::size_t> geometric_chain(std::span<const double> grid) {
    std::vector<std::size_t> best;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (grid[s] <= 0.0) continue;
        std::vector<std::size_t> chain{s};
        double t = grid[s];
        for (;;) {
            t *= 2.0;
            auto it = std::find_if(grid.begin(), grid.end(), [&](double g) { return std::abs(g - t) <= 1e-12; });
            if (it == grid.end()) break;
            chain.push_back(static_cast<std::size_t>(it - grid.begin()));
        }
        if (chain.size() > best.size()) best = std::move(chain);
    }
    return best;
}

inline double predicted_exponent(const LimitRegime& regime) {
    if (const auto* h = std::get_if<HermiteLimit>(&regime)) return h->h_ss;
    const auto s = stable_part(regime);
    require(s.has_value(), ErrorCode::RegimeMismatch, "regime has no scaling exponent");
    return 1.0 / s->params.alpha;
}

/// Slope of log(spread of S_n(t)) against log t over a geometric subgrid,
/// compared with the regime's exponent (doubled for the variance).
inline VerificationReport self_similarity_test(const Ensemble& e, const LimitRegime& regime,
                                               const Thresholds& thresholds = {},
                                               ScalingStatistic statistic = ScalingStatistic::InterquantileRange) {
    const auto chain = geometric_chain(e.grid);
    require(chain.size() >= 3, ErrorCode::GridUnsuitable, "time grid has no geometric subgrid {t, 2t, 4t}");
    std::vector<double> lx, ly;
    for (std::size_t j : chain) {
        const auto col = e.column(j);
        const double spread =
            statistic == ScalingStatistic::Variance ? stats::variance(col) : stats::interquantile_range(col);
        lx.push_back(std::log(e.grid[j]));
        ly.push_back(std::log(spread));
    }
    const auto fit = stats::ols(lx, ly);
    const double factor = statistic == ScalingStatistic::Variance ? 2.0 : 1.0;
    const double predicted = factor * predicted_exponent(regime);
    VerificationReport r;
    r.name = statistic == ScalingStatistic::Variance ? "variance_growth" : "self_similarity";
    r.statistic = fit.slope;
    r.threshold = thresholds.slope_tolerance;
    r.passed = std::abs(fit.slope - predicted) <= thresholds.slope_tolerance;
    r.sizes = {{"paths", e.rows}, {"grid_points", chain.size()}};
    r.details = {{"predicted", predicted}, {"slope_se", fit.slope_se}, {"config_hash", hex64(e.config_hash)}};
    return r;
}

// Exceedances.

struct PointPattern {
    std::vector<std::pair<double, double>> points;  // (value / a_n, i / n)
    double c = 0.25;
    std::size_t n = 0;
};

inline PointPattern exceedance_pattern(std::span<const double> values, double a_n, double c) {
    require(c > 0.0, ErrorCode::InvalidParameter, "exceedance level c must be positive");
    require(a_n > 0.0, ErrorCode::InvalidParameter, "a_n must be positive");
    PointPattern p;
    p.c = c;
    p.n = values.size();
    const double level = c * a_n;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::abs(values[i]) >= level)
            p.points.emplace_back(values[i] / a_n, static_cast<double>(i + 1) / static_cast<double>(values.size()));
    return p;
}

/// Value interval (v_lo, v_hi] times time interval (t_lo, t_hi].
struct Rectangle {
    double v_lo, v_hi, t_lo, t_hi;

    std::size_t count(const PointPattern& p) const {
        std::size_t k = 0;
        for (const auto& [v, u] : p.points)
            if (v > v_lo && v <= v_hi && u > t_lo && u <= t_hi) ++k;
        return k;
    }
};

/// nu' mass of the rectangle: (t_hi - t_lo) times the stable Levy measure
/// alpha ((1 +- beta)/2) |v|^{-alpha-1} dv of the value interval.
inline double levy_mass(const Rectangle& rect, double alpha, double beta) {
    auto upper_tail = [&](double v) { return v == std::numeric_limits<double>::infinity() ? 0.0 : std::pow(v, -alpha); };
    double mass = 0.0;
    if (rect.v_hi > 0.0) {
        const double lo = std::max(rect.v_lo, 0.0);
        mass += 0.5 * (1.0 + beta) * ((lo > 0.0 ? std::pow(lo, -alpha) : std::numeric_limits<double>::infinity()) -
                                      upper_tail(rect.v_hi));
    }
    if (rect.v_lo < 0.0) {
        const double hi = std::min(rect.v_hi, 0.0);
        mass += 0.5 * (1.0 - beta) * ((hi < 0.0 ? std::pow(-hi, -alpha) : std::numeric_limits<double>::infinity()) -
                                      upper_tail(-rect.v_lo));
    }
    return (rect.t_hi - rect.t_lo) * mass;
}

inline bool disjoint(const Rectangle& a, const Rectangle& b) {
    return a.v_hi <= b.v_lo || b.v_hi <= a.v_lo || a.t_hi <= b.t_lo || b.t_hi <= a.t_lo;
}

/// Mean counts against nu' mass, dispersion (variance/mean) against 1, and
/// Spearman correlation of counts between every pair of disjoint rectangles.
inline VerificationReport poisson_intensity_test(std::span<const PointPattern> patterns, const TailModel& tail,
                                                 std::span<const Rectangle> rectangles,
                                                 const Thresholds& thresholds = {}) {
    require(patterns.size() >= 2, ErrorCode::InvalidParameter, "need at least two patterns");
    const double c = patterns.front().c;
    for (const auto& r : rectangles) {
        require(r.v_lo < r.v_hi && r.t_lo < r.t_hi && r.t_lo >= 0.0 && r.t_hi <= 1.0, ErrorCode::DegenerateRectangle,
                "rectangle has an empty or out-of-range side");
        require(r.v_lo >= c || r.v_hi <= -c, ErrorCode::DegenerateRectangle,
                "rectangle value interval meets (-c, c)");
    }
    VerificationReport report;
    report.name = "poisson_intensity";
    report.threshold = thresholds.intensity_tolerance;
    report.passed = true;
    report.sizes = {{"replicas", patterns.size()}, {"rectangles", rectangles.size()}};
    std::vector<std::vector<double>> counts(rectangles.size(), std::vector<double>(patterns.size()));
    nlohmann::json per_rect = nlohmann::json::array();
    double worst = 0.0;
    for (std::size_t k = 0; k < rectangles.size(); ++k) {
        for (std::size_t i = 0; i < patterns.size(); ++i)
            counts[k][i] = static_cast<double>(rectangles[k].count(patterns[i]));
        const double mean = stats::mean(counts[k]);
        const double var = stats::variance(counts[k]);
        const double expected = levy_mass(rectangles[k], tail.alpha, tail.beta);
        const double rel = expected > 0.0 ? std::abs(mean / expected - 1.0) : mean;
        const bool mean_ok = rel <= thresholds.intensity_tolerance;
        const double dispersion = mean > 0.0 ? var / mean : 1.0;
        const bool disp_ok = mean == 0.0 || (dispersion >= thresholds.dispersion_lo && dispersion <= thresholds.dispersion_hi);
        worst = std::max(worst, rel);
        report.passed = report.passed && mean_ok && disp_ok;
        per_rect.push_back({{"rectangle", {rectangles[k].v_lo, rectangles[k].v_hi, rectangles[k].t_lo, rectangles[k].t_hi}},
                            {"mean", mean},
                            {"expected", expected},
                            {"relative_error", rel},
                            {"dispersion", dispersion},
                            {"mean_ok", mean_ok},
                            {"dispersion_ok", disp_ok}});
    }
    nlohmann::json corr = nlohmann::json::array();
    for (std::size_t a = 0; a < rectangles.size(); ++a)
        for (std::size_t b = a + 1; b < rectangles.size(); ++b) {
            if (!disjoint(rectangles[a], rectangles[b])) continue;
            const double rho = stats::spearman(counts[a], counts[b]);
            const bool ok = std::abs(rho) < thresholds.correlation_max;
            report.passed = report.passed && ok;
            corr.push_back({{"pair", {a, b}}, {"spearman", rho}, {"ok", ok}});
        }
    report.statistic = worst;
    report.details = {{"rectangles", per_rect}, {"correlations", corr}, {"alpha", tail.alpha}, {"beta", tail.beta}};
    return report;
}

/// Mean number of points with |v| > u against u^{-alpha} (both tails).
inline VerificationReport exceedance_totals_test(std::span<const PointPattern> patterns, double alpha,
                                                 std::span<const double> levels, const Thresholds& thresholds = {}) {
    VerificationReport r;
    r.name = "exceedance_totals";
    r.threshold = thresholds.intensity_tolerance;
    r.passed = true;
    nlohmann::json rows = nlohmann::json::array();
    for (double u : levels) {
        require(u >= patterns.front().c, ErrorCode::InvalidParameter, "level below the pattern threshold c");
        double total = 0.0;
        for (const auto& p : patterns)
            for (const auto& pt : p.points) total += std::abs(pt.first) > u ? 1.0 : 0.0;
        const double mean = total / static_cast<double>(patterns.size());
        const double expected = std::pow(u, -alpha);
        const double rel = std::abs(mean / expected - 1.0);
        r.statistic = std::max(r.statistic, rel);
        r.passed = r.passed && rel <= thresholds.intensity_tolerance;
        rows.push_back({{"u", u}, {"mean", mean}, {"expected", expected}, {"relative_error", rel}});
    }
    r.sizes = {{"replicas", patterns.size()}};
    r.details = {{"levels", rows}};
    return r;
}

/// P[max f(X_i) <= u a_n] against exp(-(1+beta)/2 u^{-alpha}).
inline VerificationReport max_level_test(std::span<const PointPattern> patterns, double alpha, double beta,
                                         std::span<const double> levels, const Thresholds& thresholds = {}) {
    VerificationReport r;
    r.name = "max_level_curve";
    r.threshold = thresholds.max_level_tolerance;
    r.passed = true;
    nlohmann::json rows = nlohmann::json::array();
    for (double u : levels) {
        require(u >= patterns.front().c, ErrorCode::InvalidParameter, "level below the pattern threshold c");
        double below = 0.0;
        for (const auto& p : patterns) {
            const bool any = std::any_of(p.points.begin(), p.points.end(), [&](const auto& pt) { return pt.first > u; });
            below += any ? 0.0 : 1.0;
        }
        const double empirical = below / static_cast<double>(patterns.size());
        const double expected = std::exp(-0.5 * (1.0 + beta) * std::pow(u, -alpha));
        const double diff = std::abs(empirical - expected);
        r.statistic = std::max(r.statistic, diff);
        r.passed = r.passed && diff <= thresholds.max_level_tolerance;
        rows.push_back({{"u", u}, {"empirical", empirical}, {"expected", expected}});
    }
    r.sizes = {{"replicas", patterns.size()}};
    r.details = {{"levels", rows}};
    return r;
}

/// Exceedance patterns of f(X_i)/a_n for every replica of cfg.
inline std::vector<PointPattern> exceedance_ensemble(const ExperimentConfig& cfg, double c) {
    cfg.validate();
    const GaussianSource source(cfg.lrd, cfg.source, cfg.n);
    const NormingSequence norming(cfg.f);
    const double a_n = norming(cfg.n);
    std::vector<PointPattern> out(cfg.paths);
    for_each_path(source, cfg.seed, cfg.paths, cfg.threads, [&](std::size_t row, std::span<const double> x) {
        std::vector<double> fx(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) fx[i] = cfg.f(x[i]);
        out[row] = exceedance_pattern(fx, a_n, c);
    });
    return out;
}

struct ExtremalIndex {
    double estimate = 0.0;
    double threshold = 0.0;
    std::size_t exceedances = 0;
    std::size_t blocks_with_exceedance = 0;
    std::size_t blocks = 0;
    std::size_t block_length = 0;
};

/// Blocks estimator in its logarithmic form,
///   theta = log(1 - K/k) / (b log(1 - N/n)),
/// with N exceedances of the threshold, K of the k blocks of length b holding
/// at least one. It reduces to K/N when both fractions are small. The default
/// threshold leaves about n/(2b) values above it.
inline ExtremalIndex extremal_index_at_threshold(std::span<const double> values, std::size_t b, double threshold,
                                                 std::size_t min_exceedances = 50) {
    require(b >= 2, ErrorCode::InvalidParameter, "block length must be at least 2");
    require(values.size() >= 2 * b, ErrorCode::InvalidParameter, "need at least two blocks");
    ExtremalIndex out;
    out.block_length = b;
    out.blocks = values.size() / b;
    out.threshold = threshold;
    const std::size_t used = out.blocks * b;
    for (std::size_t k = 0; k < out.blocks; ++k) {
        bool hit = false;
        for (std::size_t i = k * b; i < (k + 1) * b; ++i)
            if (values[i] > threshold) {
                ++out.exceedances;
                hit = true;
            }
        out.blocks_with_exceedance += hit ? 1 : 0;
    }
    require(out.exceedances >= min_exceedances, ErrorCode::TooFewExceedances,
            "only " + std::to_string(out.exceedances) + " exceedances (need " + std::to_string(min_exceedances) + ")");
    const double kk = static_cast<double>(out.blocks_with_exceedance) / static_cast<double>(out.blocks);
    const double nn = static_cast<double>(out.exceedances) / static_cast<double>(used);
    if (kk >= 1.0) {
        out.estimate = static_cast<double>(out.blocks_with_exceedance) / static_cast<double>(out.exceedances);
    } else {
        out.estimate = std::log1p(-kk) / (static_cast<double>(b) * std::log1p(-nn));
    }
    return out;
}

inline ExtremalIndex extremal_index_estimate(std::span<const double> values, std::size_t b = 0,
                                             std::size_t min_exceedances = 50) {
    require(values.size() >= 16, ErrorCode::InvalidParameter, "sequence too short for the blocks estimator");
    if (b == 0) b = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(values.size()))));
    const std::size_t target = std::max<std::size_t>(1, values.size() / (2 * b));
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(target), sorted.end(),
                     std::greater<>());
    return extremal_index_at_threshold(values, b, sorted[target], min_exceedances);
}

/// Blocks estimator with the block and exceedance counts summed over
/// independent sequences; each sequence keeps its own threshold.
inline ExtremalIndex extremal_index_pooled(std::span<const std::vector<double>> sequences, std::size_t b = 0,
                                           std::size_t min_exceedances = 50) {
    require(!sequences.empty(), ErrorCode::InvalidParameter, "no sequences to pool");
    ExtremalIndex pooled;
    std::size_t used = 0;
    for (const auto& s : sequences) {
        const auto one = extremal_index_estimate(s, b, std::size_t{0});
        pooled.block_length = one.block_length;
        pooled.blocks += one.blocks;
        pooled.blocks_with_exceedance += one.blocks_with_exceedance;
        pooled.exceedances += one.exceedances;
        used += one.blocks * one.block_length;
    }
    require(pooled.exceedances >= min_exceedances, ErrorCode::TooFewExceedances,
            "only " + std::to_string(pooled.exceedances) + " exceedances (need " + std::to_string(min_exceedances) + ")");
    const double kk = static_cast<double>(pooled.blocks_with_exceedance) / static_cast<double>(pooled.blocks);
    const double nn = static_cast<double>(pooled.exceedances) / static_cast<double>(used);
    pooled.estimate = kk >= 1.0 ? static_cast<double>(pooled.blocks_with_exceedance) / static_cast<double>(pooled.exceedances)
                                : std::log1p(-kk) / (static_cast<double>(pooled.block_length) * std::log1p(-nn));
    pooled.threshold = std::numeric_limits<double>::quiet_NaN();
    return pooled;
}

/// Pass rate of the two-sample KS test at `level` when both samples are
/// drawn from the same stable law.
inline double ks_null_pass_rate(const StableParams& p, std::size_t batches, std::size_t m, double level,
                                std::uint64_t seed, unsigned threads = 1) {
    std::vector<int> pass(batches, 0);
    parallel_for(batches, resolve_threads(threads), [&](std::size_t b) {
        const auto x = stable_sample(p, m, seed, streams::kAuxiliaryBase + 2 * b);
        const auto y = stable_sample(p, m, seed, streams::kAuxiliaryBase + 2 * b + 1);
        pass[b] = stats::ks_two_sample(x, y).p_value > level ? 1 : 0;
    });
    double total = 0.0;
    for (int v : pass) total += v;
    return total / static_cast<double>(batches);
}

// Power-function sweep f = |x|^r.

struct SweepRow {
    double r = 0.0;
    double alpha = 0.0;
    std::optional<int> kappa;
    std::string regime;
    double ks_p = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    bool boundary = false;
};

struct SweepResult {
    double hurst = 0.0;
    /// r* = 1 - 2H, where 1 - 2(1-H) = -r.
    double boundary_r = 0.0;
    /// The example's printed boundary 1/(1-2H), kept for comparison.
    double printed_boundary = 0.0;
    std::vector<SweepRow> rows;
};

inline SweepResult power_example_sweep(double hurst, std::span<const double> r_grid, std::size_t n, std::size_t paths,
                                       std::uint64_t seed, unsigned threads = 0, const VerifyOptions& opts = {}) {
    SweepResult out;
    out.hurst = hurst;
    out.boundary_r = 1.0 - 2.0 * hurst;
    out.printed_boundary = 1.0 / (1.0 - 2.0 * hurst);
    for (double r : r_grid) {
        require(r < 0.0, ErrorCode::InvalidParameter, "sweep exponents must be negative");
        ExperimentConfig cfg;
        cfg.f = FunctionalSpec::power_abs(r, r > -1.0);
        cfg.lrd.hurst = hurst;
        cfg.n = n;
        cfg.paths = paths;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.grid = {0.25, 0.5, 1.0};
        SweepRow row;
        row.r = r;
        row.alpha = -1.0 / r;
        row.n = n;
        row.paths = paths;
        row.seed = seed;
        row.boundary = boundary_sign(2, hurst, row.alpha) == 0;
        try {
            const auto e = partial_sum_ensemble(cfg);
            row.kappa = e.model.kappa;
            row.regime = regime_name(e.model.regime);
            if (!std::holds_alternative<FiniteVarianceOutOfScope>(e.model.regime)) {
                VerifyOptions o = opts;
                o.draws = paths;
                o.seed = seed + 1;
                row.ks_p = verify_marginal(e, e.model.regime, 1.0, o).p_value;
                row.slope = self_similarity_test(e, e.model.regime, o.thresholds).statistic;
            }
        } catch (const Error& err) {
            if (err.code() != ErrorCode::RegimeMismatch && err.code() != ErrorCode::GridTooCoarse) throw;
            row.regime = std::string(to_string(err.code()));
        }
        out.rows.push_back(row);
    }
    return out;
}

inline void write_csv(const SweepResult& s, std::ostream& os, std::uint64_t config_hash) {
    os << "# H=" << format_double(s.hurst) << " boundary_r=" << format_double(s.boundary_r)
       << " printed_boundary=" << format_double(s.printed_boundary) << " config_hash=" << hex64(config_hash) << '\n';
    os << "r,alpha,kappa,regime,ks_p,slope,n,M,seed\n";
    for (const auto& row : s.rows) {
        os << format_double(row.r) << ',' << format_double(row.alpha) << ','
           << (row.kappa ? std::to_string(*row.kappa) : std::string("NA")) << ',' << row.regime << ','
           << (std::isfinite(row.ks_p) ? format_double(row.ks_p) : std::string("NA")) << ','
           << (std::isfinite(row.slope) ? format_double(row.slope) : std::string("NA")) << ',' << row.n << ','
           << row.paths << ',' << row.seed << '\n';
    }
}

}  // namespace lrdlab
