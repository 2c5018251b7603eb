#pragma once

// Batch front-end behind tools/lrdlab.cpp.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrdlab/config.hpp"
#include "lrdlab/experiments.hpp"
#include "lrdlab/svg.hpp"

namespace lrdlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheckFailed = 3;

struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool strict = false;
    std::string format = "csv";
    bool timestamps = false;
};

/// Files written during one run; removed again unless commit() is called.
class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
        if (created_dir_) std::filesystem::remove(dir_, ec);
    }

    bool enabled() const { return !dir_.empty(); }

    void write(const std::string& name, const std::string& content) {
        if (!enabled()) return;
        if (!std::filesystem::exists(dir_)) {
            std::filesystem::create_directories(dir_);
            created_dir_ = true;
        }
        const auto path = std::filesystem::path(dir_) / name;
        std::ofstream os(path, std::ios::binary);
        require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
        written_.push_back(path);
        os << content;
        require(static_cast<bool>(os), ErrorCode::IoError, "failed writing " + path.string());
    }

    void commit() { committed_ = true; }
    const std::vector<std::filesystem::path>& written() const { return written_; }

private:
    std::string dir_;
    std::vector<std::filesystem::path> written_;
    bool created_dir_ = false;
    bool committed_ = false;
};

namespace detail {

inline std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

inline std::string provenance_line(std::uint64_t hash, std::uint64_t seed) {
    return "config_hash=" + hex64(hash) + " seed=" + std::to_string(seed);
}

struct Context {
    RunManifest manifest;
    RunConfig config;
    std::ostream& out;
    OutputSet outputs;
    std::optional<std::string> stamp;

    std::uint64_t hash() const { return config.experiment.config_hash(); }
    std::uint64_t seed() const { return config.experiment.seed; }

    nlohmann::json stamped(nlohmann::json j) const {
        j["config_hash"] = hex64(hash());
        j["seed"] = seed();
        return j;
    }

    void emit(const std::string& name, const nlohmann::json& j) {
        const auto full = stamped(j);
        outputs.write(name, full.dump(2) + "\n");
        out << full.dump(2) << '\n';
    }
};

inline int cmd_coeffs(Context& c) {
    const auto& cfg = c.config.experiment.lrd;
    const auto coeffs = build_coefficients(cfg);
    std::ostringstream csv;
    csv << "# " << provenance_line(c.hash(), c.seed()) << " H=" << format_double(cfg.hurst)
        << " M=" << cfg.truncation << '\n'
        << "j,b\n";
    for (std::size_t j = 0; j < coeffs.size(); ++j) csv << j << ',' << format_double(coeffs.b[j]) << '\n';
    c.outputs.write("coeffs.csv", csv.str());
    const std::size_t lags = std::min<std::size_t>(64, coeffs.size() - 1);
    c.emit("coeffs.json", {{"H", cfg.hurst},
                           {"M", cfg.truncation},
                           {"l1", cfg.l1},
                           {"scale", coeffs.scale},
                           {"effective_l1", coeffs.effective_l1()},
                           {"tail_mass_bound", coeffs.tail_mass_bound},
                           {"b_head", std::vector<double>(coeffs.b.begin(), coeffs.b.begin() + 8)},
                           {"autocovariance", autocovariance_sequence(coeffs, lags)}});
    return kExitOk;
}

inline int cmd_sample(Context& c) {
    const auto& ex = c.config.experiment;
    const GaussianSource source(ex.lrd, ex.source, ex.n);
    const auto sample = source.sample(ex.seed);
    if (c.manifest.format == "json") {
        c.outputs.write("sample.json", c.stamped({{"metadata", sample.metadata}, {"values", sample.values}}).dump() + "\n");
    } else {
        std::ostringstream csv;
        write_csv(sample, csv);
        c.outputs.write("sample.csv", csv.str());
    }
    std::ostringstream bin;
    write_binary(sample, bin);
    c.outputs.write("sample.lrds", bin.str());
    c.out << c.stamped({{"metadata", sample.metadata},
                        {"n", sample.values.size()},
                        {"mean", stats::mean(sample.values)},
                        {"variance", stats::variance(sample.values)}})
                 .dump(2)
          << '\n';
    return kExitOk;
}

inline int cmd_chaos(Context& c, int order) {
    const auto dec = chaos_coefficients(c.config.experiment.f, order);
    nlohmann::json j = dec;
    j["normalized"] = nlohmann::json::array();
    for (int k = 0; k <= dec.order; ++k) j["normalized"].push_back(dec.normalized(k));
    c.emit("chaos.json", j);
    return kExitOk;
}

inline int cmd_tail(Context& c) {
    const auto& f = c.config.experiment.f;
    const auto model = fit_tail_model(f);
    const NormingSequence norming(f);
    nlohmann::json an = nlohmann::json::array();
    for (int e = 10; e <= 20; e += 2) {
        const std::uint64_t n = std::uint64_t{1} << e;
        const double a = norming(n);
        an.push_back({{"n", n}, {"a_n", a}, {"residual", static_cast<double>(n) * abs_tail_probability(f, a) - 1.0}});
    }
    c.emit("tail.json", {{"functional", f},
                         {"tail", model},
                         {"l3", derive_l3(model)},
                         {"mode", norming.mode() == NormingMode::Analytic ? "analytic" : "numeric"},
                         {"norming", an}});
    return kExitOk;
}

struct ClassifyArgs {
    std::optional<int> kappa;
    std::optional<double> hurst, alpha, lambda, beta;
};

inline int cmd_classify(Context& c, const ClassifyArgs& a) {
    LimitRegime regime;
    nlohmann::json extra = nlohmann::json::object();
    if (a.hurst && a.alpha) {
        regime = classify(a.kappa, *a.hurst, *a.alpha, a.lambda.value_or(0.0), ClassifyOptions{a.beta.value_or(1.0)});
    } else {
        require(!c.manifest.config_path.empty(), ErrorCode::ConfigError,
                "classify needs --hurst and --alpha, or --config");
        const auto& ex = c.config.experiment;
        const GaussianSource source(ex.lrd, ex.source, 2);
        const auto model = analyze(ex, source.effective_l1());
        regime = model.regime;
        extra = to_json(model);
    }
    nlohmann::json j = regime;
    if (!extra.empty()) j["model"] = extra;
    if (c.manifest.format == "svg" && c.outputs.enabled()) {
        const int kappa = a.kappa.value_or(2);
        c.outputs.write("regime_map.svg", svg::regime_map(kappa, provenance_line(c.hash(), c.seed()), c.stamp));
    }
    c.emit("classify.json", j);
    return kExitOk;
}

struct LimitArgs {
    std::string process = "stable";
    int kappa = 2;
    double hurst = 0.9;
    double alpha = 1.5, sigma = 1.0, beta = 0.0;
    int points = 64;
};

inline int cmd_limit(Context& c, const LimitArgs& a) {
    std::vector<double> grid;
    for (int i = 1; i <= a.points; ++i) grid.push_back(static_cast<double>(i) / a.points);
    ProcessPath path;
    if (a.process == "stable") {
        std::vector<double> with_zero{0.0};
        with_zero.insert(with_zero.end(), grid.begin(), grid.end());
        path = stable_levy_path(StableParams{a.alpha, a.sigma, a.beta, 0.0}, with_zero, c.seed());
    } else if (a.process == "hermite") {
        HermiteDiscretization disc = c.config.experiment.hermite;
        disc.times = grid;
        path = hermite_process_sample(a.kappa, a.hurst, disc, c.seed());
    } else {
        fail(ErrorCode::ConfigError, "unknown process '" + a.process + "' (expected stable or hermite)");
    }
    path.metadata["config_hash"] = hex64(c.hash());
    std::ostringstream csv;
    write_csv(path, csv);
    c.outputs.write("path.csv", csv.str());
    c.out << c.stamped({{"metadata", path.metadata}, {"points", path.times.size()}, {"final", path.values.back()}}).dump(2)
          << '\n';
    return kExitOk;
}

inline int cmd_verify(Context& c) {
    auto ex = c.config.experiment;
    ex.threads = c.manifest.threads;
    const auto& th = c.config.thresholds;
    nlohmann::json reports = nlohmann::json::array();
    bool passed = true;
    std::optional<Ensemble> ensemble;
    try {
        ensemble = partial_sum_ensemble(ex);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RegimeMismatch) throw;
        VerificationReport r;
        r.name = "normalization";
        r.passed = false;
        r.details = {{"error", e.what()}};
        reports.push_back(r);
        passed = false;
    }
    if (ensemble) {
        const double t_last = ensemble->grid.back();
        VerifyOptions opts;
        opts.draws = ex.draws();
        opts.seed = ex.seed + 1;
        opts.thresholds = th;
        opts.hermite = ex.hermite;
        std::vector<double> limit;
        try {
            const auto marginal = verify_marginal(*ensemble, ensemble->model.regime, t_last, opts);
            reports.push_back(marginal);
            passed = passed && marginal.passed;
            limit = limit_draws(ensemble->model.regime, t_last, opts.draws, opts.seed, opts.hermite);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RegimeMismatch && e.code() != ErrorCode::GridTooCoarse) throw;
            VerificationReport r;
            r.name = "marginal";
            r.details = {{"error", e.what()}};
            reports.push_back(r);
            passed = false;
        }
        if (geometric_chain(ensemble->grid).size() >= 3) {
            const auto scaling = self_similarity_test(*ensemble, ensemble->model.regime, th);
            reports.push_back(scaling);
            passed = passed && scaling.passed;
        }
        std::ostringstream csv;
        csv << "# " << provenance_line(c.hash(), c.seed()) << '\n' << "path";
        for (double t : ensemble->grid) csv << ",t=" << format_double(t);
        csv << '\n';
        for (std::size_t i = 0; i < ensemble->rows; ++i) {
            csv << i;
            for (std::size_t j = 0; j < ensemble->grid.size(); ++j) csv << ',' << format_double(ensemble->at(i, j));
            csv << '\n';
        }
        c.outputs.write("ensemble.csv", csv.str());
        if (c.manifest.format == "svg") {
            const auto prov = provenance_line(c.hash(), c.seed());
            const auto col = ensemble->column(ensemble->grid.size() - 1);
            if (!limit.empty())
                c.outputs.write("marginal.svg", svg::histogram_overlay(col, limit, "ensemble S_n(t)", "limit draws",
                                                                       "S_n(t) vs predicted limit", prov, c.stamp));
            const auto chain = geometric_chain(ensemble->grid);
            if (chain.size() >= 2) {
                std::vector<double> ts, spreads;
                for (std::size_t j : chain) {
                    ts.push_back(ensemble->grid[j]);
                    spreads.push_back(stats::interquantile_range(ensemble->column(j)));
                }
                c.outputs.write("scaling.svg", svg::loglog_plot(ts, spreads, "interquartile range vs t", prov, c.stamp));
            }
        }
    }
    nlohmann::json summary = {{"passed", passed}, {"reports", reports}, {"thresholds", th}};
    if (ensemble) summary["provenance"] = ensemble->provenance;
    c.emit("verify.json", summary);
    if (c.manifest.strict && !passed) return kExitCheckFailed;
    return kExitOk;
}

inline int cmd_sweep(Context& c) {
    const auto& ex = c.config.experiment;
    VerifyOptions opts;
    opts.thresholds = c.config.thresholds;
    opts.hermite = ex.hermite;
    const auto result =
        power_example_sweep(ex.lrd.hurst, c.config.sweep.r, ex.n, ex.paths, ex.seed, c.manifest.threads, opts);
    std::ostringstream csv;
    write_csv(result, csv, c.hash());
    c.outputs.write("sweep.csv", csv.str());
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows)
        rows.push_back({{"r", r.r},
                        {"alpha", r.alpha},
                        {"kappa", r.kappa ? nlohmann::json(*r.kappa) : nlohmann::json(nullptr)},
                        {"regime", r.regime},
                        {"ks_p", std::isfinite(r.ks_p) ? nlohmann::json(r.ks_p) : nlohmann::json(nullptr)},
                        {"slope", std::isfinite(r.slope) ? nlohmann::json(r.slope) : nlohmann::json(nullptr)},
                        {"on_boundary", r.boundary}});
    if (c.manifest.format == "svg")
        c.outputs.write("regime_map.svg", svg::regime_map(2, provenance_line(c.hash(), c.seed()), c.stamp));
    c.emit("sweep.json", {{"H", result.hurst},
                          {"boundary_r", result.boundary_r},
                          {"printed_boundary", result.printed_boundary},
                          {"rows", rows}});
    return kExitOk;
}

}  // namespace detail

/// Runs one subcommand. Exit codes: 0 success, 2 usage or configuration
/// error, 3 failed check under --strict.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"lrdlab: limit theorems for heavy-tailed functionals of long-range dependent Gaussian sequences",
                 "lrdlab"};
    app.require_subcommand(1);
    RunManifest manifest;
    std::uint64_t seed = 0;
    auto add_globals = [&](CLI::App* a) {
        a->add_option("--config", manifest.config_path, "JSON run configuration");
        a->add_option("--out", manifest.out_dir, "output directory for artifacts");
        a->add_option("--seed", seed, "master seed (overrides the config)");
        a->add_option("--threads", manifest.threads, "worker threads (fallback: LRDLAB_THREADS)");
        a->add_flag("--strict", manifest.strict, "exit 3 when a verification check fails");
        a->add_option("--format", manifest.format, "artifact format")->check(CLI::IsMember({"csv", "json", "svg"}));
        a->add_flag("--timestamps", manifest.timestamps, "add a generation time comment to SVG files");
    };

    auto* coeffs = app.add_subcommand("coeffs", "moving-average coefficients b_j");
    auto* sample = app.add_subcommand("sample", "one Gaussian sample path");
    auto* chaos = app.add_subcommand("chaos", "Hermite chaos coefficients of f");
    auto* tail = app.add_subcommand("tail", "tail model and norming constants of f(X)");
    auto* classify_cmd = app.add_subcommand("classify", "limit regime for (kappa, H, alpha)");
    auto* limit = app.add_subcommand("limit", "sample a limit process path");
    auto* verify = app.add_subcommand("verify", "Monte Carlo verification of the predicted limit");
    auto* sweep = app.add_subcommand("sweep", "regime sweep over f(x) = |x|^r");
    for (auto* s : {coeffs, sample, chaos, tail, classify_cmd, limit, verify, sweep}) add_globals(s);

    std::optional<double> hurst_flag;
    std::optional<std::size_t> truncation_flag, n_flag;
    coeffs->add_option("--hurst", hurst_flag, "Hurst index H");
    coeffs->add_option("--truncation", truncation_flag, "truncation length M");
    sample->add_option("--hurst", hurst_flag, "Hurst index H");
    sample->add_option("--n", n_flag, "sample length");
    int order = kDefaultChaosOrder;
    chaos->add_option("--order", order, "truncation order K");
    detail::ClassifyArgs cargs;
    classify_cmd->add_option("--kappa", cargs.kappa, "Hermite rank");
    classify_cmd->add_option("--hurst", cargs.hurst, "Hurst index H");
    classify_cmd->add_option("--alpha", cargs.alpha, "tail index alpha");
    classify_cmd->add_option("--lambda", cargs.lambda, "lim L1^kappa / L3 (boundary case)");
    classify_cmd->add_option("--beta", cargs.beta, "skewness of the stable part");
    detail::LimitArgs largs;
    limit->add_option("--process", largs.process, "stable or hermite");
    limit->add_option("--kappa", largs.kappa, "Hermite order (1 or 2)");
    limit->add_option("--hurst", largs.hurst, "Hurst index H");
    limit->add_option("--alpha", largs.alpha, "stable index");
    limit->add_option("--sigma", largs.sigma, "stable scale");
    limit->add_option("--beta", largs.beta, "stable skewness");
    limit->add_option("--points", largs.points, "grid points on (0, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    for (auto* s : app.get_subcommands()) manifest.subcommand = s->get_name();
    auto* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) manifest.seed = seed;

    try {
        RunConfig config = manifest.config_path.empty() ? RunConfig{} : load_run_config(manifest.config_path);
        auto& ex = config.experiment;
        if (manifest.seed) ex.seed = *manifest.seed;
        if (hurst_flag) ex.lrd.hurst = *hurst_flag;
        if (truncation_flag) ex.lrd.truncation = *truncation_flag;
        if (n_flag) ex.n = *n_flag;
        ex.threads = manifest.threads;
        ex.lrd.validate();

        detail::Context c{manifest, std::move(config), out, OutputSet(manifest.out_dir),
                          manifest.timestamps ? std::optional<std::string>(detail::timestamp_now()) : std::nullopt};
        int code = kExitOk;
        const auto& name = manifest.subcommand;
        if (name == "coeffs") code = detail::cmd_coeffs(c);
        else if (name == "sample") code = detail::cmd_sample(c);
        else if (name == "chaos") code = detail::cmd_chaos(c, order);
        else if (name == "tail") code = detail::cmd_tail(c);
        else if (name == "classify") code = detail::cmd_classify(c, cargs);
        else if (name == "limit") code = detail::cmd_limit(c, largs);
        else if (name == "verify") code = detail::cmd_verify(c);
        else if (name == "sweep") code = detail::cmd_sweep(c);
        c.outputs.commit();
        return code;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace lrdlab::cli
