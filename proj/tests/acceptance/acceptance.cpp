// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Seeds and tolerances are fixed here so a rerun reproduces every number.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lrdlab/lrdlab.hpp"
#include "oracles.hpp"

using namespace lrdlab;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr std::uint64_t kLimitSeed = 77;
constexpr std::size_t kPaths = 2000;
constexpr std::size_t kN14 = std::size_t{1} << 14;
constexpr std::size_t kN16 = std::size_t{1} << 16;

// Tolerances.
constexpr double kKsLevel = 0.01;
constexpr double kEcfMax = 0.05;
constexpr double kSlopeTol = 0.1;
constexpr double kIntensityTol = 0.10;
constexpr double kDispersionLo = 0.9, kDispersionHi = 1.1;
constexpr double kCorrelationMax = 0.05;
constexpr double kExtremalLo = 0.85, kExtremalHi = 1.1;
constexpr double kControlLo = 0.4, kControlHi = 0.6;
constexpr double kOrthogonalityTol = 1e-9;
constexpr double kInversionTol = 1e-9;
constexpr double kPsiTol = 1e-8;
constexpr double kSigmaTol = 1e-10;
constexpr double kKaramataTol = 0.02;
constexpr double kAcfTol = 0.02;
constexpr double kVarianceTol = 0.03;
constexpr double kCalibrationTarget = 0.99, kCalibrationTol = 0.01;

struct Outcome {
    bool passed = true;
    std::string summary;
    std::vector<std::string> details;

    void check(bool ok, const std::string& line) {
        passed = passed && ok;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
    }
    void note(const std::string& line) { details.push_back("     " + line); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Thresholds pinned_thresholds() {
    Thresholds t;
    t.ks_level = kKsLevel;
    t.ecf_max = kEcfMax;
    t.slope_tolerance = kSlopeTol;
    t.intensity_tolerance = kIntensityTol;
    t.dispersion_lo = kDispersionLo;
    t.dispersion_hi = kDispersionHi;
    t.correlation_max = kCorrelationMax;
    t.extremal_lo = kExtremalLo;
    t.extremal_hi = kExtremalHi;
    return t;
}

ExperimentConfig base_config(double hurst, unsigned threads) {
    ExperimentConfig cfg;
    cfg.lrd.hurst = hurst;
    cfg.n = kN14;
    cfg.paths = kPaths;
    cfg.seed = kSeed;
    cfg.threads = threads;
    cfg.grid = {0.25, 0.5, 1.0};
    return cfg;
}

VerifyOptions verify_options() {
    VerifyOptions o;
    o.draws = kPaths;
    o.seed = kLimitSeed;
    o.thresholds = pinned_thresholds();
    return o;
}

std::string report_line(const VerificationReport& r) {
    std::string s = r.name + fmt(": statistic %.4g", r.statistic);
    if (std::isfinite(r.p_value)) s += fmt(", p = %.4g", r.p_value);
    if (r.details.contains("ecf_distance")) s += fmt(", ecf = %.4f", r.details["ecf_distance"].get<double>());
    if (r.details.contains("predicted")) s += fmt(", predicted %.4g", r.details["predicted"].get<double>());
    return s;
}

Outcome criterion1(unsigned threads) {
    Outcome out;
    auto cfg = base_config(0.6, threads);
    const auto e = partial_sum_ensemble(cfg);
    out.note("regime " + e.model.classified + ", config " + hex64(e.config_hash));
    const auto r = verify_marginal(e, e.model.regime, 1.0, verify_options());
    out.check(r.p_value > kKsLevel, report_line(r) + fmt(" (KS level %.2g)", kKsLevel));
    out.check(r.details["ecf_distance"].get<double>() <= kEcfMax, fmt("ecf sup-distance on [0.1, 3] <= %.2g", kEcfMax));
    const auto s = self_similarity_test(e, e.model.regime, pinned_thresholds());
    out.note(report_line(s));
    out.summary = "stable regime, H = 0.6, n = 2^14";
    return out;
}

Outcome criterion2(unsigned threads) {
    Outcome out;
    auto cfg = base_config(0.9, threads);
    const auto e = partial_sum_ensemble(cfg);
    out.note("regime " + e.model.classified + fmt(", scale n^-%.2f", predicted_exponent(e.model.regime)));
    const auto r = verify_marginal(e, e.model.regime, 1.0, verify_options());
    out.check(r.passed, report_line(r) + fmt(" (KS level %.2g)", kKsLevel));

    // Var R_{2,0.9}(t) from sampled paths; the ensemble itself has infinite variance.
    HermiteDiscretization disc;
    disc.times = {0.125, 0.25, 0.5, 1.0};
    const HermiteProcessSampler sampler(2, 0.9, disc);
    const auto paths = sampler.sample_paths(kSeed, streams::kAuxiliaryBase, 20000);
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < disc.times.size(); ++j) {
        std::vector<double> col(static_cast<std::size_t>(paths.rows()));
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = paths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        lx.push_back(std::log(disc.times[j]));
        ly.push_back(std::log(stats::variance(col)));
    }
    const auto fit = stats::ols(lx, ly);
    out.check(std::abs(fit.slope - 1.6) <= kSlopeTol, fmt("variance growth slope %.4f vs 1.6 +- %.1f", fit.slope, kSlopeTol));
    const auto s = self_similarity_test(e, e.model.regime, pinned_thresholds());
    out.note(report_line(s));
    out.summary = "Hermite regime, H = 0.9, n = 2^14";
    return out;
}

Outcome criterion3(unsigned threads) {
    Outcome out;
    auto cfg = base_config(0.85, threads);
    const GaussianSource probe(cfg.lrd, cfg.source, 1024);
    const double natural = analyze(cfg, probe.effective_l1()).lambda;
    // Scaling f by s multiplies L3 by s and so divides lambda by s.
    cfg.f = FunctionalSpec::affine(FunctionalSpec::power_abs(-0.7, true), natural / 2.0, 0.0);
    const auto e = partial_sum_ensemble(cfg);
    out.note(fmt("natural lambda %.6f, rescaled lambda %.6f, regime ", natural, e.model.lambda) + e.model.classified);
    out.check(e.model.classified == "Mixed" && std::abs(e.model.lambda - 2.0) < 1e-9, "boundary case with lambda = 2");
    const auto r = verify_marginal(e, e.model.regime, 1.0, verify_options());
    out.check(r.passed, report_line(r) + fmt(" (KS level %.2g)", kKsLevel));
    out.summary = "mixed regime, H = 0.85, lambda = 2";
    return out;
}

Outcome criterion4(unsigned threads) {
    Outcome out;
    auto cfg = base_config(0.6, threads);
    cfg.f = FunctionalSpec::power_abs(-1.0, false);
    cfg.n = kN16;
    const auto e = partial_sum_ensemble(cfg);
    const double psi = psi_constant(1e-10);
    out.note("regime " + e.model.classified + fmt(", psi = %.10f", psi));
    const auto r = verify_marginal(e, e.model.regime, 1.0, verify_options());
    out.check(r.passed, report_line(r) + " vs S_1(pi/2, 1, 0)");
    // Same ensemble with the 2 psi / pi shift undone, against S_1(pi/2, 1, 1 - gamma).
    auto col = e.column(e.column_index(1.0));
    for (auto& v : col) v += 2.0 * psi / std::numbers::pi;
    const double shift = 1.0 - std::numbers::egamma;
    const auto draws = stable_sample({1.0, std::numbers::pi / 2.0, 1.0, shift}, kPaths, kLimitSeed);
    const auto alt = stats::ks_two_sample(col, draws);
    out.note(fmt("diagnostic: without 2 psi t / pi, KS vs S_1(pi/2, 1, 1 - gamma) p = %.4g", alt.p_value));
    out.summary = "alpha = 1 centering, n = 2^16";
    return out;
}

Outcome criterion5(unsigned threads) {
    Outcome out;
    auto cfg = base_config(0.9, threads);
    const auto patterns = exceedance_ensemble(cfg, 0.25);
    const auto tail = fit_tail_model(cfg.f);
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<Rectangle> rects{{1, inf, 0, 1}, {1, 2, 0, 1}, {1, 2, 0, 0.5}, {1, 2, 0.5, 1}};
    const auto r = poisson_intensity_test(patterns, tail, rects, pinned_thresholds());
    for (const auto& row : r.details["rectangles"]) {
        const auto& q = row["rectangle"];
        const std::string hi = q[1].is_null() ? "inf" : fmt("%g", q[1].get<double>());
        const std::string label = fmt("(%g, ", q[0].get<double>()) + hi + fmt("] x [%g, %g]", q[2].get<double>(), q[3].get<double>());
        out.check(row["mean_ok"].get<bool>(),
                  label + fmt(" mean %.4f vs %.4f (rel err %.3f)", row["mean"].get<double>(), row["expected"].get<double>(),
                              row["relative_error"].get<double>()));
        out.check(row["dispersion_ok"].get<bool>(), label + fmt(" dispersion %.4f", row["dispersion"].get<double>()));
    }
    for (const auto& c : r.details["correlations"])
        out.check(c["ok"].get<bool>(), fmt("disjoint pair rank correlation %.4f", c["spearman"].get<double>()));
    out.summary = fmt("Poisson exceedances, H = 0.9, n = 2^14, %zu replicas", patterns.size());
    return out;
}

Outcome criterion6(unsigned threads) {
    Outcome out;
    constexpr std::size_t kReplicas = 32;
    auto cfg = base_config(0.9, threads);
    cfg.n = kN16;
    const GaussianSource source(cfg.lrd, cfg.source, cfg.n);
    std::vector<std::vector<double>> seqs(kReplicas, std::vector<double>(cfg.n));
    parallel_for(kReplicas / 2, resolve_threads(threads), [&](std::size_t p) {
        source.sample_pair(kSeed, streams::kEnsembleBase + p, seqs[2 * p], seqs[2 * p + 1]);
        for (auto* s : {&seqs[2 * p], &seqs[2 * p + 1]})
            for (auto& v : *s) v = cfg.f(v);
    });
    const auto ei = extremal_index_pooled(seqs);
    out.check(ei.estimate >= kExtremalLo && ei.estimate <= kExtremalHi,
              fmt("pipeline estimate %.4f in [%.2f, %.2f] (%zu exceedances, %zu blocks hit, b = %zu)", ei.estimate,
                  kExtremalLo, kExtremalHi, ei.exceedances, ei.blocks_with_exceedance, ei.block_length));

    std::vector<std::vector<double>> control(kReplicas);
    for (std::size_t k = 0; k < kReplicas; ++k) {
        CounterRng rng(kSeed, streams::kAuxiliaryBase + k);
        std::vector<double> u(cfg.n + 1);
        for (auto& v : u) v = rng.uniform();
        control[k] = oracle::moving_maximum(u);
    }
    const auto mm = extremal_index_pooled(control);
    out.check(mm.estimate >= kControlLo && mm.estimate <= kControlHi,
              fmt("moving-maximum control %.4f in [%.1f, %.1f]", mm.estimate, kControlLo, kControlHi));
    out.summary = fmt("extremal index, H = 0.9, n = 2^16, %zu replicas pooled", kReplicas);
    return out;
}

Outcome criterion7(unsigned) {
    Outcome out;
    const auto& rule = quad::gauss_hermite(64);
    double worst = 0.0;
    for (int j = 0; j <= 12; ++j)
        for (int k = 0; k <= 12; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * hermite_eval(j, rule.nodes[i]) * hermite_eval(k, rule.nodes[i]);
            const double expected = j == k ? oracle::factorial(static_cast<unsigned>(k)) : 0.0;
            worst = std::max(worst, std::abs(s - expected) / std::sqrt(oracle::factorial(j) * oracle::factorial(k)));
        }
    out.check(worst <= kOrthogonalityTol, fmt("Hermite orthogonality, j, k <= 12: max |E h_j h_k - d_jk k!| / sqrt(j! k!) = %.2e", worst));

    double residual = 0.0, vs_oracle = 0.0;
    const auto power = FunctionalSpec::power_abs(-0.7, true);
    const auto affine = FunctionalSpec::affine(FunctionalSpec::signed_power(-0.6), 1.5, 0.0);
    for (const auto* f : {&power, &affine}) {
        const NormingSequence seq(*f);
        for (double n : {1e3, 1e4, 1e5, 1e6, 1e7}) {
            const double a = seq(static_cast<std::uint64_t>(n));
            residual = std::max(residual, std::abs(n * abs_tail_probability(*f, a) - 1.0));
        }
    }
    const auto raw = FunctionalSpec::power_abs(-0.7, false);
    for (double n : {1e3, 1e6})
        vs_oracle = std::max(vs_oracle, std::abs(norming_constant(raw, n) / oracle::power_norming(-0.7, n) - 1.0));
    out.check(residual <= kInversionTol, fmt("a_n inversion residual max |n P(|f| > a_n) - 1| = %.2e", residual));
    out.note(fmt("a_n vs erf^-1 closed form, max relative difference %.2e", vs_oracle));

    const double psi = psi_constant(1e-10), q = oracle::psi_quadrature(), c = oracle::psi_closed_form();
    const double spread = std::max({std::abs(psi - q), std::abs(psi - c), std::abs(q - c)});
    out.check(spread <= kPsiTol, fmt("psi: library %.12f, Boost quadrature %.12f, ln pi + 1 - gamma %.12f (spread %.1e)", psi, q, c, spread));

    const double sigma = stable_sigma(1.5), sigma_ref = oracle::stable_sigma_three_halves();
    out.check(std::abs(sigma - sigma_ref) <= kSigmaTol, fmt("stable_sigma(1.5) = %.14f vs (2 pi)^(1/3) = %.14f", sigma, sigma_ref));

    const double u = 1e5;
    const double ratio = truncated_second_moment(raw, u) / (u * u * abs_tail_probability(raw, u));
    const double constant = oracle::karamata_constant(-0.7);
    out.check(std::abs(ratio / constant - 1.0) <= kKaramataTol,
              fmt("Karamata ratio at u = 1e5: %.6f vs oracle constant %.6f", ratio, constant));
    out.summary = "deterministic numeric oracles";
    return out;
}

Outcome criterion8(unsigned threads) {
    Outcome out;
    const double h = 0.7;
    LrdConfig lrd;
    lrd.hurst = h;
    const GaussianSource truncated(lrd, SourceKind::TruncatedMa, 1024);
    const GaussianSource stationary(lrd, SourceKind::StationaryMa, 1024);
    auto worst_gap = [&](const GaussianSource& s) {
        const auto& acov = s.autocovariance();
        double worst = 0.0;
        for (std::size_t k = 1; k <= 100; ++k)
            worst = std::max(worst, std::abs(acov[k] / acov[0] - oracle::fgn_autocovariance(h, static_cast<double>(k))));
        return worst;
    };
    const auto& acov = truncated.autocovariance();
    out.check(worst_gap(truncated) <= kAcfTol,
              fmt("truncated MA vs fGn autocorrelation, k <= 100: max gap %.4f (rho(1) %.4f vs %.4f)", worst_gap(truncated),
                  acov[1] / acov[0], oracle::fgn_autocovariance(h, 1)));
    out.note(fmt("stationary MA source vs fGn: max gap %.4f", worst_gap(stationary)));

    constexpr std::size_t kDraws = 40000, kLength = 1024;
    HermiteDiscretization disc;
    disc.times = {1.0};
    const HermiteProcessSampler sampler(1, h, disc);
    const auto draws = sampler.sample_marginal(0, kDraws, kSeed, streams::kReferenceBase);
    const double sampled = stats::variance(draws) / oracle::hermite1_variance(h);

    LrdConfig fgn_cfg;
    fgn_cfg.hurst = h;
    const GaussianSource fgn(fgn_cfg, SourceKind::Fgn, kLength);
    const double l1 = fgn_equivalent_l1(h);
    std::vector<double> sums(kDraws);
    parallel_for(kDraws / 2, resolve_threads(threads), [&](std::size_t p) {
        std::vector<double> a(kLength), b(kLength);
        fgn.sample_pair(kSeed, streams::kEnsembleBase + p, a, b);
        const double scale = 1.0 / (l1 * std::pow(static_cast<double>(kLength), h));
        sums[2 * p] = std::accumulate(a.begin(), a.end(), 0.0) * scale;
        sums[2 * p + 1] = std::accumulate(b.begin(), b.end(), 0.0) * scale;
    });
    const double summed = stats::variance(sums) / oracle::hermite1_variance(h);
    out.check(std::abs(sampled / summed - 1.0) <= kVarianceTol,
              fmt("kappa = 1 sampler variance / closed form %.4f vs fGn sums %.4f (rel diff %.4f)", sampled, summed,
                  std::abs(sampled / summed - 1.0)));
    out.summary = "generator cross-checks, H = 0.7";
    return out;
}

Outcome criterion9(unsigned threads) {
    Outcome out;
    const StableParams p{10.0 / 7.0, stable_sigma(10.0 / 7.0), 1.0, 0.0};
    const double rate = ks_null_pass_rate(p, 500, kPaths, kKsLevel, kSeed, threads);
    out.check(std::abs(rate - kCalibrationTarget) <= kCalibrationTol + 1e-12,
              fmt("null KS pass rate %.4f over 500 batches of 2000 vs 2000 (target %.2f +- %.2f)", rate, kCalibrationTarget,
                  kCalibrationTol));
    out.note(fmt("pinned seeds: ensemble %llu, limit draws %llu", static_cast<unsigned long long>(kSeed),
                 static_cast<unsigned long long>(kLimitSeed)));
    out.summary = "statistical calibration";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    unsigned threads = 0;
    app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(0, 9));
    app.add_option("--threads", threads, "worker threads");
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::function<Outcome(unsigned)>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
    bool all = true;
    for (const auto& [id, fn] : criteria) {
        if (only != 0 && id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn(threads);
        } catch (const std::exception& e) {
            o.passed = false;
            o.summary = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << 'C' << id << ' ' << (o.passed ? "PASS" : "FAIL") << "  " << o.summary << fmt(" [%.1fs]", secs) << '\n';
        for (const auto& d : o.details) std::cout << "    " << d << '\n';
        std::cout.flush();
        all = all && o.passed;
    }
    return all ? 0 : 1;
}
