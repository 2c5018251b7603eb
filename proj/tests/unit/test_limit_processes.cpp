#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lrdlab/limit_processes.hpp"
#include "lrdlab/stats.hpp"
#include "oracles.hpp"

using namespace lrdlab;

TEST(StableCf, ClosedForms) {
    const StableParams sym{1.5, 2.0, 0.0, 0.0};
    EXPECT_NEAR(std::abs(stable_cf(sym, 0.7) - std::exp(-std::pow(1.4, 1.5))), 0.0, 1e-15);
    const StableParams cauchy{1.0, 0.5, 0.0, 1.0};
    const auto c = stable_cf(cauchy, -2.0);
    EXPECT_NEAR(std::abs(c - std::exp(std::complex<double>(-1.0, -2.0))), 0.0, 1e-15);
    const StableParams skew{1.5, 1.0, 1.0, 0.0};
    EXPECT_NEAR(std::arg(stable_cf(skew, 1.0)), std::tan(0.75 * std::numbers::pi), 1e-14);
    EXPECT_EQ(stable_cf(skew, 0.0), std::complex<double>(1.0, 0.0));
}

TEST(StableDraw, CauchyAgainstCdf) {
    const StableParams p{1.0, 2.0, 0.0, 0.0};
    const auto x = stable_sample(p, 20000, 5);
    const auto r = stats::ks_one_sample(x, [](double v) { return 0.5 + std::atan(v / 2.0) / std::numbers::pi; });
    EXPECT_GT(r.p_value, 0.01);
}

TEST(StableDraw, LevyDistributionAgainstCdf) {
    // S_{1/2}(c, 1, 0) is the Levy law with scale c: F(x) = erfc(sqrt(c / (2x))).
    const double c = 1.5;
    const auto x = stable_sample({0.5, c, 1.0, 0.0}, 20000, 6);
    for (double v : x) ASSERT_GT(v, 0.0);
    const auto r = stats::ks_one_sample(x, [c](double v) { return v <= 0 ? 0.0 : std::erfc(std::sqrt(c / (2.0 * v))); });
    EXPECT_GT(r.p_value, 0.01);
}

TEST(StableDraw, EmpiricalCfMatches) {
    const auto thetas = stats::linspace(0.1, 3.0, 30);
    for (const StableParams p : {StableParams{1.5, 1.0, 0.0, 0.0}, StableParams{1.5, 1.2, 1.0, 0.3},
                                 StableParams{1.0, 0.8, 1.0, 0.0}, StableParams{1.2, 1.0, -0.5, 0.0}}) {
        const auto x = stable_sample(p, 40000, 7);
        const double d = stats::ecf_distance(x, [&](double t) { return stable_cf(p, t); }, thetas);
        // sup over 30 points of |ecf - cf|, each with standard deviation below 1/sqrt(2m).
        EXPECT_LT(d, 5.0 / std::sqrt(2.0 * 40000.0)) << p.alpha << " " << p.beta;
    }
}

TEST(StableLevyPath, MarginalScaling) {
    const std::vector<double> grid{0.25, 0.5, 1.0};
    const StableParams p{1.5, 1.0, 0.5, 0.0};
    std::vector<double> at_quarter, at_one;
    for (std::uint64_t s = 0; s < 20000; ++s) {
        const auto path = stable_levy_path(p, grid, 3, streams::kReferenceBase + s);
        at_quarter.push_back(path.values[0]);
        at_one.push_back(path.values[2]);
    }
    const auto thetas = stats::linspace(0.1, 3.0, 30);
    StableParams quarter = p;
    quarter.sigma = p.sigma * std::pow(0.25, 1.0 / 1.5);
    EXPECT_LT(stats::ecf_distance(at_quarter, [&](double t) { return stable_cf(quarter, t); }, thetas), 0.03);
    EXPECT_LT(stats::ecf_distance(at_one, [&](double t) { return stable_cf(p, t); }, thetas), 0.03);
}

TEST(StableLevyPath, AlphaOneSkewedMarginal) {
    // For alpha = 1 the Levy motion at time t is S_1(sigma t, beta, 0).
    const std::vector<double> grid{0.5};
    const StableParams p{1.0, 1.0, 1.0, 0.0};
    std::vector<double> x;
    for (std::uint64_t s = 0; s < 20000; ++s) x.push_back(stable_levy_path(p, grid, 9, streams::kReferenceBase + s).values[0]);
    const StableParams target{1.0, 0.5, 1.0, 0.0};
    const auto thetas = stats::linspace(0.1, 3.0, 30);
    EXPECT_LT(stats::ecf_distance(x, [&](double t) { return stable_cf(target, t); }, thetas), 0.03);
}

TEST(StableLevyPath, GridValidation) {
    const StableParams p{1.5, 1.0, 0.0, 0.0};
    EXPECT_THROW(stable_levy_path(p, std::vector<double>{0.5, 0.25}, 1), Error);
    EXPECT_THROW(stable_levy_path(p, std::vector<double>{}, 1), Error);
    const auto path = stable_levy_path(p, std::vector<double>{0.0, 0.5}, 1);
    EXPECT_EQ(path.values[0], 0.0);
    std::ostringstream os;
    write_csv(path, os);
    EXPECT_NE(os.str().find("t,value\n"), std::string::npos);
}

TEST(HermiteVariance, MatchesOracle) {
    for (double h : {0.6, 0.75, 0.9}) EXPECT_NEAR(hermite_process_variance(1, h, 1.0), oracle::hermite1_variance(h), 1e-12);
    for (double h : {0.8, 0.9}) EXPECT_NEAR(hermite_process_variance(2, h, 1.0), oracle::hermite2_variance(h), 1e-12);
    EXPECT_NEAR(hermite_process_variance(2, 0.9, 0.5) / hermite_process_variance(2, 0.9, 1.0), std::pow(0.5, 1.6), 1e-14);
    EXPECT_THROW(hermite_process_variance(2, 0.7, 1.0), Error);
}

TEST(HermiteSampler, OrderOneIsGaussianWithExactVariance) {
    const HermiteProcessSampler s(1, 0.7, {});
    EXPECT_LT(s.bias_estimate(), 0.02);
    const auto paths = s.sample_paths(11, streams::kReferenceBase, 5000);
    std::vector<double> last(paths.rows());
    for (Eigen::Index i = 0; i < paths.rows(); ++i) last[static_cast<std::size_t>(i)] = paths(i, paths.cols() - 1);
    EXPECT_GT(stats::anderson_darling_normal(last).p_value, 0.01);
    const double v = s.discrete_variance(static_cast<std::size_t>(paths.cols() - 1));
    // Sample variance of 5000 normals has relative standard deviation sqrt(2/4999).
    EXPECT_NEAR(stats::variance(last) / v, 1.0, 4.0 * std::sqrt(2.0 / 4999.0));
}

TEST(HermiteSampler, OrderTwoMomentsAndScaling) {
    HermiteDiscretization disc;
    disc.times = {0.125, 0.25, 0.5, 1.0};
    const HermiteProcessSampler s(2, 0.9, disc);
    EXPECT_NEAR(s.self_similarity(), 0.8, 1e-15);
    const auto paths = s.sample_paths(12, streams::kReferenceBase, 5000);
    std::vector<double> lx, ly;
    for (Eigen::Index j = 0; j < paths.cols(); ++j) {
        std::vector<double> col(static_cast<std::size_t>(paths.rows()));
        for (Eigen::Index i = 0; i < paths.rows(); ++i) col[static_cast<std::size_t>(i)] = paths(i, j);
        const double se = std::sqrt(stats::variance(col) / static_cast<double>(col.size()));
        EXPECT_LT(std::abs(stats::mean(col)), 4.0 * se) << "column " << j;
        EXPECT_EQ(s.discrete_mean(static_cast<std::size_t>(j)), 0.0);
        lx.push_back(std::log(disc.times[static_cast<std::size_t>(j)]));
        ly.push_back(std::log(stats::variance(col)));
    }
    EXPECT_NEAR(stats::ols(lx, ly).slope, 1.6, 0.1);
    // Skewed to the right: the second-order chaos is not Gaussian.
    std::vector<double> last(static_cast<std::size_t>(paths.rows()));
    for (Eigen::Index i = 0; i < paths.rows(); ++i) last[static_cast<std::size_t>(i)] = paths(i, paths.cols() - 1);
    EXPECT_LT(stats::anderson_darling_normal(last).p_value, 1e-6);
}

TEST(HermiteSampler, DiagonalTermWithoutExclusion) {
    HermiteDiscretization disc;
    disc.diagonal_exclusion = false;
    const HermiteProcessSampler s(2, 0.9, disc);
    EXPECT_GT(s.discrete_mean(disc.times.size() - 1), 0.0);
}

TEST(HermiteSampler, RowsIndependentOfBatching) {
    const HermiteProcessSampler s(2, 0.9, {});
    const auto one = s.sample_paths(4, 100, 1);
    const auto many = s.sample_paths(4, 100, 300);
    for (Eigen::Index j = 0; j < one.cols(); ++j) EXPECT_EQ(one(0, j), many(0, j));
    const auto shifted = s.sample_paths(4, 101, 1);
    for (Eigen::Index j = 0; j < one.cols(); ++j) EXPECT_EQ(shifted(0, j), many(1, j));
}

TEST(HermiteSampler, Errors) {
    try {
        HermiteProcessSampler(2, 0.8, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridTooCoarse);
    }
    EXPECT_THROW(HermiteProcessSampler(3, 0.9, {}), Error);
    EXPECT_THROW(HermiteProcessSampler(2, 0.7, {}), Error);
    EXPECT_THROW(HermiteProcessSampler(1, 0.4, {}), Error);
}

TEST(HermiteSampler, SinglePathHelper) {
    const auto p = hermite_process_sample(1, 0.8, {}, 3);
    EXPECT_EQ(p.times.front(), 0.0);
    EXPECT_EQ(p.values.front(), 0.0);
    EXPECT_EQ(p.times.size(), 5u);
    EXPECT_EQ(p.metadata["seed"], 3);
}
