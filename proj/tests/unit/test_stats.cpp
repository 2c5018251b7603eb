#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lrdlab/experiments.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/stats.hpp"

using namespace lrdlab;

namespace {

std::vector<double> normals(std::size_t m, std::uint64_t stream) {
    CounterRng rng(99, stream);
    std::vector<double> x(m);
    for (auto& v : x) v = rng.normal();
    return x;
}

}  // namespace

TEST(Kolmogorov, KnownQuantiles) {
    // Asymptotic critical values of the Kolmogorov distribution.
    EXPECT_NEAR(stats::kolmogorov_q(1.3581), 0.05, 1e-4);
    EXPECT_NEAR(stats::kolmogorov_q(1.6276), 0.01, 1e-4);
    EXPECT_EQ(stats::kolmogorov_q(0.0), 1.0);
}

TEST(KsOneSample, NullAndAlternative) {
    const auto x = normals(5000, 1);
    EXPECT_GT(stats::ks_one_sample(x, stats::normal_cdf).p_value, 0.01);
    EXPECT_LT(stats::ks_one_sample(x, [](double v) { return stats::normal_cdf(v - 0.2); }).p_value, 1e-6);
}

TEST(KsTwoSample, StatisticByHand) {
    const std::vector<double> a{1, 2, 3, 4}, b{2.5, 3.5, 10};
    // The ECDF gap is largest on [2, 2.5): 2/4 against 0.
    EXPECT_NEAR(stats::ks_two_sample(a, b).statistic, 0.5, 1e-15);
    const auto x = normals(3000, 2), y = normals(3000, 3);
    EXPECT_GT(stats::ks_two_sample(x, y).p_value, 0.01);
}

TEST(KsTwoSample, NullPassRateForStableDraws) {
    const double rate = ks_null_pass_rate({1.5, 1.0, 0.0, 0.0}, 300, 500, 0.01, 17, 1);
    // Binomial(300, 0.99) lies within 0.99 +- 0.02 with probability above 0.99.
    EXPECT_NEAR(rate, 0.99, 0.02);
}

TEST(EmpiricalCf, Normal) {
    const auto x = normals(40000, 4);
    const auto thetas = stats::linspace(0.1, 3.0, 30);
    const double d = stats::ecf_distance(x, [](double t) { return std::complex<double>(std::exp(-0.5 * t * t), 0.0); }, thetas);
    EXPECT_LT(d, 0.02);
    EXPECT_NEAR(std::abs(stats::empirical_cf(x, 0.0)), 1.0, 1e-15);
}

TEST(Descriptive, SmallSamples) {
    const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
    EXPECT_DOUBLE_EQ(stats::mean(x), 31.0 / 8.0);
    EXPECT_NEAR(stats::variance(x), 52.875 / 7.0, 1e-12);
    EXPECT_DOUBLE_EQ(stats::quantile(x, 0.5), 3.5);
    EXPECT_DOUBLE_EQ(stats::quantile(x, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(stats::quantile(x, 1.0), 9.0);
    EXPECT_DOUBLE_EQ(stats::interquantile_range(x), stats::quantile(x, 0.75) - stats::quantile(x, 0.25));
    const auto r = stats::ranks(std::vector<double>{10, 20, 20, 5});
    EXPECT_EQ(r, (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, PearsonAndSpearman) {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10}, z{1, 8, 27, 64, 125};
    EXPECT_NEAR(stats::pearson(x, y), 1.0, 1e-15);
    EXPECT_NEAR(stats::spearman(x, z), 1.0, 1e-15);
    EXPECT_LT(stats::pearson(x, z), 1.0);
    const std::vector<double> w{5, 4, 3, 2, 1};
    EXPECT_NEAR(stats::spearman(x, w), -1.0, 1e-15);
}

TEST(Ols, ExactLine) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto fit = stats::ols(x, y);
    EXPECT_NEAR(fit.slope, 2.0, 1e-14);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
    EXPECT_NEAR(fit.slope_se, 0.0, 1e-12);
}

TEST(BatchMeans, IidStandardError) {
    const auto x = normals(100000, 5);
    EXPECT_NEAR(stats::batch_means_se(x, 50) * std::sqrt(100000.0), 1.0, 0.25);
}

TEST(SampleAutocovariance, MatchesDirectSum) {
    const auto x = normals(1000, 6);
    const auto acov = stats::sample_autocovariance(x, 5);
    const double m = stats::mean(x);
    for (std::size_t k = 0; k <= 5; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < x.size(); ++i) s += (x[i] - m) * (x[i + k] - m);
        EXPECT_NEAR(acov[k], s / 1000.0, 1e-12);
    }
}

TEST(AndersonDarling, NormalAndExponential) {
    EXPECT_GT(stats::anderson_darling_normal(normals(2000, 7)).p_value, 0.01);
    CounterRng rng(1, 8);
    std::vector<double> e(2000);
    for (auto& v : e) v = rng.exponential();
    EXPECT_LT(stats::anderson_darling_normal(e).p_value, 1e-6);
    // Extremely non-normal: the statistic is far beyond the approximation's range.
    std::vector<double> spike(5000, 0.0);
    spike[0] = 1e6;
    spike[1] = 1.0;
    const auto r = stats::anderson_darling_normal(spike);
    EXPECT_GT(r.statistic, 200.0);
    EXPECT_LT(r.p_value, 1e-12);
}
